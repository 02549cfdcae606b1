"""Ground truth for the mini-benchmark, computed from the dataset files and
the recorded tool outputs with plain Python geometry."""
import csv
import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATASET = ROOT / "dataset"
FIXTURES = ROOT / "fixtures"


def fixture(tool, **match):
    for rec in json.loads((FIXTURES / tool / "records.json").read_text()):
        if all(rec["args"].get(k) == v for k, v in match.items()):
            return rec["result"]
    raise KeyError((tool, match))


def shoelace(pts):
    s = 0
    for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
        s += x1 * y2 - x2 * y1
    return abs(s) / 2


def perimeter(pts):
    return sum(math.dist(a, b) for a, b in zip(pts, pts[1:] + pts[:1]))


def props(name):
    return json.loads((DATASET / "slides" / f"{name}.properties.json").read_text())


def nuclei(roi):
    return fixture("segment_and_classify_nuclei_in_histology_roi_tool", image_path=f"rois/{roi}.png")["nuclei"]


def text_scores(roi):
    res = fixture("score_single_histology_image_using_text_tool", image_path=f"rois/{roi}.png")
    return {k: float(v) for k, v in (s.split(": ") for s in res["similarity_scores"])}


truth = {}
p = props("S1")
truth["dq01"] = [{"slide_id": "S1", "magnification": p["magnification"], "mpp": p["mpp"], "level_count": p["level_count"]}]
truth["dq02"] = [{"number_of_slides": sum(1 for f in (DATASET / "slides").iterdir() if f.suffix in {".svs", ".tif", ".ndpi"})}]

groups = {}
with open(DATASET / "metadata" / "clinical.csv") as fh:
    for row in csv.DictReader(fh):
        groups.setdefault(row["diagnosis"], []).append(int(row["age"]))
truth["dq03"] = [{"diagnosis": d, "n_cases": len(a), "mean_age": round(sum(a) / len(a), 2)} for d, a in sorted(groups.items())]

w, h = props("S2")["level_dimensions"][1]
truth["dq04"] = [{"level": 1, "width": w, "height": h}]

counts = {}
for n in nuclei("roi_01"):
    counts[n["type"]] = counts.get(n["type"], 0) + 1
truth["cq01"] = [{"cell_type": t, "count": c} for t, c in sorted(counts.items())]

areas = [shoelace(n["contour"]) for n in nuclei("roi_02") if n["type"] == "neoplastic"]
truth["cq02"] = [{"mean_neoplastic_area": round(sum(areas) / len(areas), 2)}]

truth["cq03"] = [
    {"nucleus_id": n["id"], "area": round(shoelace(n["contour"]), 2), "perimeter": round(perimeter(n["contour"]), 2)}
    for n in nuclei("roi_03")
    if n["type"] == "inflammatory"
]

s = text_scores("roi_04")
truth["pq01"] = [{"predicted_class": max(s, key=s.get)}]

rois = sorted(f.stem for f in (DATASET / "rois").glob("*.png"))
truth["pq02"] = [{"image_id": r, "tumor_probability": text_scores(r)["tumor"]} for r in rois]
truth["pq03"] = [{"n_tumor_patches": sum(1 for r in rois if max(text_scores(r), key=text_scores(r).get) == "tumor")}]

truth["sq01"] = [{"slide_id": "S3", "predicted_label": fixture("predict_wsi_label_tool", slide_path="slides/S3.tif")["predicted_label"]}]

tissue = fixture("extract_tissue_in_wsi_tool", slide_path="slides/S1.svs")["tissue_contours"]
truth["sq02"] = [{"number_of_tissue_regions": len(tissue), "total_tissue_area": round(sum(shoelace(t["contour"]) for t in tissue), 1)}]

for qid, records in truth.items():
    path = ROOT / "suite" / "truth" / f"{qid}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(records, indent=2) + "\n")
print(json.dumps(truth, indent=1)[:3000])
