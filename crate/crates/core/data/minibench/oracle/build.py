"""Generates the synthetic mini-benchmark: dataset tree, tool fixtures,
question files and replay scripts. Ground truth is produced separately by
truth.py from the files written here.

Run from any directory; everything is written relative to this file.
"""
import json
import math
import random
import struct
import zlib
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATASET = ROOT / "dataset"
FIXTURES = ROOT / "fixtures"
SUITE = ROOT / "suite"
REPLAY = ROOT / "replay"

rng = random.Random(42)


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def png(path, rgb, size=8):
    raw = b"".join(b"\x00" + bytes(rgb) * size for _ in range(size))

    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body))

    ihdr = struct.pack(">IIBBBBB", size, size, 8, 2, 0, 0, 0)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"IDAT", zlib.compress(raw)) + chunk(b"IEND", b""))


# ---------------------------------------------------------------- dataset

SLIDES = {
    "S1.svs": dict(magnification=40, mpp=0.25, dims=(40000, 30000), levels=3, vendor="aperio"),
    "S2.svs": dict(magnification=20, mpp=0.5, dims=(24000, 18000), levels=2, vendor="aperio"),
    "S3.tif": dict(magnification=40, mpp=0.2527, dims=(50000, 40000), levels=4, vendor="generic-tiff"),
    "S4.ndpi": dict(magnification=20, mpp=0.499, dims=(30000, 20000), levels=3, vendor="hamamatsu"),
}


def slide_properties(s):
    w, h = s["dims"]
    downs = [4**i for i in range(s["levels"])]
    return {
        "magnification": s["magnification"],
        "mpp": s["mpp"],
        "level_count": s["levels"],
        "dimensions": [w, h],
        "level_dimensions": [[w // d, h // d] for d in downs],
        "level_downsamples": downs,
        "vendor": s["vendor"],
    }


PROPS = {name: slide_properties(s) for name, s in SLIDES.items()}
for name, props in PROPS.items():
    (DATASET / "slides").mkdir(parents=True, exist_ok=True)
    (DATASET / "slides" / name).write_bytes(f"synthetic slide {name}\n".encode())
    write_json(DATASET / "slides" / f"{name.split('.')[0]}.properties.json", props)
(DATASET / "slides" / "README.txt").write_text("Synthetic slides. Each *.properties.json describes the slide with the same stem.\n")
png(DATASET / "slides" / "S1_thumbnail.png", (230, 200, 220))

ROI_COLORS = {"roi_01": (200, 120, 180), "roi_02": (240, 190, 210), "roi_03": (190, 100, 170), "roi_04": (210, 110, 190)}
for roi, color in ROI_COLORS.items():
    png(DATASET / "rois" / f"{roi}.png", color)

DIAGNOSES = ["IDC", "ILC", "IDC", "IDC", "ILC", "mucinous", "IDC", "ILC", "IDC", "mucinous"]
rows = ["slide_id,patient_id,diagnosis,age,grade"]
for i, dx in enumerate(DIAGNOSES):
    rows.append(f"S{i + 1},P{100 + i},{dx},{rng.randint(34, 82)},{rng.randint(1, 3)}")
(DATASET / "metadata").mkdir(parents=True, exist_ok=True)
(DATASET / "metadata" / "clinical.csv").write_text("\n".join(rows) + "\n")


# ---------------------------------------------------------------- tool outputs

def star_polygon(cx, cy, radius, k):
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(k))
    pts = []
    for a in angles:
        r = radius * rng.uniform(0.7, 1.3)
        p = [round(cx + r * math.cos(a)), round(cy + r * math.sin(a))]
        if not pts or p != pts[-1]:
            pts.append(p)
    return pts


CELL_TYPES = ["neoplastic", "inflammatory", "connective", "dead", "epithelial"]
WEIGHTS = [0.4, 0.25, 0.2, 0.05, 0.1]
NUCLEI = {}
for roi, n in [("roi_01", 30), ("roi_02", 25), ("roi_03", 20), ("roi_04", 15)]:
    nuclei = []
    for i in range(n):
        cx, cy = rng.randint(20, 236), rng.randint(20, 236)
        cell_type = rng.choices(CELL_TYPES, WEIGHTS)[0]
        nuclei.append({
            "id": i + 1,
            "type": cell_type,
            "centroid": [cx, cy],
            "contour": star_polygon(cx, cy, rng.uniform(4, 9), rng.randint(7, 11)),
        })
    NUCLEI[roi] = nuclei

CLASSES = ["tumor", "stroma", "necrosis"]
TEXT_SCORES = {
    "roi_01": [0.72, 0.2, 0.08],
    "roi_02": [0.24, 0.61, 0.15],
    "roi_03": [0.58, 0.33, 0.09],
    "roi_04": [0.81, 0.12, 0.07],
}

TISSUE = [star_polygon(cx, cy, 2500, 24) for cx, cy in [(9000, 8000), (21000, 14000), (31000, 22000)]]


def records(tool, recs):
    write_json(FIXTURES / tool / "records.json", recs)


records("retrieve_properties_from_wsi_tool", [
    {"args": {"slide_path": f"slides/{name}"}, "result": props} for name, props in PROPS.items()
])
records("get_wsi_level_dimensions_tool", [
    {
        "args": {"slide_path": f"slides/{name}", "level": level},
        "result": {"level": level, "width": wh[0], "height": wh[1], "downsample": props["level_downsamples"][level]},
    }
    for name, props in PROPS.items()
    for level, wh in enumerate(props["level_dimensions"])
])
records("dataset_of_wsi_get_valid_slide_paths_tool", [{
    "args": {"wsi_source": "slides"},
    "result": {
        "valid_slide_paths": [f"{{dataset_root}}/slides/{name}" for name in sorted(PROPS)],
        "number_of_slides": len(PROPS),
        "operation_log": "Scanned slides for .svs, .tif and .ndpi files.",
    },
}])
records("segment_and_classify_nuclei_in_histology_roi_tool", [
    {
        "args": {"image_path": f"rois/{roi}.png"},
        "result": {
            "nuclei": nuclei,
            "counts_by_type": {t: sum(1 for n in nuclei if n["type"] == t) for t in CELL_TYPES},
            "operation_log": f"Segmented {len(nuclei)} nuclei in {roi}.png at 40x.",
        },
    }
    for roi, nuclei in NUCLEI.items()
])
records("score_single_histology_image_using_text_tool", [
    {
        "args": {"image_path": f"rois/{roi}.png", "classes": CLASSES},
        "result": {
            "similarity_scores": [f"{c}: {p}" for c, p in zip(CLASSES, scores)],
            "operation_log": f"Scored {roi}.png against {len(CLASSES)} class prompts with softmax.",
        },
    }
    for roi, scores in TEXT_SCORES.items()
])
records("predict_wsi_label_tool", [{
    "args": {"slide_path": "slides/S3.tif", "classes": ["benign", "malignant"]},
    "result": {
        "predicted_label": "malignant",
        "probabilities": {"benign": 0.18, "malignant": 0.82},
        "operation_log": "Zero-shot slide classification over 2 classes.",
    },
}])
records("extract_tissue_in_wsi_tool", [{
    "args": {"slide_path": "slides/S1.svs"},
    "result": {
        "tissue_contours": [{"tissue_id": i, "contour": c} for i, c in enumerate(TISSUE)],
        "number_of_tissue_regions": len(TISSUE),
        "operation_log": "Tissue segmentation at level 0 coordinates.",
    },
}])
records("dataset_of_wsi_tissue_segmentation_tool", [{
    "args": {"wsi_source": "slides"},
    "result": {
        "dir_with_geojson_contours": "{working_dir}/tissue_seg/contours_geojson",
        "dir_with_tissue_contours_jpg": "{working_dir}/tissue_seg/contours",
        "dir_with_slide_thumbnails": "{working_dir}/tissue_seg/thumbnails",
        "tissue_segmentation_log_file": "{working_dir}/tissue_seg/log.txt",
        "tissue_segmentation_config_file": "{working_dir}/tissue_seg/config.json",
        "number_of_processed_segmentations": len(PROPS),
        "operation_log": "Segmented tissue in 4 slides.",
    },
}])
records("trident_docs_retriever", [{
    "args": {},
    "result": {"passages": [
        "Tissue segmentation writes one GeoJSON file per slide under the job directory.",
        "Patch coordinates are stored per slide in HDF5 files.",
    ]},
}])
records("create_wsi_classification_splits", [{
    "args": {"metadata_csv": "metadata/clinical.csv"},
    "result": {
        "splits_dir": "{working_dir}/splits",
        "fold_sizes": [2, 2, 2, 2, 2],
        "operation_log": "Created 5 stratified folds.",
    },
}])


# ---------------------------------------------------------------- questions

OUT = (
    "Save your result as `answer.json` in the working directory: a JSON array of objects (list of dictionaries), "
    "written with 4-space indentation. "
)


def question(qid, category, data_type, text, additional, output, id_column, tolerances, rationale, **paths):
    q = {"id": qid, "data_type": data_type, **paths, "question": text,
         "additional_instructions": "Your working directory is {working_dir}; keep intermediate files there. " + additional,
         "output_instructions": OUT + output, "id_column": id_column,
         "columns_to_compare_and_tolerance": tolerances, "rationale": rationale,
         "is_pathologist_verified": False, "is_biomedical_scientist_verified": True, "category": category}
    write_json(SUITE / "questions" / f"{qid}.json", q)


question("dq01", "DataQA", "single_wsi",
         "What are the scan magnification, the microns per pixel and the number of pyramid levels of the slide at {path_to_slide}?",
         "Read the values from the slide metadata.",
         'Use the keys slide_id (file name without extension), magnification, mpp and level_count. '
         'Example: [{"slide_id": "S0", "magnification": 20, "mpp": 0.5, "level_count": 2}]',
         None, {"magnification": 0.01, "mpp": 0.01, "level_count": 0.01},
         "Resolution metadata decides which level to analyse.", slide_relative_path="slides/S1.svs")
question("dq02", "DataQA", "multiple_wsi",
         "How many whole-slide images with extension .svs, .tif or .ndpi are in {path_to_dataset}?",
         "Ignore thumbnails, metadata and text files.",
         'Use one object with the key number_of_slides. Example: [{"number_of_slides": 7}]',
         None, {"number_of_slides": 0.01},
         "Dataset inventory precedes any batch processing.", dataset_relative_path="slides")
question("dq03", "DataQA", "summary_of_multiple_wsi",
         "Using the clinical table at {path_to_metadata}, report for each diagnosis the number of cases and the mean patient age.",
         "Each row of the table is one case.",
         'One object per diagnosis with keys diagnosis, n_cases and mean_age (two decimals). '
         'Example: [{"diagnosis": "IDC", "n_cases": 3, "mean_age": 55.67}]',
         "diagnosis", {"n_cases": 0.01, "mean_age": 0.02},
         "Cohort summaries put slide-level findings in context.",
         dataset_relative_path="slides", path_to_metadata="metadata/clinical.csv")
question("dq04", "DataQA", "single_wsi",
         "What are the width and height in pixels of pyramid level 1 of the slide at {path_to_slide}?",
         "Level 0 is the full-resolution level.",
         'Use the keys level, width and height. Example: [{"level": 1, "width": 1000, "height": 800}]',
         None, {"width": 0.01, "height": 0.01},
         "Level geometry is needed to map coordinates between levels.", slide_relative_path="slides/S2.svs")
question("cq01", "CellularQA", "single_wsi",
         "How many nuclei of each cell type are in the histology region at {path_to_slide}?",
         "Report every cell type that occurs at least once.",
         'One object per cell type with keys cell_type and count. Example: [{"cell_type": "neoplastic", "count": 12}]',
         "cell_type", {"count": 0.05},
         "Cell composition characterises the tumour microenvironment.", slide_relative_path="rois/roi_01.png")
question("cq02", "CellularQA", "single_wsi",
         "What is the mean contour area, in pixels, of the neoplastic nuclei in the histology region at {path_to_slide}?",
         "Use the nucleus contours; round to two decimals.",
         'Use one object with the key mean_neoplastic_area. Example: [{"mean_neoplastic_area": 120.5}]',
         None, {"mean_neoplastic_area": 0.05},
         "Nuclear enlargement is a marker of atypia.", slide_relative_path="rois/roi_02.png")
question("cq03", "CellularQA", "single_wsi",
         "For every inflammatory nucleus in the histology region at {path_to_slide}, report its contour area and perimeter in pixels.",
         "Round both values to two decimals.",
         'One object per nucleus with keys area and perimeter, in any order. Example: [{"area": 80.0, "perimeter": 33.1}]',
         None, {"area": 0.02, "perimeter": 0.02},
         "Lymphocyte size and shape help separate immune cell populations.", slide_relative_path="rois/roi_03.png")
question("pq01", "PatchQA", "single_wsi",
         "Classify the histology patch at {path_to_slide} as tumor, stroma or necrosis.",
         "Use zero-shot image-text scoring and take the highest-scoring class.",
         'Use one object with the key predicted_class. Example: [{"predicted_class": "stroma"}]',
         None, {"predicted_class": ["tumor", "tumour"]},
         "Patch-level tissue typing underlies region selection.", slide_relative_path="rois/roi_04.png")
question("pq02", "PatchQA", "multiple_wsi",
         "For every PNG patch in {path_to_dataset}, what is the tumor probability among the classes tumor, stroma and necrosis?",
         "Use zero-shot image-text scoring with softmax over the three classes.",
         'One object per patch with keys image_id (file name without extension) and tumor_probability. '
         'Example: [{"image_id": "roi_00", "tumor_probability": 0.5}]',
         "image_id", {"tumor_probability": 0.05},
         "Per-patch tumor likelihood supports region ranking.", dataset_relative_path="rois")
question("pq03", "PatchQA", "multiple_wsi",
         "How many of the PNG patches in {path_to_dataset} are classified as tumor when choosing among tumor, stroma and necrosis?",
         "Use zero-shot image-text scoring and the highest-scoring class per patch.",
         'Use one object with the key n_tumor_patches. Example: [{"n_tumor_patches": 1}]',
         None, {"n_tumor_patches": 0.01},
         "Counting tumor patches estimates tumor burden.", dataset_relative_path="rois")
question("sq01", "SlideQA", "single_wsi",
         "Is the slide at {path_to_slide} benign or malignant?",
         "Use a slide-level zero-shot classifier with the classes benign and malignant.",
         'Use the keys slide_id and predicted_label. Example: [{"slide_id": "S0", "predicted_label": "benign"}]',
         None, {"predicted_label": ["malignant"]},
         "Slide-level triage prioritises review.", slide_relative_path="slides/S3.tif")
question("sq02", "SlideQA", "single_wsi",
         "How many separate tissue regions does the slide at {path_to_slide} contain, and what is their total area in level-0 pixels?",
         "Segment the tissue and sum the contour areas of all regions.",
         'Use one object with keys number_of_tissue_regions and total_tissue_area. '
         'Example: [{"number_of_tissue_regions": 2, "total_tissue_area": 1500000.0}]',
         None, {"number_of_tissue_regions": 0.01, "total_tissue_area": 0.02},
         "Tissue area normalises counts and guides sampling.", slide_relative_path="slides/S1.svs")


# ---------------------------------------------------------------- replays

WRITE = 'open("${working_dir}/answer.json", "w").write(json.dumps(rows, indent=4))'


def step(thought, code=""):
    return {"thought": thought, "code": code.strip("\n")}


def replay(mode, qid, steps, suffix=""):
    write_json(REPLAY / mode / f"{qid}{suffix}.json", steps)


LLM_ONLY = {
    "dq01": "Slides like this are usually scanned at 40x with about 0.25 microns per pixel and three levels.",
    "dq02": "I cannot list the directory, but the dataset probably holds a handful of slides.",
    "dq03": "Without reading the table I would expect mean ages around 60 for each diagnosis.",
    "dq04": "Level 1 is usually a quarter of the full resolution in each dimension.",
    "cq01": "A typical breast tumour region has mostly neoplastic nuclei with some inflammatory cells.",
    "cq02": "Neoplastic nuclei are commonly 100 to 200 square pixels at 40x.",
    "cq03": "Inflammatory nuclei are small and round, roughly 60 square pixels.",
    "pq01": "The patch most likely shows tumor.",
    "pq02": "Tumor probability depends on each patch; I cannot compute it without the images.",
    "pq03": "Probably about half of the patches show tumor.",
    "sq01": "The slide is most likely malignant.",
    "sq02": "Tissue sections usually form one to three regions.",
}
for qid, text in LLM_ONLY.items():
    replay("llm_only", qid, [step(text)])

# Iterative baseline: code execution without the tool catalog.
NO_TOOL = "I will try the analysis tool directly."
replay("iterative", "dq01", [
    step("No tools are bound; the properties file next to the slide has the metadata.", """
import json
meta = json.loads(open("${dataset_root}/slides/S1.properties.json").read())
rows = [{"slide_id": "S1", "magnification": meta["magnification"], "mpp": meta["mpp"], "level_count": meta["level_count"]}]
""" + WRITE + """
print(rows)
"""),
    step("The answer file is written.", 'final_answer(open("${working_dir}/answer.json").read())'),
])
replay("iterative", "dq02", [
    step("List the directory first.", """
import pathlib
names = sorted([p.name for p in pathlib.Path("${dataset_root}/slides").iterdir()])
print(names)
"""),
    step("Count only the slide extensions.", """
import json
import pathlib
exts = [".svs", ".tif", ".ndpi"]
slides = [p for p in pathlib.Path("${dataset_root}/slides").iterdir() if p.suffix in exts]
rows = [{"number_of_slides": len(slides)}]
""" + WRITE + """
final_answer(len(slides))
"""),
])
replay("iterative", "dq03", [
    step("Parse the CSV and summarise by diagnosis.", """
import json
lines = open("${dataset_root}/metadata/clinical.csv").read().strip().split("\\n")
header = lines[0].split(",")
groups = {}
for line in lines[1:]:
    cells = line.split(",")
    groups.setdefault(cells[2], []).append(int(cells[4]))
rows = [{"diagnosis": d, "n_cases": len(v), "mean_age": round(sum(v) / len(v), 2)} for d, v in sorted(groups.items())]
""" + WRITE + """
print(header)
print(rows)
"""),
    step("The header shows age is column 3, not 4. Recompute.", """
import json
lines = open("${dataset_root}/metadata/clinical.csv").read().strip().split("\\n")
groups = {}
for line in lines[1:]:
    cells = line.split(",")
    groups.setdefault(cells[2], []).append(int(cells[3]))
rows = [{"diagnosis": d, "n_cases": len(v), "mean_age": round(sum(v) / len(v), 2)} for d, v in sorted(groups.items())]
""" + WRITE + """
final_answer(rows)
"""),
])
replay("iterative", "dq04", [
    step("Inspect the slide metadata.", """
import json
meta = json.loads(open("${dataset_root}/slides/S2.properties.json").read())
print(meta["level_dimensions"])
"""),
    step("Level 1 is the second entry.", """
import json
meta = json.loads(open("${dataset_root}/slides/S2.properties.json").read())
w, h = meta["level_dimensions"][1]
rows = [{"level": 1, "width": w, "height": h}]
""" + WRITE + """
final_answer(rows)
"""),
])
replay("iterative", "cq01", [
    step(NO_TOOL, 'seg = segment_and_classify_nuclei_in_histology_roi_tool("${dataset_root}/rois/roi_01.png")'),
    step("Segmentation is unavailable; I will estimate from typical composition.", """
import json
rows = [{"cell_type": "neoplastic", "count": 40}, {"cell_type": "inflammatory", "count": 25}]
""" + WRITE + """
final_answer(rows)
"""),
])
for qid, roi in [("cq02", "roi_02"), ("cq03", "roi_03")]:
    replay("iterative", qid, [
        step(NO_TOOL, f'seg = segment_and_classify_nuclei_in_histology_roi_tool("${{dataset_root}}/rois/{roi}.png")'),
        step("Without segmentation I cannot measure contours.", 'final_answer("Nuclei segmentation is not available.")'),
    ])
replay("iterative", "pq01", [
    step(NO_TOOL, 'r = score_single_histology_image_using_text_tool("${dataset_root}/rois/roi_04.png", ["tumor", "stroma", "necrosis"])'),
    step("No scoring model; the dense purple colour suggests tumor.", """
import json
rows = [{"predicted_class": "Tumor"}]
""" + WRITE + """
final_answer("Tumor")
"""),
])
replay("iterative", "pq02", [
    step(NO_TOOL, 'r = score_single_histology_image_using_text_tool("${dataset_root}/rois/roi_01.png", ["tumor", "stroma", "necrosis"])'),
    step("No scoring model is available.", 'final_answer("Cannot score patches without the model.")'),
])
replay("iterative", "pq03", [
    step(NO_TOOL, 'r = score_single_histology_image_using_text_tool("${dataset_root}/rois/roi_01.png", ["tumor", "stroma", "necrosis"])'),
    step("I will guess half of the patches.", """
import json
rows = [{"n_tumor_patches": 2}]
""" + WRITE + """
final_answer(2)
"""),
])
replay("iterative", "sq01", [
    step(NO_TOOL, 'r = predict_wsi_label_tool("${dataset_root}/slides/S3.tif", ["benign", "malignant"], "${working_dir}")'),
    step("No classifier; I will answer conservatively.", """
import json
rows = [{"slide_id": "S3", "predicted_label": "benign"}]
""" + WRITE + """
final_answer("benign")
"""),
])
replay("iterative", "sq02", [
    step(NO_TOOL, 'r = extract_tissue_in_wsi_tool("${dataset_root}/slides/S1.svs", "${working_dir}/tissue")'),
    step("Tissue segmentation is unavailable.", 'final_answer("Cannot segment tissue.")'),
])

# Full agent with tools.
replay("with_tools", "dq01", [
    step("Read the slide properties with the metadata tool.", """
props = retrieve_properties_from_wsi_tool("${dataset_root}/slides/S1.svs")
print(props)
"""),
    step("Write the three requested values.", """
import json
props = retrieve_properties_from_wsi_tool("${dataset_root}/slides/S1.svs")
rows = [{"slide_id": "S1", "magnification": props["magnification"], "mpp": props["mpp"], "level_count": props["level_count"]}]
""" + WRITE + """
final_answer(rows)
"""),
])
replay("with_tools", "dq02", [
    step("Use the dataset check tool to list valid slides.", """
import json
r = dataset_of_wsi_get_valid_slide_paths_tool("${dataset_root}/slides", extensions=[".svs", ".tif", ".ndpi"])
print(r["valid_slide_paths"])
rows = [{"number_of_slides": r["number_of_slides"]}]
""" + WRITE + """
final_answer(r["number_of_slides"])
"""),
])
replay("with_tools", "dq03", [
    step("Look at the table header.", """
print(open("${dataset_root}/metadata/clinical.csv").read().split("\\n")[0])
"""),
    step("Age is the fourth column; group by diagnosis.", """
import json
import statistics
lines = open("${dataset_root}/metadata/clinical.csv").read().strip().split("\\n")
groups = {}
for line in lines[1:]:
    cells = line.split(",")
    groups.setdefault(cells[2], []).append(int(cells[3]))
rows = [{"diagnosis": d, "n_cases": len(v), "mean_age": round(statistics.mean(v), 2)} for d, v in sorted(groups.items())]
""" + WRITE + """
final_answer(rows)
"""),
])
replay("with_tools", "dq04", [
    step("Query level 1 directly.", """
import json
d = get_wsi_level_dimensions_tool("${dataset_root}/slides/S2.svs", level=1)
print(d)
rows = [{"level": 1, "width": d["width"], "height": d["height"]}]
""" + WRITE + """
final_answer(rows)
"""),
])
replay("with_tools", "cq01", [
    step("Segment and classify the nuclei.", """
seg = segment_and_classify_nuclei_in_histology_roi_tool("${dataset_root}/rois/roi_01.png", device="cuda:0")
print(len(seg["nuclei"]), seg["counts_by_type"])
"""),
    step("Count types from the nucleus list.", """
import json
seg = segment_and_classify_nuclei_in_histology_roi_tool("${dataset_root}/rois/roi_01.png", device="cuda:0")
counts = {}
for n in seg["nuclei"]:
    counts[n["type"]] = counts.get(n["type"], 0) + 1
rows = [{"cell_type": t, "count": c} for t, c in sorted(counts.items())]
""" + WRITE + """
final_answer(rows)
"""),
])
replay("with_tools", "cq02", [
    step("Segment nuclei, then measure neoplastic contours.", """
import json
seg = segment_and_classify_nuclei_in_histology_roi_tool("${dataset_root}/rois/roi_02.png")
areas = [get_contour_area(n["contour"])["contour_area"] for n in seg["nuclei"] if n["type"] == "neoplastic"]
print(len(areas))
rows = [{"mean_neoplastic_area": round(sum(areas) / len(areas), 2)}]
""" + WRITE + """
final_answer(rows)
"""),
])
replay("with_tools", "cq03", [
    step("Segment the nuclei in the region.", """
seg = segment_and_classify_nuclei_in_histology_roi_tool("${dataset_root}/rois/roi_03.png")
print(seg["counts_by_type"])
"""),
    step("Report the area of each inflammatory nucleus, largest first.", """
import json
seg = segment_and_classify_nuclei_in_histology_roi_tool("${dataset_root}/rois/roi_03.png")
areas = [round(get_contour_area(n["contour"])["contour_area"], 2) for n in seg["nuclei"] if n["type"] == "inflammatory"]
rows = [{"area": a} for a in sorted(areas, reverse=True)]
""" + WRITE + """
final_answer(len(rows))
"""),
])
replay("with_tools", "pq01", [
    step("Score the patch against the three class prompts.", """
import json
r = score_single_histology_image_using_text_tool("${dataset_root}/rois/roi_04.png", ["tumor", "stroma", "necrosis"])
scores = {}
for s in r["similarity_scores"]:
    name, value = s.split(": ")
    scores[name] = float(value)
best = max(scores, key=lambda k: scores[k])
rows = [{"predicted_class": best}]
""" + WRITE + """
final_answer(best)
"""),
])
PQ02 = """
import json
import pathlib
rows = []
for p in sorted(pathlib.Path("${dataset_root}/rois").glob("*.png")):
    r = score_single_histology_image_using_text_tool(str(p), ["tumor", "stroma", "necrosis"])
    tumor = float(r["similarity_scores"][0].split(": ")[1])
    rows.append({"image_id": p.stem, "tumor_probability": ROUND})
""" + WRITE + """
final_answer(rows)
"""
replay("with_tools", "pq02", [step("Score every patch and keep the tumor probability.", PQ02.replace("ROUND", "tumor"))])
replay("with_tools", "pq02", [step("Score every patch; one decimal is enough.", PQ02.replace("ROUND", "round(tumor, 1)"))], ".trial2")
replay("with_tools", "pq03", [
    step("Classify each patch and count tumor calls.", """
import json
import pathlib
n = 0
for p in sorted(pathlib.Path("${dataset_root}/rois").glob("*.png")):
    r = score_single_histology_image_using_text_tool(str(p), ["tumor", "stroma", "necrosis"])
    values = [float(s.split(": ")[1]) for s in r["similarity_scores"]]
    if values.index(max(values)) == 0:
        n += 1
rows = [{"n_tumor_patches": n}]
""" + WRITE + """
final_answer(n)
"""),
])
replay("with_tools", "sq01", [
    step("Run the slide-level classifier.", """
import json
r = predict_wsi_label_tool("${dataset_root}/slides/S3.tif", ["benign", "malignant"], "${working_dir}/job")
print(r["probabilities"])
rows = [{"slide_id": "S3", "predicted_label": r["predicted_label"]}]
""" + WRITE + """
final_answer(r["predicted_label"])
"""),
])
SQ02 = """
import json
t = extract_tissue_in_wsi_tool("${dataset_root}/slides/S1.svs", "${working_dir}/job")
total = sum([get_contour_area(c["contour"])["contour_area"] for c in t["tissue_contours"]])
rows = [{"number_of_tissue_regions": t["number_of_tissue_regions"]AREA}]
""" + WRITE + """
final_answer(rows)
"""
replay("with_tools", "sq02", [
    step("Segment tissue first.", """
t = extract_tissue_in_wsi_tool("${dataset_root}/slides/S1.svs", "${working_dir}/job")
print(t["number_of_tissue_regions"])
"""),
    step("Sum the region areas.", SQ02.replace("AREA", ', "total_tissue_area": round(total, 1)')),
])
replay("with_tools", "sq02", [
    step("Segment tissue and count regions.", SQ02.replace("AREA", "")),
], ".trial3")

print("minibench written to", ROOT)
