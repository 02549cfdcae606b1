"""Expected mini-benchmark scores. Replays every recorded step in CPython
against stub tools backed by the same fixtures, then scores the written
answer.json files with the reference scorer. Writes expected/<mode>.json.
"""
import contextlib
import io
import json
import math
import statistics
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATASET = ROOT / "dataset"
FIXTURES = ROOT / "fixtures"
CATALOG = ROOT.parent.parent / "assets" / "tools.json"
sys.path.insert(0, str(ROOT.parent.parent / "tests" / "oracles"))
from scoring import score  # noqa: E402

TRIALS = 3
MAX_STEPS = 20
CATEGORY_ORDER = ["DataQA", "CellularQA", "PatchQA", "SlideQA"]
MODES = {"llm_only": "llm_only", "single_shot": "iterative", "iterative": "iterative", "with_tools": "with_tools"}


class Done(Exception):
    pass


def final_answer(value):
    raise Done(value)


def canonical(v, wd, root):
    if isinstance(v, str) and v.startswith("/"):
        if v == wd or v.startswith(wd + "/"):
            return "{working_dir}" + v[len(wd):]
        if v.startswith(root + "/"):
            return v[len(root) + 1:]
        return v
    if isinstance(v, list):
        return [canonical(x, wd, root) for x in v]
    if isinstance(v, dict):
        return {k: canonical(x, wd, root) for k, x in v.items()}
    return v


def expand(v, wd, root):
    if isinstance(v, str):
        if v.startswith("{dataset_root}"):
            v = root + v[len("{dataset_root}"):]
        if v.startswith("{working_dir}"):
            v = wd + v[len("{working_dir}"):]
        return v
    if isinstance(v, list):
        return [expand(x, wd, root) for x in v]
    if isinstance(v, dict):
        return {k: expand(x, wd, root) for k, x in v.items()}
    return v


def shoelace(pts):
    return abs(sum(x1 * y2 - x2 * y1 for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]))) / 2


def tools(wd, root):
    catalog = {d["name"]: d for d in json.loads(CATALOG.read_text())}
    out = {
        "get_contour_area": lambda contour: {"contour_area": float(shoelace(contour))},
        "get_contour_perimeter": lambda contour: {
            "contour_perimeter": sum(math.dist(a, b) for a, b in zip(contour, contour[1:] + contour[:1]))
        },
    }
    for name, d in catalog.items():
        if name in out:
            continue

        def call(*args, _d=d, **kwargs):
            params = [p["name"] for p in _d["params"]]
            bound = {p["name"]: p.get("default") for p in _d["params"]}
            bound.update(zip(params, args))
            bound.update(kwargs)
            canon = canonical(bound, wd, root)
            path = FIXTURES / _d["name"] / "records.json"
            recs = json.loads(path.read_text()) if path.exists() else []
            for r in recs:
                if all(k in canon and canon[k] == v for k, v in r["args"].items()):
                    return expand(r["result"], wd, root)
            raise FileNotFoundError(f"no fixture for {_d['name']} {canon}")

        out[name] = call
    return out


def replay_steps(mode_dir, qid, trial):
    d = ROOT / "replay" / mode_dir
    path = d / f"{qid}.trial{trial}.json"
    if not path.exists():
        path = d / f"{qid}.json"
    return json.loads(path.read_text())


def run(mode, qid, trial, wd, root):
    steps = replay_steps(MODES[mode], qid, trial)
    if mode == "llm_only":
        return
    limit = 1 if mode == "single_shot" else MAX_STEPS
    bound = tools(wd, root) if mode == "with_tools" else {}
    for st in steps[:limit]:
        code = st["code"].replace("${dataset_root}", root).replace("${working_dir}", wd)
        env = {"final_answer": final_answer, **bound}
        try:
            with contextlib.redirect_stdout(io.StringIO()):
                exec(code, env)
        except Done:
            return
        except Exception:
            pass


def evaluate(qid, wd):
    q = json.loads((ROOT / "suite" / "questions" / f"{qid}.json").read_text())
    truth = json.loads((ROOT / "suite" / "truth" / f"{qid}.json").read_text())
    try:
        answer = json.loads((Path(wd) / "answer.json").read_text())
    except (OSError, ValueError):
        answer = None
    s = score(answer, truth, q["columns_to_compare_and_tolerance"], q["id_column"])
    return q["category"], (0.0 if s is None else s)


def sem(values):
    return statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0


def main():
    root = str(DATASET.resolve())
    qids = sorted(p.stem for p in (ROOT / "suite" / "questions").glob("*.json"))
    out_dir = ROOT / "expected"
    out_dir.mkdir(exist_ok=True)
    for mode in MODES:
        per_trial = []
        cats = {}
        for trial in range(1, TRIALS + 1):
            scores = {}
            for qid in qids:
                with tempfile.TemporaryDirectory() as tmp:
                    wd = str(Path(tmp).resolve())
                    run(mode, qid, trial, wd, root)
                    cat, s = evaluate(qid, wd)
                cats[qid] = cat
                scores[qid] = s
            per_trial.append(scores)
        categories = {}
        for c in CATEGORY_ORDER:
            members = [q for q in qids if cats[q] == c]
            means = [sum(t[q] for q in members) / len(members) for t in per_trial]
            categories[c] = {"n_questions": len(members), "mean": statistics.fmean(means), "std_error": sem(means)}
        trial_means = [statistics.fmean(t.values()) for t in per_trial]
        doc = {
            "mode": mode,
            "trials": TRIALS,
            "scores": [{"trial": i + 1, "question_id": q, "score": t[q]} for i, t in enumerate(per_trial) for q in qids],
            "categories": categories,
            "overall": {"mean": statistics.fmean(trial_means), "std_error": sem(trial_means)},
        }
        (out_dir / f"{mode}.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(mode, round(doc["overall"]["mean"], 4), round(doc["overall"]["std_error"], 4),
              {c: round(v["mean"], 3) for c, v in categories.items()})


if __name__ == "__main__":
    main()
