"""Freezes expected scores for randomly generated (truth, answer, tolerance) cases."""
import json
import random
from pathlib import Path

from scoring import score

def random_case(rng):
    n_fields = rng.randint(1, 3)
    fields = {}
    for i in range(n_fields):
        if rng.random() < 0.7:
            fields[f"f{i}"] = rng.choice([0.05, 0.1, 0.15, 1.0])
        else:
            fields[f"f{i}"] = rng.sample(["tumor", "stroma", "necrosis", "Benign"], rng.randint(1, 3))
    id_column = rng.choice([None, "id"])
    truth = []
    for r in range(rng.randint(1, 4)):
        rec = {"id": f"s{r}"}
        for f, tol in fields.items():
            rec[f] = rng.choice(tol) if isinstance(tol, list) else rng.choice([0, 0.0, round(rng.uniform(-50, 50), 2)])
        truth.append(rec)
    answer = []
    for t in rng.sample(truth, rng.randint(0, len(truth))) + [None] * rng.randint(0, 1):
        rec = {"id": t["id"] if t else f"x{rng.randint(0, 9)}"}
        for f, tol in fields.items():
            if rng.random() < 0.15:
                continue
            base = t[f] if t else 0
            if isinstance(tol, list):
                rec[f] = rng.choice([base if isinstance(base, str) else "tumor", " " + str(base).upper(), "other", 3])
            else:
                rec[f] = rng.choice([base, base * (1 + rng.uniform(-0.3, 0.3)), str(base), base + rng.uniform(-0.2, 0.2)])
        answer.append(rec)
    rng.shuffle(answer)
    if rng.random() < 0.05:
        answer = {"records": answer}
    return {"fields": fields, "id_column": id_column, "truth": truth, "answer": answer}


def main():
    rng = random.Random(42)
    cases = []
    for _ in range(400):
        c = random_case(rng)
        c["expected"] = score(c["answer"], c["truth"], c["fields"], c["id_column"])
        cases.append(c)
    out = Path(__file__).with_name("evaluator_cases.json")
    out.write_text(json.dumps(cases) + "\n")
    print(f"wrote {len(cases)} cases to {out.name}")


if __name__ == "__main__":
    main()
