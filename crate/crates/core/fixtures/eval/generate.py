"""Regenerates the evaluation fixtures and prints reference trec_eval values.

Requires pytrec_eval (pip install pytrec_eval-terrier). The printed values are
frozen into tests/acceptance.rs and tests/evaluation_golden.rs.
"""
import random

import pytrec_eval

rng = random.Random(20261018)
docs = [f"D{i:03d}" for i in range(120)]
topics = [201, 202, 203, 204, 205, 206]
qrels = {}
lines = []
for t in topics[:5]:  # 206 has run rows but no judgments
    pool = rng.sample(docs, 40)
    qrels[str(t)] = {}
    for d in pool:
        g = rng.choice([0, 0, 0, 1, 1, 2])
        qrels[str(t)][d] = g
        lines.append(f"{t} 0 {d} {g}")
qrels["207"] = {"D001": 1}  # judged but never retrieved
lines.append("207 0 D001 1")
open("qrels.txt", "w").write("\n".join(lines) + "\n")


def make_run(name, depth, bias):
    out = []
    run = {}
    for t in topics:
        scored = []
        for d in docs:
            g = qrels.get(str(t), {}).get(d, 0)
            scored.append((rng.random() + bias * g, d))
        scored.sort(key=lambda x: (-x[0], x[1]))
        run[str(t)] = {}
        for r, (s, d) in enumerate(scored[:depth], 1):
            out.append(f"{t} Q0 {d} {r} {s:.6f} {name}")
            run[str(t)][d] = float(f"{s:.6f}")
    # trec_eval re-sorts by score, so fixture scores must be distinct.
    for t in run:
        assert len(set(run[t].values())) == len(run[t])
    open(f"{name}.run", "w").write("\n".join(out) + "\n")
    return run


runs = {
    "base": make_run("base", 30, 0.3),
    "strong": make_run("strong", 50, 0.8),
    "weak": make_run("weak", 20, 0.0),
}
ev = pytrec_eval.RelevanceEvaluator(qrels, {"map", "num_rel", "num_rel_ret", "num_ret"})
for name, run in runs.items():
    res = ev.evaluate(run)
    q = sorted(res)
    m = sum(res[x]["map"] for x in q) / len(q)
    nr = sum(res[x]["num_rel"] for x in q)
    nrr = sum(res[x]["num_rel_ret"] for x in q)
    print(name, q, repr(m), int(nr), int(nrr))
    for x in q:
        print("   ", x, repr(res[x]["map"]))
