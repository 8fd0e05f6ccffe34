"""Regret-normalizer study across a (switch count, horizon) grid.

Runs the experiment driver end to end: multi-seed runs, per-seed CSV logs,
an aggregate JSON, and an SVG regret curve per grid cell, then tabulates
mean regret / sqrt(L*T).  Artifacts land under demos_out/ and any rerun
reproduces them byte for byte.
"""

import math
import os

from nonstat import run_experiment

BASE = [0.9, 0.2, 0.35, 0.5, 0.15]
OUT = os.path.join(os.path.dirname(__file__), "..", "demos_out")


def rotating_segments(T, L):
    seg_len = T // L
    segments = []
    for i in range(L):
        means = BASE[-i % 5:] + BASE[: -i % 5]
        length = seg_len if i < L - 1 else T - seg_len * (L - 1)
        segments.append({"length": length, "means": means})
    return segments


print(f"{'L':>3} {'T':>6} {'mean regret':>12} {'regret/sqrt(LT)':>16} {'restarts':>9}")
for L in (2, 4):
    for T in (1 << 11, 1 << 13):
        spec = {
            "env": {"kind": "mab", "T": T, "segments": rotating_segments(T, L)},
            "algorithm": "master+ucb1",
            "T": T,
            "kappa": 4e-4,
            "seeds": list(range(8)),
            "out": os.path.join(OUT, f"L{L}_T{T}"),
        }
        report = run_experiment(spec)
        print(
            f"{L:>3} {T:>6} {report['regret_mean']:>12.1f} "
            f"{report['scaling']['reg_per_sqrt_LT']:>16.3f} "
            f"{report['restarts_mean']:>9.1f}"
        )
print(f"\nartifacts (CSV / JSON / SVG) under {os.path.abspath(OUT)}")
