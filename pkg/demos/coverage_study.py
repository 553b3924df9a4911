"""Frequentist coverage of the credible bands over repeated data sets.

Loads the shipped coverage scenario, shortens it to 200 replications, and
prints the coverage of the three bands with binomial standard errors.
Run: python demos/coverage_study.py [replications]
"""

import sys
from pathlib import Path

from msbvm.config import load_config
from msbvm.harness import run_coverage

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 200
cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "histogram_coverage.ini")
report = run_coverage(cfg.replace(replications=reps))

print(report.summary())
for key in ("coverage", "coverage_holder", "coverage_cdf"):
    s = report.aggregates[key]
    flag = "ok" if s["within_3se"] else "outside 3 s.e."
    print(f"{key:>16}: {s['estimate']:.3f} ± {s['se']:.3f}  (target {s['target']:.2f}, {flag})")
print("R_n quantiles:", {k: round(v, 3) for k, v in report.aggregates["R_n"].items()})
