"""Posterior of sqrt(n)(f - X) in white noise against its Gaussian limit.

With a conjugate Gaussian series prior the posterior is exact, so the
rescaled posterior coordinates should look like independent standard
normals. The script prints the two-sample KS distances to a Monte Carlo
reference and the noise floor of the reference against an independent copy.
Run: python demos/white_noise_bvm.py
"""

from pathlib import Path

from msbvm.config import load_config
from msbvm.harness import run_bvm_check

cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "whitenoise_bvm.ini")
report = run_bvm_check(cfg)
print(report.summary())
for name in ("coordinate", "statistic", "cdf"):
    v = report.aggregates[name]
    print(f"{name:>10}: max KS {v['max']:.4f}  floor {v['floor_mean']:.4f}  threshold {v['threshold']}")
print(report.aggregates["note"])
