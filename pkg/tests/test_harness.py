import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from msbvm.config import ConfigError, ExperimentConfig
from msbvm.harness import (
    ExperimentReport,
    binomial_summary,
    build_truth,
    kink_masses,
    run_bvm_check,
    run_clt_check,
    run_coverage,
    run_donsker_check,
    run_rate_check,
)
from msbvm.haar import holder_norm

SMALL = dict(scenario="t", replications=100, n=500, draws=400, truth_level=8)


def test_point_mass_covers_always():
    rep = run_coverage(ExperimentConfig(prior="point-mass", **SMALL))
    assert rep.n_errors == 0
    for key in ("coverage", "coverage_holder", "coverage_cdf"):
        assert rep.aggregates[key]["estimate"] == 1.0


def test_coverage_needs_replications():
    with pytest.raises(ConfigError):
        run_coverage(ExperimentConfig(**dict(SMALL, replications=50)))


def test_errors_are_recorded_not_raised():
    # 50 draws are too few for a 0.05 quantile: every row fails, the run completes
    rep = run_coverage(ExperimentConfig(**dict(SMALL, draws=50)))
    assert rep.n_errors == 100
    assert "too few" in rep.rows[0]["error"]
    assert rep.aggregates["coverage"]["estimate"] is None
    assert json.loads(json.dumps(rep.json_dict()))["errors"] == 100


def test_same_seed_same_bytes(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    a = run_coverage(cfg).csv_text()
    b = run_coverage(cfg).csv_text()
    assert a == b
    c = run_coverage(cfg.replace(seed=cfg.seed + 1)).csv_text()
    assert a != c
    assert a.splitlines()[0] == c.splitlines()[0]


def test_threads_do_not_change_results():
    cfg = ExperimentConfig(**SMALL)
    assert run_coverage(cfg.replace(threads=1)).csv_text() == run_coverage(cfg.replace(threads=2)).csv_text()


def test_threads_from_environment(monkeypatch):
    cfg = ExperimentConfig(**SMALL)
    one = run_coverage(cfg).csv_text()
    monkeypatch.setenv("MSBVM_THREADS", "2")
    assert run_coverage(cfg).csv_text() == one
    monkeypatch.setenv("MSBVM_THREADS", "many")
    with pytest.raises(ConfigError):
        run_coverage(cfg)


def test_report_files(tmp_path):
    rep = run_coverage(ExperimentConfig(**SMALL))
    csv_path, json_path = rep.write(tmp_path, "coverage")
    assert csv_path.name == f"t-coverage-{rep.config.seed}.csv"
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 101
    assert lines[0].split(",") == rep.columns
    meta = json.loads(json_path.read_text())
    assert meta["config"]["band"]["alpha"] == 0.05
    assert meta["version"]
    assert "[band]" in meta["config_text"]


def test_binomial_summary():
    s = binomial_summary([1] * 95 + [0] * 5, 0.95)
    assert s["estimate"] == 0.95 and s["within_3se"]
    s = binomial_summary([1] * 100, 0.95)
    assert s["se"] == 0.0 and s["se_at_target"] > 0 and s["within_3se"]
    assert not binomial_summary([1] * 50 + [0] * 50, 0.95)["within_3se"]


def test_kink_truth_is_normalized_and_smooth():
    m = kink_masses(4, 0.75, 0.5, 0.3, 1 / 3)

    def f(x):
        return 1 + 0.5 * abs(x - 1 / 3) ** 0.75 + 0.3 * math.sin(2 * math.pi * x)

    edges = np.arange(17) / 16
    direct = [integrate.quad(f, a, b, points=[1 / 3] if a < 1 / 3 < b else None, epsabs=0, epsrel=1e-13, limit=200)[0] for a, b in zip(edges, edges[1:])]
    assert_allclose(m, direct, rtol=1e-10)
    cfg = ExperimentConfig(truth_level=10)
    t = build_truth(cfg)
    assert holder_norm(t.tree, 0.75) < 2.0
    assert t.cdf(1.0) == pytest.approx(1.0)
    assert t.density.masses.sum() == pytest.approx(1.0)


def test_clt_rejects_tiny_n():
    with pytest.raises(ConfigError, match="n >= 2"):
        run_clt_check(ExperimentConfig(n=1, replications=10, truth="uniform"))


def test_small_runs_of_every_experiment():
    base = dict(scenario="t", truth="uniform", n=400, draws=400, datasets=2, reference_draws=400)
    rep = run_bvm_check(ExperimentConfig(**base))
    assert rep.n_errors == 0 and "passed" in rep.aggregates
    assert json.loads(json.dumps(rep.json_dict()))["surrogate_note"]
    rep = run_donsker_check(ExperimentConfig(**base))
    assert rep.n_errors == 0 and np.isfinite(rep.aggregates["mean_ks"])
    rep = run_clt_check(ExperimentConfig(**dict(base, replications=50)))
    assert rep.n_errors == 0 and rep.column("statistic").size == 50
    rep = run_rate_check(ExperimentConfig(**dict(base, replications=3, n_grid=(256, 1024, 4096), truth_level=8)))
    assert rep.n_errors == 0
    assert set(rep.aggregates["per_n"]) == {"256", "1024", "4096"}


def test_report_column_skips_errors():
    cfg = ExperimentConfig()
    rep = ExperimentReport("x", cfg, ["a", "error"], [{"a": 1.0, "error": ""}, {"a": math.nan, "error": "boom"}])
    assert rep.n_errors == 1
    assert rep.column("a").tolist() == [1.0]
    assert rep.column("a", valid_only=False).size == 2
