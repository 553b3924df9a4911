"""Command line front end: ``msbvm <subcommand> --config FILE``.

Exit status is 0 on success, 2 for invalid input (bad config, missing
files) and 3 for failures while running.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bands import HolderConstraint, cdf_band, credible_band
from .config import ConfigError, ExperimentConfig, config_as_dict, config_help, load_config
from .haar import heap_levels
from .harness import (
    EXPERIMENTS,
    build_truth,
    cdf_centring,
    centring,
    replicate_rng,
    resolution_level,
    sample_posterior,
    simulate_data,
    version_string,
    weights,
)
from .sampling import IidSample

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3

SUBCOMMANDS = {
    "coverage": "frequentist coverage of multiscale, Hölder-intersected and CDF bands",
    "bvm": "surrogate distances between the rescaled posterior and its Gaussian limit",
    "donsker": "posterior KS statistic against the Kolmogorov distribution",
    "rates": "diameter bound of the Hölder-intersected band across the n grid",
    "clt": "empirical coefficients in the multiscale norm against the P-white bridge",
    "sample-posterior": "draw from the posterior of one data set and write the draws",
    "analyze": "credible band summary for one data set",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msbvm",
        description="Bayesian multiscale credible bands and their Monte Carlo checks.",
        epilog="configuration keys (INI sections, 'key = value'):\n" + config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {version_string()}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(
            name,
            help=help_text,
            description=help_text,
            epilog="configuration keys:\n" + config_help(),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("--config", required=True, help="experiment config file (INI)")
        p.add_argument("--seed", type=int, help="override [experiment] seed")
        p.add_argument("--threads", type=int, help="worker processes (default: MSBVM_THREADS or 1)")
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
    return parser


def _posterior_for_one_dataset(cfg: ExperimentConfig):
    truth = build_truth(cfg) if cfg.data == "" or cfg.prior == "point-mass" else None
    rng = replicate_rng(cfg.seed, 0)
    if cfg.data:
        if cfg.model != "sampling":
            raise ConfigError("data files are supported for the sampling model only")
        data = IidSample.from_csv(cfg.data)
        n = data.n
    else:
        n = cfg.n
    L = resolution_level(cfg, n)
    if not cfg.data:
        data = simulate_data(cfg, truth, n, L, rng)
    return data, sample_posterior(cfg, truth, data, L, rng), L


def _stem(cfg: ExperimentConfig, command: str) -> str:
    return f"{cfg.scenario}-{command}-{cfg.seed}"


def run_sample_posterior(cfg: ExperimentConfig, out: Path) -> str:
    data, d, L = _posterior_for_one_dataset(cfg)
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(cfg, "sample-posterior")
    d.to_csv(out / f"{stem}.csv")
    meta = {
        "version": version_string(),
        "n": d.n,
        "level": L,
        "draws": d.m,
        "kind": d.kind,
        "acceptance": d.meta.get("acceptance"),
        "config": config_as_dict(cfg),
    }
    (out / f"{stem}.json").write_text(json.dumps(_plain(meta), indent=2) + "\n")
    return f"sample-posterior [{cfg.scenario}] n={d.n} level={L} draws={d.m} -> {out / stem}.csv"


def run_analyze(cfg: ExperimentConfig, out: Path) -> str:
    data, d, L = _posterior_for_one_dataset(cfg)
    T = centring(cfg, data, d, L)
    w = weights(cfg)
    hold = HolderConstraint.default(cfg.gamma, L, w) if cfg.holder and L >= 1 else None
    band = credible_band(d, T, w, cfg.alpha, L, hold)
    summary = band.summary(centring_id=cfg.centring)
    if d.kind == "density":
        cb = cdf_band(d, cdf_centring(cfg, data, T), cfg.alpha)
        summary["R_cdf"] = cb.radius
    summary["version"] = version_string()
    summary["config"] = config_as_dict(cfg)
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(cfg, "analyze")
    half = band.radius / math.sqrt(band.n) * w.heap(L)
    levels = heap_levels(L)
    ks = np.concatenate([[0], *[np.arange(2**l) for l in range(L + 1)]])
    table = np.column_stack([levels, ks, T.coeffs, T.coeffs - half, T.coeffs + half])
    np.savetxt(out / f"{stem}.csv", table, delimiter=",", fmt=["%d", "%d", "%.17g", "%.17g", "%.17g"],
               header="level,k,centre,lower,upper", comments="")  # fmt: skip
    (out / f"{stem}.json").write_text(json.dumps(_plain(summary), indent=2) + "\n")
    return f"analyze [{cfg.scenario}] n={band.n} level={L} R_n={band.radius:.4f} -> {out / stem}.json"


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_INVALID
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        if args.threads is not None:
            cfg = cfg.replace(threads=args.threads)
    except ConfigError as err:
        print(f"msbvm: invalid configuration: {err}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    try:
        if args.command in EXPERIMENTS:
            report = EXPERIMENTS[args.command](cfg)
            csv_path, _ = report.write(out, args.command)
            print(f"{report.summary()} -> {csv_path}")
        elif args.command == "sample-posterior":
            print(run_sample_posterior(cfg, out))
        else:
            print(run_analyze(cfg, out))
    except (ConfigError, FileNotFoundError) as err:
        print(f"msbvm: invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as err:  # noqa: BLE001 - mapped to the runtime exit code
        print(f"msbvm: {args.command} failed: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
