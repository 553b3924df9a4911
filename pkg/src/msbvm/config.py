"""Experiment configuration: a strict INI-style file with typed keys.

Every key lives in a section; unknown sections or keys are rejected. The
schema below is also the source of the CLI help text.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Invalid or unparsable configuration."""


def _opt(section: str, help: str, default, **kw):
    return field(default=default, metadata={"section": section, "help": help, **kw})


def _int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(float(t)) for t in text.replace(";", ",").split(","))


@dataclass(frozen=True)
class ExperimentConfig:
    # [experiment]
    scenario: str = _opt("experiment", "scenario id, used in output file names", "scenario")
    model: str = _opt("experiment", "observation model: sampling | white-noise", "sampling")
    seed: int = _opt("experiment", "master seed (integer); replicate i uses the stream (seed, i)", 12345)
    replications: int = _opt("experiment", "number of independent data sets per n (count)", 500)
    threads: int = _opt("experiment", "worker processes for replications (count); 0 = MSBVM_THREADS or 1", 0)
    data: str = _opt("experiment", "optional one-column CSV of observations in [0, 1] (sample-posterior, analyze)", "")

    # [truth]
    truth: str = _opt("truth", "true function: kink | uniform | zero", "kink", key="kind")
    truth_gamma: float = _opt("truth", "Hölder exponent of the kink |x - location|^gamma (dimensionless)", 0.75, key="gamma")
    truth_amplitude: float = _opt("truth", "amplitude of the kink term before normalization (density units)", 0.5, key="amplitude")
    truth_wave: float = _opt("truth", "amplitude of the sin(2 pi x) term before normalization (density units)", 0.3, key="wave")
    truth_location: float = _opt("truth", "kink location in [0, 1] (x units)", 1 / 3, key="location")
    truth_level: int = _opt("truth", "dyadic level on which the truth is represented (2^level cells)", 14, key="level")

    # [resolution]
    cutoff: str = _opt("resolution", "rule for the prior / projection level: ln | jn | fixed", "ln", key="rule")
    smoothness: float = _opt("resolution", "smoothness alpha in 2^L <= N^(1/(2 alpha + 1)); also sets sigma_l of series priors", 0.75)
    level: int = _opt("resolution", "level used when rule = fixed (dyadic level)", 3)

    # [prior]
    prior: str = _opt(
        "prior",
        "prior family: histogram | gaussian-series | uniform-series | log-density | point-mass",
        "histogram",
        key="kind",
    )
    draws: int = _opt("prior", "posterior draws per data set (count)", 1000)
    dirichlet: float = _opt("prior", "Dirichlet parameter of every histogram bin (dimensionless)", 1.0)
    coeff_density: str = _opt("prior", "log-density coefficient law: gaussian | loglipschitz", "gaussian")
    tau: float = _opt("prior", "tail parameter of the log-Lipschitz law, 0 <= tau < 1", 0.0)
    r: float = _opt("prior", "scale exponent r of the Gaussian log-density prior; 0 = alpha / 2", 0.0)
    bound: float = _opt("prior", "half-width B of the uniform series prior (coefficient units)", 1.0)
    burn_in: int = _opt("prior", "Metropolis burn-in sweeps (count)", 5000)
    thin: int = _opt("prior", "Metropolis thinning: sweeps per stored draw (count)", 10)

    # [band]
    alpha: float = _opt("band", "credibility 1 - alpha; alpha in (0, 1)", 0.05)
    weights: str = _opt("band", "multiscale weights: sqrt_log | sqrt | power(p)", "sqrt_log")
    centring: str = _opt("band", "centring: auto | empirical | observation | posterior-mean", "auto")
    cdf_centring: str = _opt("band", "CDF band centring: primitive | ecdf", "primitive")
    holder: bool = _opt("band", "intersect with the Hölder ball ||f||_{C^gamma} <= w_j / sqrt(j)", True)
    gamma: float = _opt("band", "Hölder exponent of the constraint (dimensionless)", 0.75)

    # [run]
    n: int = _opt("run", "sample size, or inverse noise variance in the white noise model (count)", 5000)
    n_grid: tuple = _opt("run", "comma-separated sample sizes for the rate experiment (counts)", (1024, 2048, 4096, 8192, 16384, 32768, 65536))
    datasets: int = _opt("run", "data sets for bvm / donsker experiments (count)", 20)
    reference_draws: int = _opt("run", "draws from the limiting Gaussian law (count)", 2000)
    bvm_max_level: int = _opt("run", "highest level of the per-coordinate comparisons (dyadic level)", 4)
    common_draws: bool = _opt("run", "reuse one posterior random stream across replications (rates)", False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.model in ("sampling", "white-noise"), f"unknown model {self.model!r}")
        need(self.truth in ("kink", "uniform", "zero"), f"unknown truth {self.truth!r}")
        need(self.cutoff in ("ln", "jn", "fixed"), f"unknown resolution rule {self.cutoff!r}")
        need(
            self.prior in ("histogram", "gaussian-series", "uniform-series", "log-density", "point-mass"),
            f"unknown prior {self.prior!r}",
        )
        need(self.centring in ("auto", "empirical", "observation", "posterior-mean"), f"unknown centring {self.centring!r}")
        need(self.cdf_centring in ("primitive", "ecdf"), f"unknown cdf_centring {self.cdf_centring!r}")
        need(0 < self.alpha < 1, "alpha must lie in (0, 1)")
        need(self.n >= 1, "n must be >= 1")
        need(self.replications >= 1 and self.datasets >= 1, "replications and datasets must be >= 1")
        need(self.draws >= 1 and self.reference_draws >= 1, "draw counts must be >= 1")
        need(self.smoothness > 0 and self.gamma > 0, "smoothness and gamma must be positive")
        need(self.truth_level >= 1 and self.level >= 0, "levels must be nonnegative")
        need(self.threads >= 0, "threads must be >= 0")
        if self.model == "sampling":
            need(self.truth != "zero", "the zero function is not a density")
            need(self.prior in ("histogram", "log-density", "point-mass"), f"prior {self.prior!r} needs the white-noise model")
            need(self.centring != "observation", "observation centring needs the white-noise model")
        else:
            need(self.prior in ("gaussian-series", "uniform-series", "point-mass"), f"prior {self.prior!r} needs the sampling model")
            need(self.centring != "empirical", "empirical centring needs the sampling model")
            need(self.cdf_centring == "primitive", "ecdf centring needs the sampling model")
        from .multiscale import WeightSequence

        try:
            WeightSequence.parse(self.weights)
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)


def _schema():
    for f in dataclasses.fields(ExperimentConfig):
        yield f, f.metadata["section"], f.metadata.get("key", f.name)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(f, text: str):
    kind = f.type
    try:
        if kind == "bool":
            t = text.strip().lower()
            if t not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(text)
            return t in ("true", "yes", "1", "on")
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "tuple":
            return _int_list(text)
        return text.strip()
    except ValueError as err:
        raise ConfigError(f"bad value {text!r} for {f.metadata['section']}.{f.metadata.get('key', f.name)}") from err


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text; unknown sections and keys raise ``ConfigError``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(str(err)) from err
    known = {}
    for f, section, key in _schema():
        known.setdefault(section, {})[key] = f
    values = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
        for key, text_value in parser.items(section):
            if key not in known[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            f = known[section][key]
            values[f.name] = _convert(f, text_value)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {str(p)!r} not found")
    return parse_config(p.read_text())


def dump_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` back to config text; ``parse_config`` inverts this."""
    sections: dict[str, list[str]] = {}
    for f, section, key in _schema():
        sections.setdefault(section, []).append(f"{key} = {_format(getattr(cfg, f.name))}")
    out = io.StringIO()
    for section, lines in sections.items():
        out.write(f"[{section}]\n")
        out.write("\n".join(lines))
        out.write("\n\n")
    return out.getvalue()


def config_as_dict(cfg: ExperimentConfig) -> dict:
    out: dict[str, dict] = {}
    for f, section, key in _schema():
        v = getattr(cfg, f.name)
        out.setdefault(section, {})[key] = list(v) if isinstance(v, tuple) else v
    return out


def config_help() -> str:
    """One line per config key, grouped by section."""
    lines = []
    current = None
    for f, section, key in _schema():
        if section != current:
            lines.append(f"[{section}]")
            current = section
        lines.append(f"  {key} = {_format(f.default)}\n      {f.metadata['help']}")
    return "\n".join(lines)
