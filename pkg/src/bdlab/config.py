"""Experiment configuration: INI text in, validated typed sections out.

The text is read with :mod:`configparser` (keys are case-sensitive). Every
key has a type and a default; :func:`emit` writes all of them back, so the
echo of a parsed configuration never hides a default. Floats accept plain
decimals or fractions such as ``1/128`` and are emitted with ``repr``.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from .expr import Expression, ExpressionError

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "emit", "load_config", "KINDS", "SCHEMA"]

KINDS = ("linear-disk", "linear-halfspace", "nonlinear-disk", "verification-suite")
PROBLEMS = ("halfspace-mode", "disk-mode")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is ``"section.key"`` of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# ----------------------------------------------------------------------
# value types


def _float(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        return float(text)


def _int(text: str) -> int:
    return int(text.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _descriptor(text: str) -> str:
    Expression(text)
    return text.strip()


def _float_list(text: str) -> tuple:
    return tuple(_float(p) for p in text.split(",") if p.strip())


def _str_list(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _int_list(text: str) -> tuple:
    return tuple(_int(p) for p in text.split(",") if p.strip())


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {list(options)}, got {t!r}")
        return t

    return parse


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable, Any]]] = {
    "experiment": {
        "kind": (_choice(*KINDS), "linear-disk"),
        "seed": (_int, 0),
        "depth": (_int, 2),
        "csv": (_choice("boundary", "all", "none"), "boundary"),
    },
    "grid": {
        "n_r": (_int, 64),
        "n_theta": (_int, 256),
        "R": (_float, 1.0),
        "h": (_float, 1.0 / 32),
    },
    "time": {
        "t0": (_float, 0.0),
        "T": (_float, 1.0),
        "tau": (_float, 1.0 / 128),
    },
    "coefficients": {
        "a": (_descriptor, "1.0"),
        "b": (_descriptor, "0.0"),
        "f": (_descriptor, "0.0"),
        "v0": (_descriptor, "cos(theta)"),
        "phi": (_descriptor, "0.0"),
        "wall": (_descriptor, "0.0"),
        "exact": (str, ""),
        "Lambda": (_float, 10.0),
        "modes": (_int_list, (1, 2, 3)),
    },
    "solver": {
        "tol": (_float, 1e-10),
    },
    "norms": {
        "theta": (_float, 1.0),
        "alpha": (_float, 0.5),
        "ladder_depth": (_int, 3),
    },
    "nonlinear": {
        "p": (_float, 2.0),
        "band": (_float, 8.0),
        "fp_tol": (_float, 1e-8),
        "max_iter": (_int, 60),
        "sigma_schedule": (_float_list, (1.0,)),
        "method": (_choice("fixed-point", "continuation"), "fixed-point"),
        "manufactured": (_bool, True),
    },
    "verification": {
        "problems": (_str_list, PROBLEMS),
        "rho": (_float, 0.5),
        "R": (_float, 1.0),
        "nonhom_rho": (_float, 0.25),
        "h": (_float, 1.0 / 32),
        "tau": (_float, 1.0 / 128),
        "n_r": (_int, 17),
        "n_theta": (_int, 64),
        "disk_tau": (_float, 1.0 / 32),
        "disk_T": (_float, 1.0),
        "n_arcs": (_int, 8),
        "delta": (_float, 0.2),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration: ``values[section][key]`` with every default filled."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, item: str) -> dict:
        return self.values[item]

    def get(self, section: str, key: str) -> Any:
        return self.values[section][key]

    @property
    def kind(self) -> str:
        return self.values["experiment"]["kind"]

    def as_dict(self) -> dict:
        """Plain nested dict with lists for tuples (JSON friendly)."""
        return {s: {k: list(v) if isinstance(v, tuple) else v for k, v in kv.items()} for s, kv in self.values.items()}

    def replace(self, section: str, **updates) -> "ExperimentConfig":
        vals = {s: dict(kv) for s, kv in self.values.items()}
        for k, v in updates.items():
            if k not in SCHEMA[section]:
                raise ConfigError(f"{section}.{k}", "unknown key")
            vals[section][k] = v
        cfg = ExperimentConfig(vals)
        _validate(cfg)
        return cfg


def _check(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(key, message)


def _validate(cfg: ExperimentConfig) -> None:
    v = cfg.values
    lam = v["coefficients"]["Lambda"]
    _check(lam > 1, "coefficients.Lambda", f"Lambda={lam!r}: need Lambda > 1")
    _check(v["nonlinear"]["band"] > 1, "nonlinear.band", f"band={v['nonlinear']['band']!r}: need band > 1")
    _check(v["experiment"]["depth"] >= 1, "experiment.depth", "ladder depth must be at least 1")
    _check(v["grid"]["n_r"] >= 3, "grid.n_r", "need n_r >= 3")
    _check(v["grid"]["n_theta"] >= 4, "grid.n_theta", "need n_theta >= 4")
    _check(v["grid"]["h"] > 0, "grid.h", "need h > 0")
    _check(v["grid"]["R"] > 0, "grid.R", "need R > 0")
    _check(v["time"]["tau"] > 0, "time.tau", "need tau > 0")
    _check(v["time"]["T"] > 0, "time.T", "need T > 0")
    _check(0 < v["solver"]["tol"] <= 1e-6, "solver.tol", "need 0 < tol <= 1e-6")
    _check(0 < v["norms"]["alpha"] <= 1, "norms.alpha", "need 0 < alpha <= 1")
    _check(v["norms"]["theta"] >= 0, "norms.theta", "need theta >= 0")
    _check(v["norms"]["ladder_depth"] >= 1, "norms.ladder_depth", "need ladder_depth >= 1")
    nl = v["nonlinear"]
    _check(nl["p"] > 0, "nonlinear.p", "need p > 0")
    _check(nl["fp_tol"] > 0, "nonlinear.fp_tol", "need fp_tol > 0")
    _check(nl["max_iter"] >= 1, "nonlinear.max_iter", "need max_iter >= 1")
    s = nl["sigma_schedule"]
    _check(len(s) > 0 and all(0 <= x <= 1 for x in s), "nonlinear.sigma_schedule", "values must lie in [0, 1]")
    _check(s[0] in (0.0, 1.0) and all(b > a for a, b in zip(s, s[1:])), "nonlinear.sigma_schedule", "must start at 0 or 1 and increase")
    _check(all(k >= 0 for k in v["coefficients"]["modes"]), "coefficients.modes", "modes must be nonnegative")
    vr = v["verification"]
    for p in vr["problems"]:
        _check(p in PROBLEMS, "verification.problems", f"unknown problem {p!r}; expected among {list(PROBLEMS)}")
    for key in ("rho", "R", "nonhom_rho", "h", "tau", "disk_tau", "disk_T", "delta"):
        _check(vr[key] > 0, f"verification.{key}", f"need {key} > 0")
    _check(vr["n_arcs"] >= 4, "verification.n_arcs", "need n_arcs >= 4")
    if v["coefficients"]["exact"]:
        try:
            Expression(v["coefficients"]["exact"])
        except ExpressionError as exc:
            raise ConfigError("coefficients.exact", str(exc)) from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse INI text, reject unknown sections and keys, fill defaults and validate.

    Raises
    ------
    ConfigError
        Naming the offending ``section.key``.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<text>", f"malformed configuration: {exc}") from None
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            conv, default = SCHEMA[section][key]
            try:
                values[section][key] = conv(raw)
            except (ValueError, ExpressionError) as exc:
                kind = type(default).__name__
                raise ConfigError(f"{section}.{key}", f"cannot read {raw!r} as {kind}: {exc}") from None
    cfg = ExperimentConfig(values)
    _validate(cfg)
    return cfg


def emit(cfg: ExperimentConfig) -> str:
    """INI text with every key of every section, in schema order."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(cfg.values[section][key])}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> ExperimentConfig:
    """Read a file, or a shipped configuration by name (e.g. ``default``)."""
    from pathlib import Path

    p = Path(path)
    if not p.exists() and not p.suffix:
        shipped = Path(__file__).parent / "configs" / f"{path}.ini"
        if shipped.exists():
            p = shipped
    if not p.exists():
        raise ConfigError("<path>", f"configuration file {str(path)!r} not found")
    return parse_config(p.read_text())
