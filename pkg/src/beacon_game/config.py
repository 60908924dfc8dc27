"""Plain-text experiment configuration.

Files are INI-style: ``key = value`` lines grouped under ``[scenario]``,
``[geometry]`` and ``[sweep]`` headers. Points are written ``x, y``; point
lists as ``(x1, y1), (x2, y2), ...``. Sweep values are either a comma list
or ``start:stop:step`` (stop inclusive). Lines starting with ``#`` or ``;``
are comments.

Example::

    [scenario]
    tau = 0.5
    beta = 1
    alpha = 1e3
    c = 1
    sigma2 = 1e-8
    gamma = 3.5
    M = 5
    N = 20
    phase_model = uniform

    [geometry]
    bs_position = -10, 0
    pb_position = 10, 0
    sensor_region = (-4, -10), (4, -10), (4, 10), (-4, 10)

    [sweep]
    variable = d
    values = 2:20:2
    replications = 100
    base_seed = 2016
    solvers = nu_min, nu_max, sdp, global_search
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .channel import Scenario
from .errors import ValidationError

SOLVERS = ("closed_form", "m1_exact", "nu_min", "nu_max", "sdp", "global_search")
SWEEP_VARIABLES = ("d", "zeta", "M")
ZETA_UNITS = ("default_multiple", "absolute")


class ConfigError(ValidationError):
    pass


@dataclass
class SweepConfig:
    scenario: Scenario
    sweep_variable: str = "d"
    sweep_values: tuple[float, ...] = tuple(float(v) for v in range(2, 21, 2))
    replications: int = 1
    base_seed: int = 0
    solvers: tuple[str, ...] = ("nu_min", "nu_max", "sdp", "global_search")
    mc_samples: int = 0
    gs_budget: int = 20_000
    sdp_tol: float = 1e-6
    theta2: float | None = None
    sigma1_sq: float | None = None
    zeta_units: str = "default_multiple"
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        self.sweep_values = tuple(float(v) for v in self.sweep_values)
        self.solvers = tuple(self.solvers)
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable: must be one of {', '.join(SWEEP_VARIABLES)}, got {self.sweep_variable!r}")
        if not self.sweep_values:
            raise ConfigError("sweep.values: must be non-empty")
        if np.any(np.diff(self.sweep_values) <= 0):
            raise ConfigError("sweep.values: must be strictly increasing")
        if self.replications < 1:
            raise ConfigError(f"sweep.replications: must be >= 1, got {self.replications}")
        if not self.solvers:
            raise ConfigError("sweep.solvers: must name at least one solver")
        for s in self.solvers:
            if s not in SOLVERS:
                raise ConfigError(f"sweep.solvers: unknown solver {s!r} (choose from {', '.join(SOLVERS)})")
        if self.mc_samples < 0:
            raise ConfigError("sweep.mc_samples: must be >= 0")
        if self.gs_budget < 1:
            raise ConfigError("sweep.gs_budget: must be >= 1")
        if not self.sdp_tol > 0:
            raise ConfigError("sweep.sdp_tol: must be > 0")
        if self.theta2 is not None and self.theta2 < 0:
            raise ConfigError("sweep.theta2: must be >= 0")
        if self.sigma1_sq is not None and not self.sigma1_sq > 0:
            raise ConfigError("sweep.sigma1_sq: must be > 0")
        if self.zeta_units not in ZETA_UNITS:
            raise ConfigError(f"sweep.zeta_units: must be one of {', '.join(ZETA_UNITS)}")


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _point(text, path):
    nums = re.findall(_NUM, text)
    if len(nums) != 2:
        raise ConfigError(f"{path}: expected 'x, y', got {text!r}")
    return (float(nums[0]), float(nums[1]))


def _points(text, path):
    groups = re.findall(r"\(([^()]*)\)", text)
    if not groups:
        raise ConfigError(f"{path}: expected '(x, y), (x, y), ...', got {text!r}")
    return tuple(_point(g, path) for g in groups)


def _values(text, path):
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(start + k * step) for k in range(max(n, 0)))
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{path}: cannot parse {text!r} as a value list or start:stop:step") from None


def _scalar(text, kind, path):
    try:
        if kind is int:
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        return kind(text)
    except ValueError:
        raise ConfigError(f"{path}: expected {kind.__name__}, got {text!r}") from None


_SCENARIO_KEYS = {"tau": float, "beta": float, "alpha": float, "c": float, "sigma2": float,
                  "gamma": float, "m": int, "n": int, "phase_model": str}
_SWEEP_KEYS = {"replications": int, "base_seed": int, "mc_samples": int, "gs_budget": int,
               "sdp_tol": float, "theta2": float, "sigma1_sq": float, "zeta_units": str}


def parse_config(text: str, source: str | None = None) -> SweepConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"config: {exc}") from None
    unknown = set(cp.sections()) - {"scenario", "geometry", "sweep"}
    if unknown:
        raise ConfigError(f"config: unknown section(s) {', '.join(sorted(unknown))}")

    sc = {}
    if cp.has_section("scenario"):
        for key, raw in cp.items("scenario"):
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"scenario.{key}: unknown key")
            name = {"m": "M", "n": "N"}.get(key, key)
            sc[name] = _scalar(raw, _SCENARIO_KEYS[key], f"scenario.{key}")
    if cp.has_section("geometry"):
        for key, raw in cp.items("geometry"):
            path = f"geometry.{key}"
            if key in ("bs_position", "pb_position"):
                sc[key] = _point(raw, path)
            elif key in ("sensor_region", "sensor_positions"):
                sc[key] = _points(raw, path)
            else:
                raise ConfigError(f"{path}: unknown key")
    if "sensor_positions" in sc and "N" not in sc:
        sc["N"] = len(sc["sensor_positions"])
    scenario = Scenario(**sc)

    sw = {}
    if cp.has_section("sweep"):
        for key, raw in cp.items("sweep"):
            path = f"sweep.{key}"
            if key == "variable":
                sw["sweep_variable"] = raw.strip()
            elif key == "values":
                sw["sweep_values"] = _values(raw, path)
            elif key == "solvers":
                sw["solvers"] = tuple(s.strip() for s in raw.split(",") if s.strip())
            elif key in _SWEEP_KEYS:
                sw[key] = _scalar(raw, _SWEEP_KEYS[key], path)
            else:
                raise ConfigError(f"{path}: unknown key")
    return SweepConfig(scenario=scenario, source=source, **sw)


def load_config(path) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    return parse_config(text, source=str(path))


def dump_config(cfg: SweepConfig) -> str:
    """Render a config back to text (used to ship sample files)."""
    s = cfg.scenario
    fmt = lambda p: f"{p[0]:g}, {p[1]:g}"  # noqa: E731
    lines = ["[scenario]"]
    for f in ("tau", "beta", "alpha", "c", "sigma2", "gamma", "M", "N", "phase_model"):
        lines.append(f"{f} = {getattr(s, f)}")
    lines += ["", "[geometry]", f"bs_position = {fmt(s.bs_position)}", f"pb_position = {fmt(s.pb_position)}",
              "sensor_region = " + ", ".join(f"({fmt(p)})" for p in s.sensor_region)]
    if s.sensor_positions is not None:
        lines.append("sensor_positions = " + ", ".join(f"({fmt(p)})" for p in s.sensor_positions))
    lines += ["", "[sweep]", f"variable = {cfg.sweep_variable}",
              "values = " + ", ".join(f"{v:g}" for v in cfg.sweep_values)]
    for f in fields(cfg):
        if f.name in ("scenario", "sweep_variable", "sweep_values", "source"):
            continue
        v = getattr(cfg, f.name)
        if v is None:
            continue
        lines.append(f"{f.name} = {', '.join(v) if isinstance(v, tuple) else v}")
    return "\n".join(lines) + "\n"
