"""Flat ``section.key = value`` run configuration, presets and initial data.

Example::

    grid.n_cells = 200
    rates.k_f = 100
    diffusion.d_e = 0
    initial.e = indicator(0.4, 0.6, 0.2)
    initial.s = constant(0.1) + cosine_bump(0.5, 0.25, 1.0)

Initial-data kinds (summed with ``+``): ``constant(v)``,
``indicator(a, b, height)`` and ``cosine_bump(center, half_width, height)``,
the raised cosine ``height (1 + cos(pi (x - center) / half_width)) / 2`` on
``|x - center| < half_width``.  All are projected by exact cell averages.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    DiffusionCoeffs,
    GeometryConstants,
    Grid1D,
    RateConstants,
    SystemState,
    project_indicator,
)
from .dynamics import Scheme, StepperConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "PRESETS", "preset"]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(message if message.startswith(path) else f"{path}: {message}")
        self.path = path


# key -> (type, default); a default of ``...`` means required
_SCHEMA = {
    "grid.n_cells": (int, ...),
    "rates.k_f": (float, ...),
    "rates.k_r": (float, ...),
    "rates.k_c": (float, ...),
    "diffusion.d_e": (float, ...),
    "diffusion.d_s": (float, ...),
    "diffusion.d_c": (float, ...),
    "diffusion.d_p": (float, ...),
    "initial.e": (str, "constant(0)"),
    "initial.s": (str, "constant(0)"),
    "initial.c": (str, "constant(0)"),
    "initial.p": (str, "constant(0)"),
    "stepper.dt": (float, ...),
    "stepper.t_end": (float, ...),
    "stepper.record_every": (int, 1),
    "stepper.scheme": (str, "backward_euler"),
    "stepper.negativity_tolerance": (float, 1e-12),
    "entropy.use_defaults": (bool, True),
    "entropy.eps_s": (float, None),
    "entropy.eps_c": (float, None),
    "entropy.k": (float, None),
    "entropy.defaults_variant": (str, "primary"),
    "geometry.C_LSI": (float, ...),
    "geometry.C_P": (float, 1.0 / math.pi**2),
    "geometry.C_CKP": (float, 2.0),
    "gamma.variant": (str, "proof"),
    "gamma.scale": (float, 1.0),
    "verify.n": (int, 1),
    "verify.eta": (float, 3.0),
    "verify.eps_p": (float, 0.5),
    "verify.audit_states": (int, 1000),
    "verify.lsi_samples": (int, 100),
    "outputs.directory": (str, "out"),
    "outputs.formats": (str, "csv,json"),
    "outputs.field_times": (str, ""),
}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(path: str, typ, raw: str):
    raw = raw.strip()
    if typ is str:
        return raw
    if raw.lower() in ("none", ""):
        return None
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError
        if typ is int:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError
        return v
    except ValueError:
        raise ConfigError(path, f"expected {typ.__name__}, got {raw!r}") from None


_TERM = re.compile(r"^\s*([a-z_]+)\s*\(([^()]*)\)\s*$")
_KINDS = {"constant": 1, "indicator": 3, "cosine_bump": 3}


def parse_initial(path: str, text: str) -> list[tuple[str, tuple[float, ...]]]:
    terms = []
    for chunk in text.split("+"):
        m = _TERM.match(chunk)
        if not m:
            raise ConfigError(path, f"cannot parse initial-data term {chunk.strip()!r}")
        kind, args = m.group(1), m.group(2)
        if kind not in _KINDS:
            raise ConfigError(path, f"unknown kind {kind!r}; use one of {sorted(_KINDS)}")
        try:
            vals = tuple(float(a) for a in args.split(",")) if args.strip() else ()
        except ValueError:
            raise ConfigError(path, f"non-numeric argument in {chunk.strip()!r}") from None
        if len(vals) != _KINDS[kind]:
            raise ConfigError(path, f"{kind} takes {_KINDS[kind]} arguments, got {len(vals)}")
        terms.append((kind, vals))
    return terms


def _cosine_bump(center, half_width, height, grid: Grid1D) -> np.ndarray:
    # exact cell averages of the raised cosine
    def prim(x):
        x = np.clip(x, center - half_width, center + half_width)
        return 0.5 * (x + half_width / math.pi * np.sin(math.pi * (x - center) / half_width))

    e = grid.edges
    return height * (prim(e[1:]) - prim(e[:-1])) / grid.h


def build_field(path: str, terms, grid: Grid1D) -> np.ndarray:
    f = np.zeros(grid.n_cells)
    for kind, vals in terms:
        try:
            if kind == "constant":
                if vals[0] < 0:
                    raise ValueError("constant must be non-negative")
                f += vals[0]
            elif kind == "indicator":
                f += project_indicator(*vals, grid)
            else:
                c, w, hgt = vals
                if not (w > 0 and hgt >= 0):
                    raise ValueError("cosine_bump needs half_width > 0 and height >= 0")
                f += _cosine_bump(c, w, hgt, grid)
        except ValueError as err:
            raise ConfigError(path, str(err)) from None
    return f


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    # typed views -----------------------------------------------------------
    def _wrap(self, section, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except ValueError as err:
            msg = str(err)
            m = re.search(r"\b([a-z]+\.[A-Za-z_]+)\b", msg)
            raise ConfigError(m.group(1) if m else section, msg) from None

    @property
    def grid(self) -> Grid1D:
        return self._wrap("grid.n_cells", lambda: Grid1D(self["grid.n_cells"]))

    @property
    def rates(self) -> RateConstants:
        v = self.values
        return self._wrap("rates", lambda: RateConstants(v["rates.k_f"], v["rates.k_r"], v["rates.k_c"]))

    @property
    def diffusion(self) -> DiffusionCoeffs:
        v = self.values
        return self._wrap("diffusion", lambda: DiffusionCoeffs(
            v["diffusion.d_e"], v["diffusion.d_s"], v["diffusion.d_c"], v["diffusion.d_p"]))

    @property
    def geometry(self) -> GeometryConstants:
        v = self.values
        return self._wrap("geometry", lambda: GeometryConstants(
            v["geometry.C_LSI"], v["geometry.C_P"], v["geometry.C_CKP"]))

    @property
    def stepper(self) -> StepperConfig:
        v = self.values

        def make():
            try:
                scheme = Scheme(v["stepper.scheme"])
            except ValueError:
                raise ConfigError("stepper.scheme", f"unknown scheme {v['stepper.scheme']!r}") from None
            return StepperConfig(v["stepper.dt"], v["stepper.t_end"], v["stepper.record_every"],
                                 v["stepper.negativity_tolerance"], scheme)
        return self._wrap("stepper", make)

    def initial_state(self) -> SystemState:
        g = self.grid
        fields = {}
        for sp in "escp":
            path = f"initial.{sp}"
            fields[sp] = build_field(path, parse_initial(path, self[path]), g)
        return SystemState(g, **fields)

    @property
    def field_times(self) -> list[float]:
        raw = self["outputs.field_times"].strip()
        if not raw:
            return []
        try:
            return [float(x) for x in raw.split(",")]
        except ValueError:
            raise ConfigError("outputs.field_times", f"bad time list {raw!r}") from None

    @property
    def formats(self) -> set[str]:
        fm = {x.strip() for x in self["outputs.formats"].split(",") if x.strip()}
        bad = fm - {"csv", "json"}
        if bad:
            raise ConfigError("outputs.formats", f"unknown formats {sorted(bad)}")
        return fm

    def validate(self) -> "RunConfig":
        self.grid, self.rates, self.diffusion, self.geometry, self.stepper
        self.initial_state()
        self.field_times, self.formats
        if self["entropy.defaults_variant"] not in ("primary", "alternative"):
            raise ConfigError("entropy.defaults_variant", "use 'primary' or 'alternative'")
        if self["gamma.variant"] not in ("proof", "statement"):
            raise ConfigError("gamma.variant", "use 'proof' or 'statement'")
        if not self["entropy.use_defaults"]:
            for key in ("entropy.eps_s", "entropy.k"):
                if self[key] is None:
                    raise ConfigError(key, "required when entropy.use_defaults = false")
        return self

    # serialisation ---------------------------------------------------------
    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(self.values[k])}\n" for k in _SCHEMA
                       if self.values.get(k) is not None)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        return parse_config(self.to_text() + "".join(f"{k} = {v}\n" for k, v in overrides.items()))


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text; later lines override earlier ones."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown configuration key")
        raw[key] = val
    values = {}
    for key, (typ, default) in _SCHEMA.items():
        if key in raw:
            values[key] = _convert(key, typ, raw[key])
        elif default is ...:
            raise ConfigError(key, "missing required key")
        else:
            values[key] = default
    return RunConfig(values).validate()


def load_config(path) -> RunConfig:
    """Read a config file, or the ``config_text`` echoed in a run manifest."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError(str(path), f"cannot read config: {err.strerror}") from None
    if p.suffix == ".json":
        try:
            text = json.loads(text)["config_text"]
        except (ValueError, KeyError, TypeError):
            raise ConfigError(str(path), "not a run manifest with a config_text entry") from None
    return parse_config(text)


PRESETS = {
    "fig1": """\
grid.n_cells = 200
rates.k_f = 100
rates.k_r = 1
rates.k_c = 1
diffusion.d_e = 0
diffusion.d_s = 0.02
diffusion.d_c = 0
diffusion.d_p = 0.02
initial.e = indicator(0.4, 0.6, 0.2)
initial.s = indicator(0.1, 0.3, 1.5)
stepper.dt = 1e-4
stepper.t_end = 200
stepper.record_every = 1000
entropy.eps_s = 0.1
geometry.C_LSI = 10
outputs.field_times = 0, 10, 80, 200
""",
    "degenerate-benchmark": """\
grid.n_cells = 50
rates.k_f = 1
rates.k_r = 1
rates.k_c = 1
diffusion.d_e = 0
diffusion.d_s = 1
diffusion.d_c = 0
diffusion.d_p = 1
initial.e = constant(0.5) + indicator(0.4, 0.6, 0.5)
initial.s = indicator(0.1, 0.3, 1.0)
stepper.dt = 1e-3
stepper.t_end = 20
stepper.record_every = 10
entropy.eps_s = 0.1
geometry.C_LSI = 10
outputs.field_times = 0, 1, 5, 20
""",
    "full-benchmark": """\
grid.n_cells = 50
rates.k_f = 1
rates.k_r = 1
rates.k_c = 1
diffusion.d_e = 0.5
diffusion.d_s = 1
diffusion.d_c = 0.5
diffusion.d_p = 1
initial.e = constant(0.5) + indicator(0.4, 0.6, 0.5)
initial.s = indicator(0.1, 0.3, 1.0)
stepper.dt = 1e-3
stepper.t_end = 20
stepper.record_every = 10
geometry.C_LSI = 10
outputs.field_times = 0, 1, 5, 20
""",
    # small substrate mass and slow enzyme diffusion: the first rate branch
    # binds with a small denominator, so a doubled rate is detectably wrong
    "full-tight": """\
grid.n_cells = 50
rates.k_f = 1
rates.k_r = 1
rates.k_c = 1
diffusion.d_e = 0.003
diffusion.d_s = 1
diffusion.d_c = 1
diffusion.d_p = 1
initial.e = constant(0.5) + indicator(0.0, 0.5, 1.0)
initial.s = indicator(0.1, 0.3, 0.0025)
stepper.dt = 1e-2
stepper.t_end = 100
stepper.record_every = 10
geometry.C_LSI = 10
outputs.field_times = 0, 100
""",
}


def preset(name: str) -> RunConfig:
    try:
        return parse_config(PRESETS[name])
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
