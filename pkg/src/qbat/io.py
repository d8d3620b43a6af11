"""JSON run configuration and CSV output.

Config schema (every key optional, unknown keys rejected)::

    {
      "eps": [0.0, 1.0, 1.95],
      "shape12": "linear_up", "shape23": "linear_down",
      "shape13": "zero" | "sin" | "one_minus_cos_pow" | ...,
      "n": 1,
      "omega0": 1.0,
      "phi": 1.5707963267948966,
      "tau": 50.0,
      "tau_grid": {"start": 0.1, "stop": 50.0, "points": 500}  or  [x0, x1, ...],
      "phi_grid": {"start": 0.0, "stop": 6.283185307179586, "points": 201}  or  [...],
      "search": {"lo": 0.02, "hi": 200.0, "step": 0.02, "tol": 0.0001},
      "integrator": {"max_step_scaled": 0.01, "trace_drift_tol": 1e-8,
                     "picture": "interaction", "min_samples": 1000},
      "out": "result.csv"
    }

Any shape key may also take an object ``{"kind": ..., "n": ...}``; the
top-level ``n`` is the exponent of ``shape13``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .core import BatterySpectrum, DomainError, PulseSchedule, PulseShape, ShapeKind
from .dynamics import IntegratorConfig
from .sweeps import TauSearch

SHAPE_ALIASES = {
    "zero": ShapeKind.ZERO,
    "none": ShapeKind.ZERO,
    "linear_up": ShapeKind.LINEAR_UP,
    "linear_down": ShapeKind.LINEAR_DOWN,
    "sin": ShapeKind.SIN_PI,
    "sin_pi": ShapeKind.SIN_PI,
    "one_minus_cos_pow": ShapeKind.ONE_MINUS_COS_POW,
    "one_minus_cos": ShapeKind.ONE_MINUS_COS_POW,
}

TOP_KEYS = {
    "eps", "shape12", "shape23", "shape13", "n", "omega0", "phi", "tau",
    "tau_grid", "phi_grid", "search", "integrator", "out",
}
GRID_KEYS = {"start", "stop", "points"}
SEARCH_KEYS = {"lo", "hi", "step", "tol"}
INTEGRATOR_KEYS = {"max_step_scaled", "trace_drift_tol", "picture", "min_samples"}

DEFAULT_TAU_GRID = {"start": 0.1, "stop": 50.0, "points": 500}
DEFAULT_PHI_GRID = {"start": 0.0, "stop": 2 * math.pi, "points": 201}


class ConfigError(ValueError):
    """Bad configuration; ``kind`` is ``"parse"`` or ``"validation"``."""

    def __init__(self, message: str, path: str = "", kind: str = "parse"):
        self.path = path
        self.kind = kind
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True, eq=False)
class RunConfig:
    spectrum: BatterySpectrum = field(default_factory=BatterySpectrum)
    schedule: PulseSchedule = field(default_factory=lambda: PulseSchedule(tau=50.0))
    tau_grid: object = field(default_factory=lambda: dict(DEFAULT_TAU_GRID))
    phi_grid: object = field(default_factory=lambda: dict(DEFAULT_PHI_GRID))
    search: TauSearch = field(default_factory=TauSearch)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    out: str | None = None

    def tau_values(self) -> np.ndarray:
        return _grid_values(self.tau_grid)

    def phi_values(self) -> np.ndarray:
        return _grid_values(self.phi_grid)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return to_dict(self) == to_dict(other)


def _grid_values(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["points"])
    return np.asarray(spec, dtype=float)


def _number(value, path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError("must be finite", path, "validation")
    if positive and v <= 0:
        raise ConfigError(f"must be positive, got {v}", path, "validation")
    return v


def _integer(value, path, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    if value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", path, "validation")
    return value


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"expected an object, got {type(obj).__name__}", path)
    for key in obj:
        if key not in allowed:
            raise ConfigError("unknown key", f"{path}.{key}" if path else key)


def parse_shape(value, path, n=None) -> PulseShape:
    if isinstance(value, dict):
        _check_keys(value, {"kind", "n"}, path)
        if "kind" not in value:
            raise ConfigError("missing key", f"{path}.kind")
        n = value.get("n", n)
        value = value["kind"]
        path = f"{path}.kind"
    if not isinstance(value, str):
        raise ConfigError(f"expected a shape name, got {value!r}", path)
    kind = SHAPE_ALIASES.get(value.lower())
    if kind is None:
        raise ConfigError(f"unknown shape {value!r}; choose from {sorted(SHAPE_ALIASES)}", path)
    exponent = 1 if n is None else _integer(n, "n")
    return PulseShape(kind, exponent)


def _parse_grid(value, path, positive):
    if isinstance(value, list):
        vals = [_number(v, f"{path}[{i}]", positive) for i, v in enumerate(value)]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("grid must be strictly ascending", path, "validation")
        if not vals:
            raise ConfigError("grid must be nonempty", path, "validation")
        return vals
    _check_keys(value, GRID_KEYS, path)
    missing = GRID_KEYS - set(value)
    if missing:
        raise ConfigError(f"missing keys {sorted(missing)}", path)
    start = _number(value["start"], f"{path}.start", positive)
    stop = _number(value["stop"], f"{path}.stop", positive)
    points = _integer(value["points"], f"{path}.points")
    if points > 1 and stop <= start:
        raise ConfigError("stop must exceed start", path, "validation")
    return {"start": start, "stop": stop, "points": points}


def from_dict(doc: dict) -> RunConfig:
    """Validate a decoded config document and fill in defaults."""
    _check_keys(doc, TOP_KEYS, "")
    if "eps" in doc:
        eps = doc["eps"]
        if not isinstance(eps, list) or len(eps) != 3:
            raise ConfigError("expected a list of three numbers", "eps")
        vals = [_number(e, f"eps[{i}]") for i, e in enumerate(eps)]
        try:
            spectrum = BatterySpectrum(*vals)
        except DomainError as exc:
            raise ConfigError(str(exc), "eps", "validation") from None
    else:
        spectrum = BatterySpectrum()

    n = doc.get("n")
    shape12 = parse_shape(doc.get("shape12", "linear_up"), "shape12")
    shape23 = parse_shape(doc.get("shape23", "linear_down"), "shape23")
    shape13 = parse_shape(doc.get("shape13", "zero"), "shape13", n)
    if n is not None and shape13.kind is not ShapeKind.ONE_MINUS_COS_POW:
        _integer(n, "n")
    omega0 = _number(doc.get("omega0", 1.0), "omega0", positive=True)
    phi = _number(doc.get("phi", math.pi / 2), "phi")
    tau = _number(doc.get("tau", 50.0), "tau", positive=True)
    schedule = PulseSchedule(shape12, shape23, shape13, omega0, tau, phi)

    tau_grid = _parse_grid(doc.get("tau_grid", DEFAULT_TAU_GRID), "tau_grid", positive=True)
    phi_grid = _parse_grid(doc.get("phi_grid", DEFAULT_PHI_GRID), "phi_grid", positive=False)

    s = doc.get("search", {})
    _check_keys(s, SEARCH_KEYS, "search")
    d = TauSearch()
    try:
        search = TauSearch(
            lo=_number(s.get("lo", d.lo), "search.lo", True),
            hi=_number(s.get("hi", d.hi), "search.hi", True),
            step=_number(s.get("step", d.step), "search.step", True),
            tol=_number(s.get("tol", d.tol), "search.tol", True),
        )
    except DomainError as exc:
        raise ConfigError(str(exc), "search", "validation") from None

    g = doc.get("integrator", {})
    _check_keys(g, INTEGRATOR_KEYS, "integrator")
    di = IntegratorConfig()
    picture = g.get("picture", di.picture)
    if picture not in ("interaction", "lab"):
        raise ConfigError(f"must be 'interaction' or 'lab', got {picture!r}", "integrator.picture", "validation")
    integrator = IntegratorConfig(
        max_step_scaled=_number(g.get("max_step_scaled", di.max_step_scaled), "integrator.max_step_scaled", True),
        trace_drift_tol=_number(g.get("trace_drift_tol", di.trace_drift_tol), "integrator.trace_drift_tol", True),
        picture=picture,
        min_samples=_integer(g.get("min_samples", di.min_samples), "integrator.min_samples", 2),
    )

    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("expected a path string", "out")
    return RunConfig(spectrum, schedule, tau_grid, phi_grid, search, integrator, out)


def parse_config(text: str) -> RunConfig:
    """Parse a JSON config document; an empty document gives all defaults."""
    if not text.strip():
        return RunConfig()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    return from_dict(doc)


def _shape_doc(shape: PulseShape):
    if shape.kind is ShapeKind.ONE_MINUS_COS_POW:
        return {"kind": shape.kind.value, "n": shape.n}
    return shape.kind.value


def to_dict(cfg: RunConfig) -> dict:
    sch = cfg.schedule
    doc = {
        "eps": [cfg.spectrum.eps1, cfg.spectrum.eps2, cfg.spectrum.eps3],
        "shape12": _shape_doc(sch.shape12),
        "shape23": _shape_doc(sch.shape23),
        "shape13": _shape_doc(sch.shape13),
        "omega0": sch.omega0,
        "phi": sch.phi,
        "tau": sch.tau,
        "tau_grid": cfg.tau_grid if isinstance(cfg.tau_grid, dict) else list(cfg.tau_grid),
        "phi_grid": cfg.phi_grid if isinstance(cfg.phi_grid, dict) else list(cfg.phi_grid),
        "search": {"lo": cfg.search.lo, "hi": cfg.search.hi, "step": cfg.search.step, "tol": cfg.search.tol},
        "integrator": {
            "max_step_scaled": cfg.integrator.max_step_scaled,
            "trace_drift_tol": cfg.integrator.trace_drift_tol,
            "picture": cfg.integrator.picture,
            "min_samples": cfg.integrator.min_samples,
        },
    }
    if cfg.out is not None:
        doc["out"] = cfg.out
    return doc


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2, sort_keys=True)


# -- CSV ---------------------------------------------------------------------

SIMULATE_HEADER = ("t[1/Omega0]", "P1", "P2", "P3", "energy[hbar*Omega0]", "ergotropy[hbar*Omega0]")
TAU_SWEEP_HEADER = ("omega0_tau[1]", "ergotropy[hbar*Omega0]", "power[hbar*Omega0^2]")
PHI_SWEEP_HEADER = ("phi[rad]", "p_max[hbar*Omega0^2]", "tau_star[Omega0*tau]", "c_at_max[hbar*Omega0]")
CONTOUR_HEADER = ("phi[rad]", "omega0_tau[1]", "energy[hbar*Omega0]", "power[hbar*Omega0^2]")


def format_value(x: float) -> str:
    return format(float(x), ".12g")


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(header, rows, path) -> None:
    """Write ``rows`` under ``header`` atomically (temp file + rename)."""
    text = csv_text(header, np.asarray(rows, dtype=float).reshape(-1, len(header)))
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".qbat-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path):
    """Return ``(header, rows)`` from a file written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    header = tuple(lines[0].split(","))
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]]).reshape(-1, len(header))
    return header, rows
