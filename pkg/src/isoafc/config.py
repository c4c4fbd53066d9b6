"""Case files: YAML documents mirroring :class:`ProblemConfig`.

Numbers may be written as plain literals or as constant expressions such as
``sqrt(2)`` or ``1/3``. Validation collects every problem with its field path
before raising.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import sympy
import yaml

from .profiles import EDGES, StepProfile, TableProfile
from .spline import KnotVector, TensorSplineSpace

FORMATS = ("vtk", "csv", "report", "png")
_CASES_DIR = Path(__file__).with_name("cases")


class ConfigError(ValueError):
    """Invalid case description; ``problems`` lists ``(path, message)`` pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = "\n".join(f"  {p}: {m}" for p, m in self.problems)
        super().__init__(f"{len(self.problems)} problem(s) in case description:\n{lines}")


@dataclass
class GeometryConfig:
    degree: int
    knots_xi: list[float]
    knots_eta: list[float]
    control_net: list[list[float]]


@dataclass
class RefinementConfig:
    target: list[int]


@dataclass
class PhysicsConfig:
    diffusion: float
    velocity: list[float]
    source: str = "zero"


@dataclass
class BoundaryConfig:
    profile: str = "paper-step"
    table: dict | None = None


@dataclass
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 500
    omega: float = 1.0
    quadrature: int | None = None
    limiter: bool = True
    force_alpha: float | None = None


@dataclass
class OutputConfig:
    resolution: int = 101
    formats: list[str] = field(default_factory=lambda: list(FORMATS))


@dataclass
class ProblemConfig:
    geometry: GeometryConfig
    refinement: RefinementConfig
    physics: PhysicsConfig
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    name: str = "case"

    def space(self) -> TensorSplineSpace:
        g = self.geometry
        return TensorSplineSpace(KnotVector(g.knots_xi, g.degree), KnotVector(g.knots_eta, g.degree))

    def net(self) -> np.ndarray:
        return np.array(self.geometry.control_net, dtype=float)

    def profile(self):
        if self.boundary.profile == "paper-step":
            return StepProfile()
        return TableProfile(self.boundary.table)

    def source_function(self):
        """Callable ``R(points)`` or None for a zero source."""
        src = self.physics.source.strip()
        if src.lower() == "zero":
            return None
        x, y = sympy.symbols("x y")
        f = sympy.lambdify((x, y), sympy.sympify(src), "numpy")
        return lambda pts: np.broadcast_to(f(pts[:, 0], pts[:, 1]), (len(pts),))


_SECTIONS = {
    "geometry": GeometryConfig,
    "refinement": RefinementConfig,
    "physics": PhysicsConfig,
    "boundary": BoundaryConfig,
    "solver": SolverConfig,
    "output": OutputConfig,
}
_REQUIRED = ("geometry", "refinement", "physics")


class _Collector:
    def __init__(self):
        self.problems = []

    def add(self, path, msg):
        self.problems.append((path, msg))

    def number(self, value, path):
        if isinstance(value, bool):
            self.add(path, "expected a number, got a boolean")
            return None
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
            try:
                expr = sympy.sympify(value, rational=True)
                if expr.free_symbols:
                    raise ValueError
                out = float(expr)
                if math.isfinite(out):
                    return out
            except (sympy.SympifyError, TypeError, ValueError):
                pass
        self.add(path, f"malformed number {value!r}")
        return None

    def integer(self, value, path):
        if isinstance(value, bool) or not isinstance(value, int):
            self.add(path, f"expected an integer, got {value!r}")
            return None
        return value

    def numbers(self, value, path, length=None):
        if not isinstance(value, list):
            self.add(path, "expected a list")
            return None
        if length is not None and len(value) != length:
            self.add(path, f"expected {length} entries, got {len(value)}")
            return None
        out = [self.number(v, f"{path}[{k}]") for k, v in enumerate(value)]
        return None if any(v is None for v in out) else out

    def keys(self, data, cls, path):
        allowed = set(cls.__dataclass_fields__)
        for k in data:
            if k not in allowed:
                self.add(f"{path}.{k}", "unknown field")


def _section(c: _Collector, raw: dict, name: str) -> dict:
    data = raw.get(name, {})
    if data is None:
        data = {}
    if not isinstance(data, dict):
        c.add(name, "expected a mapping")
        return {}
    c.keys(data, _SECTIONS[name], name)
    return data


def _require(c, data, key, path):
    if key not in data:
        c.add(f"{path}.{key}", "missing field")
        return None
    return data[key]


def config_from_dict(raw, name: str = "case") -> ProblemConfig:
    """Validate a raw mapping and build a :class:`ProblemConfig`."""
    c = _Collector()
    if not isinstance(raw, dict):
        raise ConfigError([("<root>", "expected a mapping at top level")])
    for k in raw:
        if k not in _SECTIONS and k != "name":
            c.add(k, "unknown section")
    for k in _REQUIRED:
        if k not in raw:
            c.add(k, "missing section")
    name = str(raw.get("name", name))

    # geometry
    g = _section(c, raw, "geometry")
    degree = _require(c, g, "degree", "geometry")
    if degree is not None:
        degree = c.integer(degree, "geometry.degree")
    if degree is not None and degree < 0:
        c.add("geometry.degree", "must be nonnegative")
        degree = None
    kvs = {}
    for key in ("knots_xi", "knots_eta"):
        v = _require(c, g, key, "geometry")
        if v is None:
            continue
        knots = c.numbers(v, f"geometry.{key}")
        if knots is not None and degree is not None:
            try:
                kvs[key] = KnotVector(knots, degree)
            except ValueError as exc:
                c.add(f"geometry.{key}", str(exc))
        elif knots is not None:
            kvs[key] = knots
    net = None
    v = _require(c, g, "control_net", "geometry")
    if v is not None:
        if not isinstance(v, list):
            c.add("geometry.control_net", "expected a list of [x, y] points")
        else:
            pts = [c.numbers(pt, f"geometry.control_net[{k}]", 2) for k, pt in enumerate(v)]
            if all(pt is not None for pt in pts):
                net = pts
    if net is not None and all(isinstance(kvs.get(k), KnotVector) for k in ("knots_xi", "knots_eta")):
        want = kvs["knots_xi"].n * kvs["knots_eta"].n
        if len(net) != want:
            c.add(
                "geometry.control_net",
                f"has {len(net)} points, knot vectors need "
                f"{kvs['knots_xi'].n} x {kvs['knots_eta'].n} = {want}",
            )

    # refinement
    rf = _section(c, raw, "refinement")
    target = None
    v = _require(c, rf, "target", "refinement")
    if v is not None:
        if not isinstance(v, list) or len(v) != 2:
            c.add("refinement.target", "expected two basis counts [n_xi, n_eta]")
        else:
            target = [c.integer(t, f"refinement.target[{k}]") for k, t in enumerate(v)]
            if any(t is None for t in target):
                target = None
    if target is not None:
        for k, key in enumerate(("knots_xi", "knots_eta")):
            kv = kvs.get(key)
            if isinstance(kv, KnotVector) and target[k] < kv.n:
                c.add(f"refinement.target[{k}]", f"{target[k]} is below the current count {kv.n}")

    # physics
    ph = _section(c, raw, "physics")
    d = _require(c, ph, "diffusion", "physics")
    d = c.number(d, "physics.diffusion") if d is not None else None
    if d is not None and d < 0:
        c.add("physics.diffusion", "must be nonnegative")
    vel = _require(c, ph, "velocity", "physics")
    vel = c.numbers(vel, "physics.velocity", 2) if vel is not None else None
    source = ph.get("source", "zero")
    if not isinstance(source, str):
        source = str(source)
    if source.strip().lower() != "zero":
        try:
            expr = sympy.sympify(source)
            extra = {s.name for s in expr.free_symbols} - {"x", "y"}
            if extra:
                c.add("physics.source", f"unknown symbols {sorted(extra)}")
        except (sympy.SympifyError, TypeError):
            c.add("physics.source", f"cannot parse expression {source!r}")

    # boundary
    bd = _section(c, raw, "boundary")
    profile = bd.get("profile", "paper-step")
    table = bd.get("table")
    if profile not in ("paper-step", "table"):
        c.add("boundary.profile", f"unknown profile {profile!r} (paper-step or table)")
    elif profile == "table":
        table = _check_table(c, table)

    # solver
    so = _section(c, raw, "solver")
    sdef = SolverConfig()
    tol = c.number(so.get("tolerance", sdef.tolerance), "solver.tolerance")
    if tol is not None and tol <= 0:
        c.add("solver.tolerance", "must be positive")
    maxit = c.integer(so.get("max_iterations", sdef.max_iterations), "solver.max_iterations")
    if maxit is not None and maxit < 1:
        c.add("solver.max_iterations", "must be at least 1")
    omega = c.number(so.get("omega", sdef.omega), "solver.omega")
    if omega is not None and not 0 < omega <= 1:
        c.add("solver.omega", "must lie in (0, 1]")
    quad = so.get("quadrature", None)
    if quad is not None:
        quad = c.integer(quad, "solver.quadrature")
        if quad is not None and quad < 1:
            c.add("solver.quadrature", "must be at least 1")
    limiter = so.get("limiter", True)
    if not isinstance(limiter, bool):
        c.add("solver.limiter", "expected true or false")
    force = so.get("force_alpha", None)
    if force is not None:
        force = c.number(force, "solver.force_alpha")
        if force is not None and force not in (0.0, 1.0):
            c.add("solver.force_alpha", "must be 0, 1 or null")

    # output
    out = _section(c, raw, "output")
    odef = OutputConfig()
    res = c.integer(out.get("resolution", odef.resolution), "output.resolution")
    if res is not None and res < 2:
        c.add("output.resolution", "must be at least 2")
    formats = out.get("formats", odef.formats)
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        c.add("output.formats", f"expected a list drawn from {list(FORMATS)}")

    if c.problems:
        raise ConfigError(c.problems)
    return ProblemConfig(
        geometry=GeometryConfig(
            degree, kvs["knots_xi"].knots.tolist(), kvs["knots_eta"].knots.tolist(), net
        ),
        refinement=RefinementConfig(target),
        physics=PhysicsConfig(d, vel, source),
        boundary=BoundaryConfig(profile, table),
        solver=SolverConfig(tol, maxit, omega, quad, limiter, force),
        output=OutputConfig(res, list(formats)),
        name=name,
    )


def _check_table(c: _Collector, table):
    if not isinstance(table, dict):
        c.add("boundary.table", "table profile needs a mapping of edge -> segments")
        return None
    for k in table:
        if k not in EDGES:
            c.add(f"boundary.table.{k}", "unknown edge")
    out = {}
    for e in EDGES:
        segs = table.get(e)
        path = f"boundary.table.{e}"
        if not isinstance(segs, list) or not segs:
            c.add(path, "expected a list of [t0, t1, value] segments")
            continue
        parsed = [c.numbers(s, f"{path}[{k}]", 3) for k, s in enumerate(segs)]
        if any(s is None for s in parsed):
            continue
        parsed.sort()
        ok = parsed[0][0] == 0.0 and parsed[-1][1] == 1.0
        ok &= all(a[1] == b[0] for a, b in zip(parsed, parsed[1:]))
        ok &= all(s[0] < s[1] for s in parsed)
        if not ok:
            c.add(path, "segments must tile [0, 1] without gaps or overlaps")
        out[e] = parsed
    return out


def parse_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([("<file>", f"YAML syntax error: {exc}")]) from exc
    return config_from_dict(raw, name=path.stem)


def config_to_dict(cfg: ProblemConfig) -> dict:
    d = asdict(cfg)
    if d["boundary"]["table"] is None:
        del d["boundary"]["table"]
    else:
        d["boundary"]["table"] = {e: [list(s) for s in segs] for e, segs in d["boundary"]["table"].items()}
    return d


def write_config(cfg: ProblemConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None))


def bundled_cases() -> dict[str, Path]:
    return {p.name: p for p in sorted(_CASES_DIR.glob("*.case"))}


def resolve_case(name_or_path) -> Path:
    """A path on disk, or the name of a bundled case (with or without suffix)."""
    p = Path(name_or_path)
    if p.exists():
        return p
    cases = bundled_cases()
    for key in (p.name, p.name + ".case"):
        if key in cases:
            return cases[key]
    raise FileNotFoundError(f"no case file {name_or_path!r} (bundled: {', '.join(cases)})")
