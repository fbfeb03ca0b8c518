"""Model catalog and JSON model files.

A :class:`Model` bundles a metric field, the faces of coordinate 0 that are
boundary, the Euler characteristic and optional collar / conformally compact
metadata.  Catalog models are defined in code so the numerical anchors never
go through the parser.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import fmath as m
from .boundary import CollarChart
from .errors import SchemaError
from .expr import ParseError, compile_expr, parse
from .metric import MetricField, from_expressions

S3_LO = (0.0, 0.0, 0.0)
S3_HI = (math.pi, math.pi, 2 * math.pi)
KINDS = ("bulk-chart", "collar", "conformally-compact")


@dataclass(frozen=True)
class CCData:
    """Conformally compact metadata.

    ``g_plus`` lives on a chart whose face ``x0 = lo`` is at infinity and
    ``rho`` is a defining function there.  ``geodesic_r`` (optional) is the
    analytic geodesic defining function for the boundary metric ``rho^2 g_plus``
    restricted to the face, and ``geodesic_collar`` the compactified metric in
    geodesic normal form ``dr^2 + g_r``.
    """

    g_plus: MetricField
    rho: Callable = field(compare=False)
    is_einstein: bool
    eps_grid: tuple[float, ...]
    geodesic_r: Callable | None = field(default=None, compare=False)
    geodesic_collar: CollarChart | None = None
    depth: float = 0.2


@dataclass(frozen=True)
class Model:
    name: str
    kind: str
    field: MetricField
    chi: int
    faces: tuple[str, ...] = ()
    collar: CollarChart | None = None
    cc: CCData | None = None
    params: tuple = ()
    # smooth global functions (list of jets/arrays from coordinates) used to build test conformal factors
    ambient: Callable | None = field(default=None, compare=False)

    @property
    def closed(self) -> bool:
        return not self.faces


# -- chart helpers ------------------------------------------------------------
def s3_diag(c, t):
    """Diagonal of the round S^3 metric in hyperspherical coordinates (chi, theta, phi)."""
    a = m.sin(c) ** 2
    return a, a * m.sin(t) ** 2


def warped_collar(name: str, f: Callable, r_max: float, chi: int, faces=("lo",), depth: float = 0.2) -> CollarChart:
    """``dr^2 + f(r) g_S3``."""

    def h(xs):
        r, c, t, _ = xs
        F = f(r)
        a, b = s3_diag(c, t)
        return [[F, 0.0, 0.0], [None, F * a, 0.0], [None, None, F * b]]

    return CollarChart(name, h, S3_LO, S3_HI, r_max, chi, depth=depth, faces=faces, ignorable=(3,))


def _dy(c, t):
    """Differentials of y0 = cos(chi), y1 = sin(chi) cos(theta) on (chi, theta)."""
    return [
        [-m.sin(c), 0.0 * c],
        [m.cos(c) * m.cos(t), -m.sin(c) * m.sin(t)],
    ]


def _sym_form(coef: np.ndarray, c, t):
    """k = sum c_ab dy_a dy_b as a 2x2 block in (chi, theta)."""
    dy = _dy(c, t)
    return [[sum(coef[a, b] * dy[a][u] * dy[b][v] for a in range(2) for b in range(2)) for v in range(2)] for u in range(2)]


def _coef(seed: int, salt: int = 0) -> np.ndarray:
    rng = np.random.default_rng([seed, salt])
    c = rng.normal(size=(2, 2))
    return 0.5 * (c + c.T)


def perturbed_collar(name: str, base: Callable, pert: Callable, r_max: float, chi: int) -> CollarChart:
    """``dr^2 + base(r) [g_S3 + pert(r, chi, theta)]`` with ``pert`` a 2x2 (chi, theta) block."""

    def h(xs):
        r, c, t, _ = xs
        F = base(r)
        a, b = s3_diag(c, t)
        k = pert(r, c, t)
        return [[F * (1.0 + k[0][0]), F * k[0][1], 0.0], [None, F * (a + k[1][1]), 0.0], [None, None, F * b]]

    return CollarChart(name, h, S3_LO, S3_HI, r_max, chi, ignorable=(3,))


def s3_ambient(radial: Callable, height: Callable) -> Callable:
    """Smooth functions ``radial(r) y0, radial(r) y1, height(r)`` on a warped S^3 collar (independent of x3)."""

    def amb(xs):
        r, c, t = xs[0], xs[1], xs[2]
        a = radial(r)
        return [a * m.cos(c), a * m.sin(c) * m.cos(t), height(r)]

    return amb


BALL_AMBIENT = s3_ambient(lambda r: 1 - r, lambda r: (1 - r) ** 2)
SPHERE_AMBIENT = s3_ambient(m.cos, m.sin)


def collar_model(chart: CollarChart, params=(), ambient: Callable | None = None) -> Model:
    return Model(chart.name, "collar", chart.metric_field(), chart.euler_char, chart.faces, chart, None, tuple(params), ambient)


# -- catalog --------------------------------------------------------------------
def flat_ball() -> Model:
    return collar_model(warped_collar("flat-ball", lambda r: (1 - r) ** 2, 1.0, 1), ambient=BALL_AMBIENT)


def hemisphere() -> Model:
    return collar_model(warped_collar("hemisphere", lambda r: m.cos(r) ** 2, math.pi / 2, 1), ambient=SPHERE_AMBIENT)


def cap(theta0: float = 1.0) -> Model:
    if not 0 < theta0 < math.pi:
        raise ValueError("cap colatitude must lie in (0, pi)")
    chart = warped_collar(f"cap({theta0:g})", lambda r: m.sin(theta0 - r) ** 2, theta0, 1)
    amb = s3_ambient(lambda r: m.sin(theta0 - r), lambda r: m.cos(theta0 - r))
    return collar_model(chart, (("theta0", theta0),), amb)


def cylinder_collar() -> Model:
    return collar_model(warped_collar("cylinder-collar", lambda r: 1.0 + 0.0 * r, 1.0, 0, faces=("lo", "hi")), ambient=s3_ambient(lambda r: 1.0 + 0.0 * r, lambda r: r))


def bump(eps: float = 1e-2, seed: int = 0) -> Model:
    """Flat ball with a non-umbilic perturbation (1-r)^2 [g_S3 + eps (1-r)^4 k]."""
    coef = _coef(seed)

    def pert(r, c, t):
        k = _sym_form(coef, c, t)
        s = eps * (1 - r) ** 4
        return [[s * k[0][0], s * k[0][1]], [None, s * k[1][1]]]

    chart = perturbed_collar(f"bump({eps:g},{seed})", lambda r: (1 - r) ** 2, pert, 1.0, 1)
    return collar_model(chart, (("eps", eps), ("seed", seed)), BALL_AMBIENT)


def even_collar(seed: int = 0, eps: float = 0.05) -> Model:
    """Hemisphere with an r-even perturbation: cos^2 r [g_S3 + eps cos^4 r (k1 + sin^2 r k2)].

    Every r-odd Taylor coefficient of h vanishes, so the boundary is totally
    geodesic; scalar curvature is not constant.
    """
    k1c, k2c = _coef(seed, 1), _coef(seed, 2)

    def pert(r, c, t):
        k1 = _sym_form(k1c, c, t)
        k2 = _sym_form(k2c, c, t)
        s = eps * m.cos(r) ** 4
        q = m.sin(r) ** 2
        return [[s * (k1[0][0] + q * k2[0][0]), s * (k1[0][1] + q * k2[0][1])], [None, s * (k1[1][1] + q * k2[1][1])]]

    chart = perturbed_collar(f"even-collar({seed})", lambda r: m.cos(r) ** 2, pert, math.pi / 2, 1)
    return collar_model(chart, (("seed", seed), ("eps", eps)), SPHERE_AMBIENT)


def round_s4() -> Model:
    def comps(xs):
        t, c, th, _ = xs
        s = m.sin(t) ** 2
        a, b = s3_diag(c, th)
        return [[1.0, 0.0, 0.0, 0.0], [None, s, 0.0, 0.0], [None, None, s * a, 0.0], [None, None, None, s * b]]

    f = MetricField("round-s4", ("t", "x1", "x2", "x3"), (0.0,) + S3_LO, (math.pi,) + S3_HI, comps, (3,))
    amb = lambda xs: [m.cos(xs[0]), m.sin(xs[0]) * m.cos(xs[1]), m.sin(xs[0]) * m.sin(xs[1]) * m.cos(xs[2])]  # noqa: E731
    return Model("round-s4", "bulk-chart", f, 2, ambient=amb)


def s2xs2() -> Model:
    def comps(xs):
        a, _, b, _ = xs
        return [[1.0, 0.0, 0.0, 0.0], [None, m.sin(a) ** 2, 0.0, 0.0], [None, None, 1.0, 0.0], [None, None, None, m.sin(b) ** 2]]

    f = MetricField("s2xs2", ("x0", "x1", "x2", "x3"), (0.0, 0.0, 0.0, 0.0), (math.pi, 2 * math.pi, math.pi, 2 * math.pi), comps, (1, 3))
    return Model("s2xs2", "bulk-chart", f, 4, ambient=lambda xs: [m.cos(xs[0]), m.cos(xs[2])])


DEFAULT_EPS_GRID = tuple(1e-4 * 2.0**-k for k in range(6))


def hyperbolic_ball(eps_grid=DEFAULT_EPS_GRID) -> Model:
    """Hyperbolic 4-ball.

    Ball chart: ``q = 1 - |x|`` on (0, 1], ``g_+ = 4 (1-|x|^2)^-2 (dq^2 + (1-q)^2 g_S3)``
    with ``rho = q - q^2/2`` so that ``rho^2 g_+`` is the flat unit ball.
    Geodesic defining function for the round boundary metric: ``r = 2q/(2-q)``,
    giving the normal form ``dr^2 + (1 - r^2/4)^2 g_S3``.
    """

    def gplus(xs):
        q, c, t, _ = xs
        conf = 4.0 / (q * (2 - q)) ** 2
        a, b = s3_diag(c, t)
        s = (1 - q) ** 2
        return [[conf, 0.0, 0.0, 0.0], [None, conf * s, 0.0, 0.0], [None, None, conf * s * a, 0.0], [None, None, None, conf * s * b]]

    gp = MetricField("hyperbolic-ball+", ("q", "x1", "x2", "x3"), (0.0,) + S3_LO, (1.0,) + S3_HI, gplus, (3,))
    geo = warped_collar("hyperbolic-ball:geodesic", lambda r: (1 - r**2 / 4) ** 2, 2.0, 1)
    cc = CCData(
        g_plus=gp,
        rho=lambda xs: xs[0] - xs[0] ** 2 / 2,
        is_einstein=True,
        eps_grid=tuple(eps_grid),
        geodesic_r=lambda xs: 2 * xs[0] / (2 - xs[0]),
        geodesic_collar=geo,
    )
    compact = warped_collar("hyperbolic-ball", lambda q: (1 - q) ** 2, 1.0, 1)
    return Model("hyperbolic-ball", "conformally-compact", compact.metric_field(), 1, ("lo",), compact, cc, (), BALL_AMBIENT)


_BUMP_PEAK = (10 / 7) ** 10 * (4 / 7) ** 4


def hyperbolic_bump(eps: float = 0.1, seed: int = 0) -> Model:
    """Hyperbolic ball with an interior perturbation of the compactification (not Einstein).

    ``dr^2 + (1 - r^2/4)^2 [g_S3 + eps b(r) k]`` in geodesic normal form with
    ``b = r^10 (2 - r)^4`` scaled to peak 1; the perturbation is invisible in g2, g3
    and vanishes near the centre.
    """
    coef = _coef(seed, 7)

    def pert(r, c, t):
        k = _sym_form(coef, c, t)
        s = eps / _BUMP_PEAK * r**10 * (2 - r) ** 4
        return [[s * k[0][0], s * k[0][1]], [None, s * k[1][1]]]

    geo = perturbed_collar("hyperbolic-bump:geodesic", lambda r: (1 - r**2 / 4) ** 2, pert, 2.0, 1)

    def gplus(xs):
        r = xs[0]
        hh = geo.h(xs)
        inv = r ** (-2)
        return [[inv, 0.0, 0.0, 0.0], [None, inv * hh[0][0], inv * hh[0][1], 0.0], [None, None, inv * hh[1][1], 0.0], [None, None, None, inv * hh[2][2]]]

    gp = MetricField("hyperbolic-bump+", ("r", "x1", "x2", "x3"), (0.0,) + S3_LO, (2.0,) + S3_HI, gplus, (3,))
    cc = CCData(gp, lambda xs: xs[0], False, DEFAULT_EPS_GRID, geodesic_r=lambda xs: xs[0], geodesic_collar=geo)
    return Model(f"hyperbolic-bump({eps:g},{seed})", "conformally-compact", geo.metric_field(), 1, ("lo",), geo, cc, (("eps", eps), ("seed", seed)))


CATALOG: dict[str, Callable[..., Model]] = {
    "flat-ball": flat_ball,
    "hemisphere": hemisphere,
    "cap": cap,
    "round-s4": round_s4,
    "s2xs2": s2xs2,
    "hyperbolic-ball": hyperbolic_ball,
    "bump": bump,
    "even-collar": even_collar,
    "cylinder-collar": cylinder_collar,
    "hyperbolic-bump": hyperbolic_bump,
}

_CALL = re.compile(r"^([a-z0-9-]+)(?:\((.*)\))?$")


def catalog(name: str) -> Model:
    """Resolve ``name`` or ``name(arg, ...)`` (e.g. ``bump(0.05, 3)``)."""
    mt = _CALL.match(name.strip())
    if not mt or mt.group(1) not in CATALOG:
        raise KeyError(f"unknown catalog model '{name}'")
    args = []
    if mt.group(2):
        for tok in mt.group(2).split(","):
            v = float(tok)
            args.append(int(v) if v.is_integer() and "." not in tok else v)
    return CATALOG[mt.group(1)](*args)


# -- model files ------------------------------------------------------------------
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": ["string", "number", "null"]}}}

SCHEMA = {
    "type": "object",
    "required": ["schemaVersion", "name", "kind", "coords", "domain", "chi"],
    "properties": {
        "schemaVersion": {"const": 1},
        "name": {"type": "string", "minLength": 1},
        "kind": {"enum": list(KINDS)},
        "coords": {"type": "array", "items": {"enum": ["x0", "x1", "x2", "x3", "r"]}, "minItems": 4, "maxItems": 4, "uniqueItems": True},
        "domain": {
            "type": "object",
            "required": ["lo", "hi"],
            "properties": {
                "lo": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                "hi": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
            },
        },
        "chi": {"type": "integer"},
        "metric": _MATRIX,
        "h": _MATRIX,
        "boundary": {
            "type": "object",
            "properties": {"faces": {"type": "array", "items": {"enum": ["lo", "hi"]}, "uniqueItems": True}},
        },
        "compactMetric": _MATRIX,
        "rho": {"type": "string"},
        "geodesicR": {"type": "string"},
        "isEinstein": {"type": "boolean"},
        "epsGrid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 4},
        "collarDepth": {"type": "number", "exclusiveMinimum": 0},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "collar"}}}, "then": {"required": ["h"]}},
        {"if": {"properties": {"kind": {"const": "bulk-chart"}}}, "then": {"required": ["metric"]}},
        {"if": {"properties": {"kind": {"const": "conformally-compact"}}}, "then": {"required": ["metric", "rho"]}},
    ],
}


def _check_matrix(mat, n: int, label: str, coords, violations: list) -> list:
    """Parse an n x n expression array; upper triangle is authoritative, lower must agree or be null."""
    if len(mat) != n or any(len(row) != n for row in mat):
        violations.append(f"{label}: expected a {n}x{n} array")
        return []
    parsed = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            v = mat[a][b]
            if v is None:
                if a <= b:
                    violations.append(f"{label}[{a}][{b}]: upper-triangle entry missing")
                continue
            try:
                parsed[a][b] = parse(str(v), coords)
            except ParseError as exc:
                violations.append(f"{label}[{a}][{b}]: {exc}")
    for a in range(n):
        for b in range(a + 1, n):
            lo, up = parsed[b][a], parsed[a][b]
            if mat[b][a] is not None and lo is not None and up is not None and lo != up:
                violations.append(f"{label}[{b}][{a}] differs from {label}[{a}][{b}] (metric must be symmetric)")
    return parsed


def load_model(path_or_name: str | Path) -> Model:
    """Catalog name or path to a JSON model file."""
    p = Path(str(path_or_name))
    if not p.suffix == ".json" and not p.exists():
        return catalog(str(path_or_name))
    data = json.loads(p.read_text(encoding="utf-8"))
    return model_from_dict(data)


def model_from_dict(data: dict) -> Model:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    violations = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in validator.iter_errors(data)]
    if violations:
        raise SchemaError(sorted(violations))
    coords = tuple(data["coords"])
    lo, hi = data["domain"]["lo"], data["domain"]["hi"]
    for i, (a, b) in enumerate(zip(lo, hi)):
        if not a < b:
            violations.append(f"domain: lo[{i}] must be < hi[{i}]")
    kind = data["kind"]
    faces = tuple(data.get("boundary", {}).get("faces", ["lo"] if kind != "bulk-chart" else []))
    name = data["name"]
    if kind == "collar":
        h = _check_matrix(data["h"], 3, "h", coords, violations)
        if violations:
            raise SchemaError(violations)
        comp = [[compile_expr(h[a][b], coords) if a <= b else None for b in range(3)] for a in range(3)]
        used = set().union(*(c.depends_on for row in comp for c in row if c is not None))

        def hfn(xs):
            return [[comp[a][b](*xs) if a <= b else None for b in range(3)] for a in range(3)]

        ign = tuple(i for i, c in enumerate(coords) if c not in used and i > 0)
        chart = CollarChart(name, hfn, tuple(lo[1:]), tuple(hi[1:]), float(hi[0]), int(data["chi"]), float(data.get("collarDepth", 0.2)), faces, ign, coords)
        if lo[0] != 0:
            raise SchemaError(["domain: collar charts start at r = 0"])
        return collar_model(chart)
    g = _check_matrix(data["metric"], 4, "metric", coords, violations)
    rho = None
    if kind == "conformally-compact":
        try:
            rho = compile_expr(data["rho"], coords)
        except ParseError as exc:
            violations.append(f"rho: {exc}")
    if violations:
        raise SchemaError(violations)
    fieldm = from_expressions(name, coords, lo, hi, g)
    if kind == "bulk-chart":
        return Model(name, kind, fieldm, int(data["chi"]), faces)
    geo = compile_expr(data["geodesicR"], coords) if "geodesicR" in data else None

    if "compactMetric" in data:
        # closed form of rho^2 g_+, finite on the face
        gbar = _check_matrix(data["compactMetric"], 4, "compactMetric", coords, violations)
        if violations:
            raise SchemaError(violations)
        cfield = from_expressions(name, coords, lo, hi, gbar)
    else:

        def compact(xs):
            rr = rho(*xs)
            gg = fieldm.components(xs)
            return [[gg[a][b] * rr**2 if a <= b else None for b in range(4)] for a in range(4)]

        cfield = MetricField(name, coords, fieldm.lo, fieldm.hi, compact, fieldm.ignorable)
    cc = CCData(
        g_plus=fieldm,
        rho=lambda xs: rho(*xs),
        is_einstein=bool(data.get("isEinstein", False)),
        eps_grid=tuple(data.get("epsGrid", DEFAULT_EPS_GRID)),
        geodesic_r=(lambda xs: geo(*xs)) if geo is not None else None,
        depth=float(data.get("collarDepth", 0.2)),
    )
    return Model(name, kind, cfield, int(data["chi"]), faces or ("lo",), None, cc)


def with_field(model: Model, fieldm: MetricField, name: str | None = None) -> Model:
    """Same model data on a different metric (collar gauge is dropped)."""
    return replace(model, name=name or fieldm.name, field=fieldm, collar=None, kind="bulk-chart" if model.kind == "collar" else model.kind)
