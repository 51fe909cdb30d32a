"""Charts, fields and exterior calculus on sampled jet representations.

Fields are declared per chart with :mod:`exprlang` components (``FormField``,
``VectorField``).  To compute, a field is *sampled*: every component is
evaluated as a Taylor jet at the points of a grid, giving a :class:`Form` (or
:class:`Vec`, :class:`Sym2`).  Exterior derivative, wedge, interior product,
Lie derivatives and pullbacks then act exactly on those jets.  Each
differentiation consumes one order of the jets, so sample at an order at least
the number of derivatives an identity involves.

A p-form with values of shape ``vshape`` is stored as an array of shape
``(P, *vshape, C(n, p), M)``: sample points, value indices, strictly increasing
coordinate multi-indices, monomials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from . import exprlang
from .exprlang import Expression
from .jets import JetAlgebra, Jet, get_algebra

__all__ = [
    "Chart", "Atlas", "Overlap", "GaugeTransition", "FormField", "VectorField",
    "Grid", "Form", "Vec", "Sym2", "GeometryError",
    "sample_points", "exterior_derivative", "wedge", "interior_product",
    "lie_derivative_form", "lie_derivative_metric", "lie_bracket", "pullback",
    "pullback_form", "pushforward", "combos", "constant_form",
]

KINDS = {"scalar": 0, "vector": 1, "algebra": 2, "matrix": 2, "spinor": 1}


class GeometryError(ValueError):
    pass


# --------------------------------------------------------------------------
# combinatorics of multi-indices

@lru_cache(maxsize=None)
def combos(n: int, p: int) -> tuple:
    return tuple(itertools.combinations(range(n), p))


@lru_cache(maxsize=None)
def _combo_index(n: int, p: int) -> dict:
    return {c: i for i, c in enumerate(combos(n, p))}


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _d_matrix(n: int, p: int) -> np.ndarray:
    """Signed map from (I, mu) pairs of partials to (p+1)-components."""
    src = _combo_index(n, p)
    out = np.zeros((len(combos(n, p + 1)), len(combos(n, p)), n))
    for j, J in enumerate(combos(n, p + 1)):
        for k, mu in enumerate(J):
            I = J[:k] + J[k + 1:]
            out[j, src[I], mu] += (-1) ** k
    return out


@lru_cache(maxsize=None)
def _wedge_tensor(n: int, p: int, q: int) -> np.ndarray:
    dst = _combo_index(n, p + q)
    out = np.zeros((len(combos(n, p + q)), len(combos(n, p)), len(combos(n, q))))
    for i, I in enumerate(combos(n, p)):
        for j, J in enumerate(combos(n, q)):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            out[dst[K], i, j] = _perm_sign(I + J)
    return out


@lru_cache(maxsize=None)
def _interior_tensor(n: int, p: int) -> np.ndarray:
    dst = _combo_index(n, p - 1)
    out = np.zeros((len(combos(n, p - 1)), n, len(combos(n, p))))
    for i, I in enumerate(combos(n, p)):
        for k, mu in enumerate(I):
            out[dst[I[:k] + I[k + 1:]], mu, i] = (-1) ** k
    return out


# --------------------------------------------------------------------------
# charts and atlases

@dataclass(frozen=True)
class Chart:
    name: str
    coords: tuple
    box: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "box", tuple((float(a), float(b)) for a, b in self.box))
        if len(self.box) != len(self.coords):
            raise GeometryError(f"chart {self.name}: box has {len(self.box)} intervals "
                                f"for {len(self.coords)} coordinates")
        if len(set(self.coords)) != len(self.coords):
            raise GeometryError(f"chart {self.name}: repeated coordinate names")
        for c, (a, b) in zip(self.coords, self.box):
            if not b > a:
                raise GeometryError(f"chart {self.name}: degenerate interval for {c}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def parse(self, text) -> Expression:
        if isinstance(text, Expression):
            return text
        if isinstance(text, (int, float)):
            text = repr(float(text)) if text >= 0 else f"-{repr(float(-text))}"
        return exprlang.parse(str(text), self.coords)

    def sample(self, npoints: int = 20, seed: int = 0, inset: float = 0.02) -> np.ndarray:
        return sample_points(self.box, npoints, seed, inset)


def sample_points(box, npoints: int = 20, seed: int = 0, inset: float = 0.02) -> np.ndarray:
    """Deterministic scrambled-Halton points inside ``box`` (slightly inset)."""
    box = np.asarray(box, dtype=float)
    d = len(box)
    gen = qmc.Halton(d=d, scramble=True, seed=np.random.default_rng(seed))
    u = gen.random(npoints)
    lo, hi = box[:, 0], box[:, 1]
    w = hi - lo
    return lo + inset * w + (1 - 2 * inset) * w * u


@dataclass(frozen=True)
class GaugeTransition:
    """Position-dependent group element ``gamma`` (matrix of expressions)."""

    chart: Chart
    entries: tuple
    group: str = "SO"
    spin: bool = False

    @classmethod
    def from_strings(cls, chart: Chart, rows, group="SO", spin=False):
        return cls(chart, tuple(tuple(chart.parse(e) for e in row) for row in rows), group, spin)

    @property
    def size(self) -> int:
        return len(self.entries)

    def sample(self, grid: "Grid") -> np.ndarray:
        return grid.evaluate(self.entries)

    def check(self, eta: np.ndarray, grid: "Grid", tol: float = 1e-9) -> float:
        """Max violation of ``gamma^T eta gamma = eta`` and ``det gamma = 1``."""
        g = self.sample(grid)[..., 0]
        res = np.abs(np.einsum("pba,bc,pcd->pad", g, eta, g) - eta).max()
        res = max(res, np.abs(np.linalg.det(g) - 1).max())
        return float(res)


@dataclass(frozen=True)
class Overlap:
    """Coordinate transition from chart ``src`` into chart ``dst`` on ``box``
    (a box in ``src`` coordinates), optionally with a gauge transition
    ``gamma`` expressed in ``src`` coordinates."""

    src: Chart
    dst: Chart
    transition: tuple
    box: tuple
    gauge: GaugeTransition | None = None

    def map_jets(self, grid: "Grid") -> np.ndarray:
        return grid.evaluate(self.transition)

    def jacobian_check(self, grid: "Grid") -> float:
        y = self.map_jets(grid)
        jac = grid.alg.grad(y, grid.n)[..., 0]
        return float(np.abs(np.linalg.det(jac)).min())


@dataclass
class Atlas:
    charts: dict = field(default_factory=dict)
    overlaps: dict = field(default_factory=dict)

    def add_chart(self, chart: Chart) -> None:
        self.charts[chart.name] = chart

    def add_overlap(self, ov: Overlap) -> None:
        self.overlaps[(ov.src.name, ov.dst.name)] = ov


# --------------------------------------------------------------------------
# sampled jets

class Grid:
    """Sample points of a chart with their coordinate jets.

    ``extra`` appends parameter variables to the algebra (they are not
    coordinates and do not take part in exterior derivatives).
    """

    def __init__(self, chart: Chart | None, points: np.ndarray, order: int = 3,
                 extra: int = 0, coords: Sequence[str] | None = None):
        self.chart = chart
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.coords = tuple(chart.coords if coords is None else coords)
        self.n = len(self.coords)
        if self.points.shape[1] != self.n:
            raise GeometryError("points do not match the chart dimension")
        self.order = order
        self.alg = get_algebra(self.n + extra, order)
        self.jets = self.alg.coordinates(self.points)
        self.env = dict(zip(self.coords, self.jets))

    @classmethod
    def sample(cls, chart: Chart, npoints: int = 20, seed: int = 0, order: int = 3,
               box=None, extra: int = 0) -> "Grid":
        pts = sample_points(chart.box if box is None else box, npoints, seed)
        return cls(chart, pts, order, extra)

    @property
    def npoints(self) -> int:
        return self.points.shape[0]

    def with_env(self, env: Mapping[str, Jet]) -> "Grid":
        g = object.__new__(Grid)
        g.__dict__.update(self.__dict__)
        g.env = dict(env)
        return g

    def evaluate(self, entries, env=None) -> np.ndarray:
        """Jets of a nested sequence of expressions, shape ``(P, *shape, M)``."""
        env = self.env if env is None else env
        arr = np.asarray(entries, dtype=object)
        flat = [exprlang.evaluate_jet(self._expr(e), env) for e in arr.reshape(-1)]
        tpl = next(iter(env.values()))
        P = tpl.c.shape[:-1]
        if not flat:
            return np.zeros(P + arr.shape + (self.alg.size,))
        cs = [np.broadcast_to(j.c, P + (self.alg.size,)) for j in flat]
        out = np.stack(cs, axis=len(P)).reshape(P + arr.shape + (self.alg.size,))
        order = min(j.order for j in flat)
        return self.alg.truncate(np.array(out), order)

    def _expr(self, e):
        if isinstance(e, Expression):
            return e
        return exprlang.parse(str(e), self.coords)

    def scalar(self, text) -> Jet:
        return exprlang.evaluate_jet(self._expr(text), self.env)


@dataclass
class Form:
    """Sampled jet-valued p-form, see the module docstring for the layout."""

    alg: JetAlgebra
    n: int
    degree: int
    c: np.ndarray
    order: int
    kind: str = "scalar"
    degenerate: bool = False

    @property
    def vshape(self):
        return self.c.shape[1:-2]

    @property
    def ncomp(self) -> int:
        return self.c.shape[-2]

    @property
    def values(self) -> np.ndarray:
        """Component values at the sample points (drops the jet axis)."""
        return self.c[..., 0]

    def like(self, c, order=None, degree=None, kind=None) -> "Form":
        return Form(self.alg, self.n, self.degree if degree is None else degree, c,
                    self.order if order is None else order, self.kind if kind is None else kind)

    def _check(self, other: "Form"):
        if other.degree != self.degree or other.n != self.n:
            raise GeometryError("adding forms of different degree or dimension")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        return self.like(self.c + other.c, min(self.order, other.order))

    def __sub__(self, other: "Form") -> "Form":
        self._check(other)
        return self.like(self.c - other.c, min(self.order, other.order))

    def __neg__(self) -> "Form":
        return self.like(-self.c)

    def scale(self, s) -> "Form":
        """Multiply by a plain number (or array broadcasting over value axes)."""
        s = np.asarray(s)
        return self.like(self.c * s.reshape(s.shape + (1, 1)))

    def map_values(self, matrix: np.ndarray, spec: str) -> "Form":
        """Apply a constant linear map to the value indices, e.g. ``'ab,pb->pa'``
        style specs are written over value letters only: ``'ab,b->a'``."""
        ins, out = spec.split("->")
        m_sp, v_sp = ins.split(",")
        res = np.einsum(f"{m_sp},Z{v_sp}CM->Z{out}CM", matrix, self.c)
        return self.like(res)

    def component(self, idx) -> "Form":
        """Select value index ``idx`` (tuple) giving a form of smaller value rank."""
        if not isinstance(idx, tuple):
            idx = (idx,)
        c = self.c[(slice(None),) + idx]
        kind = "scalar" if c.ndim == 3 else self.kind
        return self.like(c, kind=kind)

    def full(self) -> np.ndarray:
        """Values as a fully antisymmetric array ``(P, *vshape, n, ..., n)``."""
        n, p = self.n, self.degree
        vals = self.values
        out = np.zeros(vals.shape[:-1] + (n,) * p, dtype=vals.dtype)
        for i, I in enumerate(combos(n, p)):
            for perm in itertools.permutations(range(p)):
                idx = tuple(I[k] for k in perm)
                out[(Ellipsis,) + idx] = _perm_sign(perm) * vals[..., i]
        return out

    def max_abs(self) -> float:
        if self.c.size == 0:
            return 0.0
        return float(np.abs(self.values).max())

    def argmax_point(self) -> int:
        v = np.abs(self.values).reshape(self.values.shape[0], -1)
        if v.size == 0:
            return 0
        return int(np.argmax(v.max(axis=1)))

    def truncated(self, order: int) -> "Form":
        return self.like(self.alg.truncate(self.c, order), min(order, self.order))


def constant_form(alg, n, degree, npoints, values, kind="scalar") -> Form:
    """Form with constant (non-jet) components ``values`` of shape ``(*vshape, C)``."""
    values = np.asarray(values, dtype=float)
    c = np.zeros((npoints,) + values.shape + (alg.size,), dtype=values.dtype)
    c[..., 0] = values
    return Form(alg, n, degree, c, alg.order, kind)


def zero_form(template: Form, degree: int, vshape=None, kind=None) -> Form:
    vshape = template.vshape if vshape is None else vshape
    C = len(combos(template.n, degree)) if 0 <= degree <= template.n else 0
    c = np.zeros((template.c.shape[0],) + tuple(vshape) + (C, template.alg.size),
                 dtype=template.c.dtype)
    return Form(template.alg, template.n, degree, c, template.order,
                template.kind if kind is None else kind, degenerate=True)


@dataclass
class Vec:
    """Sampled jet vector field: ``c`` has shape ``(P, n, M)``."""

    alg: JetAlgebra
    n: int
    c: np.ndarray
    order: int

    @property
    def values(self) -> np.ndarray:
        return self.c[..., 0]

    def __add__(self, other):
        return Vec(self.alg, self.n, self.c + other.c, min(self.order, other.order))

    def __sub__(self, other):
        return Vec(self.alg, self.n, self.c - other.c, min(self.order, other.order))

    def __neg__(self):
        return Vec(self.alg, self.n, -self.c, self.order)

    def times(self, f: np.ndarray, order: int | None = None) -> "Vec":
        """Multiply by a scalar jet field ``f`` of shape ``(P, M)``."""
        o = self.order if order is None else min(order, self.order)
        return Vec(self.alg, self.n, self.alg.mul(self.c, f[:, None, :], o), o)

    def as_form(self) -> Form:
        """The components as a vector-valued 0-form (for value-space algebra)."""
        return Form(self.alg, self.n, 0, self.c[:, :, None, :], self.order, "vector")


@dataclass
class Sym2:
    """Sampled symmetric 2-tensor ``g_{mu nu}``: ``c`` has shape ``(P, n, n, M)``."""

    alg: JetAlgebra
    n: int
    c: np.ndarray
    order: int

    @property
    def values(self) -> np.ndarray:
        return self.c[..., 0]

    def __sub__(self, other):
        return Sym2(self.alg, self.n, self.c - other.c, min(self.order, other.order))

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


# --------------------------------------------------------------------------
# declared fields

@dataclass(frozen=True)
class FormField:
    """p-form field with expression components on one or more charts.

    ``components[chart]`` is an object array of shape ``(*vshape, C(n, p))``
    (flattened to nested tuples) of expressions.
    """

    degree: int
    kind: str
    vshape: tuple
    components: Mapping

    @classmethod
    def from_dict(cls, chart: Chart, degree: int, comps: Mapping, kind: str = "scalar",
                  vshape: tuple = ()) -> "FormField":
        """Build from ``{(value_index..., multi_index): text}``; missing entries are 0.

        For scalar forms the key is just the multi-index (a tuple of coordinate
        positions or names, any order; the sign of the permutation is applied).
        """
        n = chart.dim
        idx = _combo_index(n, degree)
        arr = np.empty(tuple(vshape) + (len(combos(n, degree)),), dtype=object)
        arr[...] = exprlang.Num(0.0)
        nv = len(vshape)
        for key, text in comps.items():
            key = tuple(key) if isinstance(key, tuple) else (key,)
            vidx, mi = key[:nv], key[nv:]
            if len(mi) == 1 and isinstance(mi[0], tuple):
                mi = mi[0]
            mi = tuple(chart.coords.index(m) if isinstance(m, str) else m for m in mi)
            if len(set(mi)) != len(mi):
                continue
            sign = _perm_sign(mi)
            e = chart.parse(text)
            if sign < 0:
                e = exprlang.Neg(e)
            arr[vidx + (idx[tuple(sorted(mi))],)] = e
        return cls(degree, kind, tuple(vshape), {chart.name: _freeze(arr)})

    @classmethod
    def one_forms(cls, chart: Chart, rows, kind: str = "vector") -> "FormField":
        """Vector-valued 1-form from rows of coordinate components (e.g. a coframe)."""
        arr = np.array([[chart.parse(e) for e in row] for row in rows], dtype=object)
        return cls(1, kind, (arr.shape[0],), {chart.name: _freeze(arr)})

    @classmethod
    def scalar(cls, chart: Chart, text) -> "FormField":
        return cls(0, "scalar", (), {chart.name: (chart.parse(text),)})

    def sample(self, grid: Grid, chart_name: str | None = None, env=None) -> Form:
        name = chart_name or (grid.chart.name if grid.chart else next(iter(self.components)))
        comps = self.components[name]
        c = grid.evaluate(comps, env)
        order = grid.order
        return Form(grid.alg, grid.n, self.degree, c, order, self.kind)


def _freeze(arr):
    if not isinstance(arr, np.ndarray):
        return arr
    if arr.ndim == 0:
        return arr.item()
    return tuple(_freeze(a) for a in arr)


@dataclass(frozen=True)
class VectorField:
    components: Mapping

    @classmethod
    def from_strings(cls, chart: Chart, comps) -> "VectorField":
        if isinstance(comps, Mapping):
            comps = [comps.get(c, "0") for c in chart.coords]
        return cls({chart.name: tuple(chart.parse(e) for e in comps)})

    def sample(self, grid: Grid, chart_name: str | None = None) -> Vec:
        name = chart_name or grid.chart.name
        c = grid.evaluate(self.components[name])
        return Vec(grid.alg, grid.n, c, grid.order)


# --------------------------------------------------------------------------
# exterior calculus

def exterior_derivative(a: Form) -> Form:
    """Exterior derivative (consumes one jet order)."""
    n, p = a.n, a.degree
    if p >= n:
        return zero_form(a, p + 1)
    D = a.alg.grad(a.c, n)  # (P, *v, C, n, M)
    res = np.einsum("JIm,...ImM->...JM", _d_matrix(n, p), D)
    return Form(a.alg, n, p + 1, res, a.order - 1, a.kind)


_LETTERS = "abcdefghstuvwxy"


def _value_spec(a: Form, b: Form) -> str:
    ra, rb = len(a.vshape), len(b.vshape)
    if ra == 0:
        v = _LETTERS[:rb]
        return f",{v}->{v}"
    if rb == 0:
        v = _LETTERS[:ra]
        return f"{v},->{v}"
    if ra == 2 and rb == 1:
        return "ab,b->a"
    if ra == 2 and rb == 2:
        return "ab,bc->ac"
    if ra == 1 and rb == 2:
        return "a,ab->b"
    raise GeometryError(f"wedge of {a.kind} and {b.kind} values needs an explicit spec")


def wedge(a: Form, b: Form, spec: str | None = None) -> Form:
    """Wedge product; ``spec`` combines value indices (einsum over value letters),
    inferred for scalar factors, matrix-vector and matrix-matrix products."""
    if a.n != b.n:
        raise GeometryError("wedge of forms on different dimensions")
    n, p, q = a.n, a.degree, b.degree
    spec = spec or _value_spec(a, b)
    order = min(a.order, b.order)
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    kind = a.kind if len(out) == len(sa) and a.kind != "scalar" else b.kind
    if len(out) == 0:
        kind = "scalar"
    if p + q > n:
        shape = tuple(dict(zip(sa + sb, a.vshape + b.vshape))[ch] for ch in out)
        return zero_form(a, p + q, shape, kind)
    alg = a.alg
    pa = np.take(a.c, alg.pair_i, axis=-1)
    pb = np.take(b.c, alg.pair_j, axis=-1)
    W = _wedge_tensor(n, p, q)
    prod = np.einsum(f"Z{sa}IQ,Z{sb}JQ,KIJ->Z{out}KQ", pa, pb, W, optimize=True)
    res = np.add.reduceat(prod, alg.pair_starts, axis=-1)
    if order < alg.order:
        res[..., alg.degree > order] = 0
    return Form(alg, n, p + q, res, order, kind)


def interior_product(xi: Vec, a: Form) -> Form:
    n, p = a.n, a.degree
    if p == 0:
        return zero_form(a, 0, kind=a.kind)
    alg = a.alg
    order = min(xi.order, a.order)
    T = _interior_tensor(n, p)
    px = np.take(xi.c, alg.pair_i, axis=-1)
    pa = np.take(a.c, alg.pair_j, axis=-1)
    prod = np.einsum("ZmQ,Z...IQ,JmI->Z...JQ", px, pa, T, optimize=True)
    res = np.add.reduceat(prod, alg.pair_starts, axis=-1)
    if order < alg.order:
        res[..., alg.degree > order] = 0
    return Form(alg, n, p - 1, res, order, a.kind)


def lie_derivative_form(xi: Vec, a: Form) -> Form:
    """Naive Lie derivative ``d i_xi a + i_xi d a``, componentwise on values."""
    if a.degree == 0:
        da = exterior_derivative(a)
        return interior_product(xi, da)
    return exterior_derivative(interior_product(xi, a)) + interior_product(xi, exterior_derivative(a))


def lie_derivative_metric(xi: Vec, g: Sym2) -> Sym2:
    alg = xi.alg
    n = g.n
    order = min(xi.order, g.order) - 1
    dg = alg.grad(g.c, n)  # (P, n, n, rho, M)
    dxi = alg.grad(xi.c, n)  # (P, rho, mu, M): d_mu xi^rho
    t1 = alg.einsum("Zr,Zmnr->Zmn", xi.c, dg, order)
    t2 = alg.einsum("Zrn,Zrm->Zmn", g.c, dxi, order)
    t3 = alg.einsum("Zmr,Zrn->Zmn", g.c, dxi, order)
    return Sym2(alg, n, t1 + t2 + t3, order)


def lie_bracket(x: Vec, y: Vec) -> Vec:
    alg = x.alg
    order = min(x.order, y.order) - 1
    dx = alg.grad(x.c, x.n)
    dy = alg.grad(y.c, y.n)
    res = alg.einsum("Zm,Zrm->Zr", x.c, dy, order) - alg.einsum("Zm,Zrm->Zr", y.c, dx, order)
    return Vec(alg, x.n, res, order)


# --------------------------------------------------------------------------
# pullbacks

def _differentials(phi: np.ndarray, alg: JetAlgebra, n: int, order: int) -> Form:
    """The 1-forms d(phi^i) as a vector-valued 1-form (values indexed by i)."""
    D = alg.grad(phi, n)  # (P, m, n, M)
    return Form(alg, n, 1, D, order - 1, "vector")


def _assemble(comps: np.ndarray, dphi: Form, degree: int, m: int, kind: str,
              order: int) -> Form:
    """Sum a_I dphi^{i1} ^ ... ^ dphi^{ip} for components ``comps``
    ``(P, *vshape, C(m, p), M)`` given in target multi-indices."""
    alg, n = dphi.alg, dphi.n
    P = comps.shape[0]
    vshape = comps.shape[1:-2]
    if degree == 0:
        return Form(alg, n, 0, comps, order, kind)
    one = [Form(alg, n, 1, dphi.c[:, i], dphi.order, "scalar") for i in range(m)]
    out = None
    for k, I in enumerate(combos(m, degree)):
        basis = one[I[0]]
        for i in I[1:]:
            basis = wedge(basis, one[i])
        coef = Form(alg, n, 0, comps[..., k:k + 1, :], order, kind)
        term = wedge(coef, basis)
        out = term if out is None else out + term
    if out is None:
        c = np.zeros((P,) + vshape + (len(combos(n, degree)), alg.size))
        return Form(alg, n, degree, c, order - 1, kind, degenerate=True)
    return out


def pullback(phi: np.ndarray, alpha: FormField, grid: Grid, target: Chart) -> Form:
    """Pull a declared form on chart ``target`` back along ``phi``.

    ``phi`` holds the jets ``(P, m, M)`` of the target coordinates as functions
    of the grid coordinates (e.g. ``Overlap.map_jets``).
    """
    m = target.dim
    env = {name: Jet(grid.alg, phi[:, i], grid.order) for i, name in enumerate(target.coords)}
    comps = grid.evaluate(alpha.components[target.name], env)
    return _assemble(comps, _differentials(phi, grid.alg, grid.n, grid.order),
                     alpha.degree, m, alpha.kind, grid.order)


def pullback_form(phi: np.ndarray, grid_alg: JetAlgebra, n: int, a: Form,
                  order: int | None = None) -> Form:
    """Pull back a *sampled* form ``a`` (jets in the target variables at
    ``phi``'s values) along ``phi`` by Taylor composition."""
    order = grid_alg.order if order is None else order
    m = a.n
    inner = phi[..., :, :]  # (P, m_total, M)
    if inner.shape[-2] < a.alg.nvars:
        raise GeometryError("map does not supply every variable of the form's algebra")
    lead = a.c.shape[1:-1]
    inner_b = inner.reshape((inner.shape[0],) + (1,) * len(lead) + inner.shape[1:])
    comps = a.alg.compose(a.c, inner_b, grid_alg, min(order, a.order))
    dphi = _differentials(phi[:, :m], grid_alg, n, grid_alg.order)
    return _assemble(comps, dphi, a.degree, m, a.kind, min(order, a.order))


def pushforward(phi: np.ndarray, xi: Vec) -> Vec:
    """Push a vector field forward along ``phi``: ``(J xi)^i = d_mu phi^i xi^mu``."""
    alg = xi.alg
    order = min(xi.order, alg.order - 1)
    J = alg.grad(phi, xi.n)
    return Vec(alg, phi.shape[1], alg.einsum("Zim,Zm->Zi", J, xi.c, order), order)


def sym2_from_form(e: Form, eta: np.ndarray) -> Sym2:
    """``g_{mu nu} = eta_ab e^a_mu e^b_nu`` for a coframe stored as a 1-form."""
    alg = e.alg
    ec = e.c
    w = np.einsum("ab,ZbmM->ZamM", eta, ec)
    g = alg.einsum("Zam,Zan->Zmn", ec, w, e.order)
    return Sym2(alg, e.n, g, e.order)
