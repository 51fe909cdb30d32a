"""Seeded random corpora: expressions, coframes, vector fields and gauge data.

Every generator takes a ``numpy.random.Generator`` so that a single seed
reproduces a whole property suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exprlang
from .geometry import Chart, Grid, sample_points
from .jets import cos, cosh, sin, sinh

__all__ = [
    "random_expression", "random_smooth", "random_coframe", "random_vector_field",
    "random_lambda", "random_connection", "random_matter", "GaugeRecipe",
    "random_gauge", "expression_corpus", "rng_from_seed", "bounded_smooth",
]

_UNARY = ("sin", "cos", "tanh", "exp", "log", "sqrt", "sinh", "cosh", "tan", "abs")
_SAFE_UNARY = ("sin", "cos", "tanh")


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed & (2 ** 64 - 1)))


def _number(rng) -> str:
    v = round(float(rng.uniform(-2, 2)), int(rng.integers(0, 4)))
    return repr(v) if v >= 0 else f"({v!r})"


def random_expression(rng: np.random.Generator, coords, depth: int = 6) -> str:
    """Random well-defined expression on the box ``[-1, 1]^n``.

    Functions with restricted domains only receive guarded arguments
    (``log(1.5 + sin(u))``, ``sqrt(1 + u^2)``, division by ``2 + cos(u)``,
    ``tan`` of a ``tanh``), so the result is finite at every interior point.
    """
    if depth <= 1 or rng.random() < 0.2:
        return str(rng.choice(coords)) if rng.random() < 0.6 else _number(rng)
    kind = rng.random()
    sub = lambda: random_expression(rng, coords, depth - 1)  # noqa: E731
    if kind < 0.45:
        op = str(rng.choice(["+", "-", "*", "/", "^"]))
        if op == "/":
            return f"({sub()}) / (2 + cos({sub()}))"
        if op == "^":
            return f"({sub()})^{int(rng.integers(0, 4))}"
        return f"({sub()}) {op} ({sub()})"
    if kind < 0.55:
        return f"-({sub()})"
    if kind < 0.6:
        return f"atan2({sub()}, 2 + cos({sub()}))"
    f = str(rng.choice(_UNARY))
    u = sub()
    if f == "log":
        return f"log(1.5 + sin({u}))"
    if f == "sqrt":
        return f"sqrt(1 + ({u})^2)"
    if f in ("exp", "sinh", "cosh"):
        return f"{f}(sin({u}))"
    if f == "tan":
        return f"tan(tanh({u}))"
    if f == "abs":
        return f"abs(2 + sin({u}))"
    return f"{f}({u})"


def expression_corpus(seed: int, count: int = 1000, coords=("x", "y", "z"),
                      max_depth: int = 6) -> list:
    rng = rng_from_seed(seed)
    return [random_expression(rng, coords, int(rng.integers(1, max_depth + 1)))
            for _ in range(count)]


def random_smooth(rng: np.random.Generator, coords, depth: int = 4) -> str:
    """Polynomial/trigonometric expression of the given depth (no guarded functions)."""
    if depth <= 1 or rng.random() < 0.25:
        return str(rng.choice(coords)) if rng.random() < 0.7 else _number(rng)
    sub = lambda: random_smooth(rng, coords, depth - 1)  # noqa: E731
    r = rng.random()
    if r < 0.55:
        op = str(rng.choice(["+", "-", "*"]))
        return f"({sub()}) {op} ({sub()})"
    if r < 0.65:
        return f"({sub()})^2"
    return f"{rng.choice(_SAFE_UNARY)}({sub()})"


def _values(text: str, chart: Chart, seed: int = 0) -> np.ndarray:
    pts = sample_points(chart.box, 64, seed, inset=0.0)
    vals = exprlang.evaluate(chart.parse(text), dict(zip(chart.coords, pts.T)))
    return np.broadcast_to(np.asarray(vals, dtype=float), (len(pts),))


def _spread(text: str, chart: Chart) -> float:
    v = _values(text, chart)
    return float(v.max() - v.min())


def _scale(text: str, chart: Chart, amplitude: float, seed: int) -> str:
    """Rescale an expression so that it stays below ``amplitude`` on the chart box."""
    m = float(np.abs(_values(text, chart, seed)).max())
    if m < 1e-12:
        return text
    return f"{amplitude / (1.5 * m)!r}*({text})"


def random_coframe(rng: np.random.Generator, chart: Chart, depth: int = 4,
                   amplitude: float = 0.6) -> list:
    """Rows of a nondegenerate coframe: identity plus a bounded random perturbation.

    Each perturbation entry is kept below ``amplitude / n`` (checked on a dense
    sample of the box), so the matrix is strictly diagonally dominant there.
    """
    n = chart.dim
    rows = []
    for a in range(n):
        row = []
        for m in range(n):
            t = _scale(random_smooth(rng, chart.coords, depth), chart, amplitude / n,
                       int(rng.integers(1 << 30)))
            row.append(f"1 + {t}" if a == m else t)
        rows.append(row)
    return rows


def random_vector_field(rng: np.random.Generator, chart: Chart, depth: int = 4) -> list:
    return [_scale(random_smooth(rng, chart.coords, depth), chart, 1.0,
                   int(rng.integers(1 << 30))) for _ in range(chart.dim)]


def bounded_smooth(rng: np.random.Generator, chart: Chart, depth: int = 3,
                   amplitude: float = 1.0) -> str:
    """:func:`random_smooth` rescaled to stay below ``amplitude`` on the chart box."""
    return _scale(random_smooth(rng, chart.coords, depth), chart, amplitude,
                  int(rng.integers(1 << 30)))


def random_lambda(rng: np.random.Generator, chart: Chart, eta: np.ndarray,
                  depth: int = 3, amplitude: float = 1.0) -> list:
    """Matrix of expressions ``lambda^a_b`` with ``eta lambda`` antisymmetric."""
    N = eta.shape[0]
    lam = [["0"] * N for _ in range(N)]
    for a in range(N):
        for b in range(a + 1, N):
            t = bounded_smooth(rng, chart, depth, amplitude)
            # lambda_ab = t = -lambda_ba, lambda^a_b = eta^aa lambda_ab
            lam[a][b] = t if eta[a, a] > 0 else f"-({t})"
            lam[b][a] = f"-({t})" if eta[b, b] > 0 else t
    return lam


def random_connection(rng: np.random.Generator, chart: Chart, eta: np.ndarray,
                      depth: int = 3, amplitude: float = 1.0) -> dict:
    """Components ``{(a, b): row}`` for ``a < b``, for ``ConnectionForm.from_components``."""
    N = eta.shape[0]
    return {(a, b): [bounded_smooth(rng, chart, depth, amplitude) for _ in range(chart.dim)]
            for a in range(N) for b in range(a + 1, N)}


def random_matter(rng: np.random.Generator, chart: Chart, N: int, depth: int = 3,
                  amplitude: float = 1.0) -> list:
    """Rows of a vector-valued 1-form ``phi^a_mu``."""
    return [[bounded_smooth(rng, chart, depth, amplitude) for _ in range(chart.dim)]
            for _ in range(N)]


@dataclass(frozen=True)
class GaugeRecipe:
    """Position-dependent eta-orthogonal matrix as a product of elementary factors.

    ``factors`` lists ``(i, j, expression)``; for a spacelike or timelike pair
    the factor is a rotation in the ``(i, j)`` plane, for a mixed pair a boost.
    """

    eta: np.ndarray
    factors: tuple

    def jets(self, grid: Grid) -> np.ndarray:
        alg = grid.alg
        P = grid.npoints
        N = self.eta.shape[0]
        out = alg.constant(np.broadcast_to(np.eye(N), (P, N, N)).copy())
        for i, j, text in self.factors:
            t = grid.scalar(text)
            if self.eta[i, i] * self.eta[j, j] > 0:
                c, s, s2 = cos(t), sin(t), -sin(t)
            else:
                c, s, s2 = cosh(t), sinh(t), sinh(t)
            f = alg.constant(np.broadcast_to(np.eye(N), (P, N, N)).copy())
            shape = (P, alg.size)
            f[:, i, i] = np.broadcast_to(c.c, shape)
            f[:, j, j] = np.broadcast_to(c.c, shape)
            f[:, i, j] = np.broadcast_to(s2.c, shape)
            f[:, j, i] = np.broadcast_to(s.c, shape)
            out = alg.einsum("Zab,Zbc->Zac", out, f, grid.order)
        return out

    def values(self, chart: Chart, points: np.ndarray) -> np.ndarray:
        return self.jets(Grid(chart, points, 0))[..., 0]


def random_gauge(rng: np.random.Generator, chart: Chart, eta: np.ndarray,
                 depth: int = 3, amplitude: float = 1.0) -> GaugeRecipe:
    """Givens rotations and boosts over every index pair with random angle fields.

    Every angle field varies over the chart box, so the result is never constant.
    """
    N = eta.shape[0]
    factors = []
    for i in range(N):
        for j in range(i + 1, N):
            t = random_smooth(rng, chart.coords, depth)
            while _spread(t, chart) < 1e-3:
                t = random_smooth(rng, chart.coords, depth)
            factors.append((i, j, _scale(t, chart, amplitude, int(rng.integers(1 << 30)))))
    return GaugeRecipe(np.asarray(eta, dtype=float), tuple(factors))
