"""Abelian Kaluza-Klein reduction of invariant metrics and coframes.

Given a metric ``g`` on a chart of the total space and commuting fundamental
vector fields ``A_m``, the metric splits as

    g = h + G_mn theta^m theta^n,   G_mn = g(A_m, A_n),   theta^m(A_n) = delta^m_n,

with ``h`` horizontal.  Gram-Schmidt on ``theta`` (inner product of ``g^-1``)
gives the vertical part of an adapted coframe; an orthonormal coframe of ``h``
annihilating the ``A_m`` gives the base part.  The expansion
``e_theta^a = Phi^a_m theta^m`` defines the scalar ``Phi`` (for one fiber
dimension, the dilaton).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covlie import KosmannData, kosmann_lie_coframe
from .frames import Coframe, Metric, metric_from_coframe
from .geometry import (Chart, Form, GeometryError, Grid, Sym2,
                       exterior_derivative, lie_bracket, lie_derivative_form,
                       lie_derivative_metric, pullback_form)
from .jets import Jet
from . import jets as J

__all__ = [
    "KKSetup", "KKConnection", "ReducedFields", "KKError",
    "kk_connection_form", "gram_schmidt_vertical", "base_coframe", "adapted_coframe",
    "extract_fields", "adapted_gauge_check", "field_strength_flux", "reduce",
    "check_setup",
]


class KKError(GeometryError):
    pass


@dataclass
class KKSetup:
    """Declared reduction problem on one total-space chart."""

    chart: Chart
    fundamental: list
    base_coords: tuple
    metric: Metric | None = None
    coframe: Coframe | None = None
    fiber_periods: tuple | None = None
    quadrature_box: tuple | None = None
    section: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.fundamental)

    @property
    def fiber_coords(self) -> tuple:
        return tuple(c for c in self.chart.coords if c not in self.base_coords)

    def sample_metric(self, grid: Grid) -> Sym2:
        if self.metric is not None:
            return self.metric.sample(grid)
        if self.coframe is None:
            raise KKError("reduction needs a metric or a coframe")
        e = self.coframe.sample(grid)
        return metric_from_coframe(e, self.coframe.signature.eta, grid.points)

    def sample_fundamental(self, grid: Grid) -> list:
        return [A.sample(grid) for A in self.fundamental]


@dataclass
class KKConnection:
    theta: Form            # vector-valued 1-form, values indexed by m
    gV: np.ndarray         # (P, k, k, M)
    h: Sym2
    gram: np.ndarray       # <theta^m, theta^n> under g^-1, (P, k, k, M)


@dataclass
class ReducedFields:
    theta: Form
    gV: np.ndarray
    h: Sym2
    e_theta: Form
    e_h: Form
    e: Form
    eta: np.ndarray
    Phi: np.ndarray        # (P, k, k, M)
    fiber_signs: np.ndarray
    diagnostics: dict


def _sym_inverse(alg, c, order):
    return alg.matinv(c, order)


def check_setup(g: Sym2, A: list, tol: float = 1e-7) -> dict:
    """Hypotheses: commuting, non-null, metric-preserving fundamental fields."""
    alg = g.alg
    out = {"bracket": 0.0, "min_norm": np.inf, "invariance": 0.0}
    for i, a in enumerate(A):
        norm = alg.einsum("Zm,Zmn->Zn", a.c, g.c, g.order)
        norm = alg.einsum("Zn,Zn->Z", norm, a.c, g.order)
        out["min_norm"] = min(out["min_norm"], float(np.abs(norm[..., 0]).min()))
        if g.order >= 1:
            out["invariance"] = max(out["invariance"], lie_derivative_metric(a, g).max_abs())
        for b in A[i + 1:]:
            if a.order >= 1:
                out["bracket"] = max(out["bracket"], float(np.abs(lie_bracket(a, b).values).max()))
    if out["bracket"] > tol:
        raise KKError(f"fundamental fields do not commute (residual {out['bracket']:.3g})")
    if out["min_norm"] < 1e-12:
        raise KKError("a fundamental vector field is null")
    if out["invariance"] > tol:
        raise KKError(f"metric is not invariant along the fiber (residual {out['invariance']:.3g})")
    return out


def kk_connection_form(g: Sym2, A: list) -> KKConnection:
    alg, n, order = g.alg, g.n, g.order
    Ac = np.stack([a.c for a in A], axis=1)  # (P, k, mu, M)
    a_low = alg.einsum("Zkm,Zmn->Zkn", Ac, g.c, order)  # g(A_k, .)
    gV = alg.einsum("Zkn,Zln->Zkl", a_low, Ac, order)
    if np.any(np.abs(np.linalg.det(gV[..., 0])) < 1e-12):
        raise KKError("vertical metric is degenerate (null fundamental field)")
    gVi = _sym_inverse(alg, gV, order)
    theta = alg.einsum("Zkl,Zln->Zkn", gVi, a_low, order)
    hc = g.c - alg.einsum("Zkm,Zkn->Zmn", theta, alg.einsum("Zkl,Zln->Zkn", gV, theta, order), order)
    ginv = _sym_inverse(alg, g.c, order)
    gram = alg.einsum("Zkm,Zlm->Zkl", theta, alg.einsum("Zmn,Zln->Zlm", ginv, theta, order), order)
    th = Form(alg, n, 1, theta, order, "vector")
    return KKConnection(th, gV, Sym2(alg, n, hc, order), gram)


def gram_schmidt_vertical(theta: Form, gram: np.ndarray, tol: float = 1e-12):
    """Orthonormalize ``theta^1, ..., theta^k`` for the given Gram matrix.

    Returns ``(e_theta, L, signs)`` with ``e_theta^a = L^a_m theta^m``, ``L``
    lower triangular with positive diagonal, and ``signs[a] = <e^a, e^a>``
    (``-1`` for a timelike direction, normalized by absolute value).
    """
    alg = theta.alg
    order = theta.order
    P, k = gram.shape[0], gram.shape[1]
    # work on coefficient rows: e^a = sum_m L[a, m] theta^m
    L = np.zeros_like(gram)
    signs = np.ones((P, k))

    def ip(u, v):
        # <u, v> = u_m gram_mn v_n
        return alg.einsum("Zm,Zm->Z", u, alg.einsum("Zmn,Zn->Zm", gram, v, order), order)

    rows = []
    for a in range(k):
        v = np.zeros((P, k, alg.size), dtype=gram.dtype)
        v[:, a, 0] = 1.0
        for b, (rb, sb) in enumerate(rows):
            proj = ip(v, rb) * sb[:, None]
            v = v - alg.mul(proj[:, None, :], rb, order)
        nrm2 = ip(v, v)
        if np.any(np.abs(nrm2[..., 0]) < tol):
            raise KKError("vertical 1-form of vanishing norm in Gram-Schmidt")
        s = np.sign(nrm2[..., 0])
        inv = J.power(Jet(alg, nrm2 * s[:, None], order), -0.5)
        v = alg.mul(v, inv.c[:, None, :], order)
        rows.append((v, s))
        L[:, a] = v
        signs[:, a] = s
    et = alg.einsum("Zam,Zmn->Zan", L, theta.c[..., :], order)
    return Form(alg, theta.n, 1, et, order, "vector"), L, signs


def _ldl(alg, h, order):
    """Jet LDL^T of a symmetric matrix ``(P, n, n, M)``: returns ``(L, D)``."""
    P, n = h.shape[0], h.shape[1]
    L = np.zeros_like(h)
    D = np.zeros((P, n, alg.size), dtype=h.dtype)
    for j in range(n):
        L[:, j, j, 0] = 1.0
        d = h[:, j, j].copy()
        for k in range(j):
            d = d - alg.mul(alg.mul(L[:, j, k], L[:, j, k], order), D[:, k], order)
        if np.any(np.abs(d[..., 0]) < 1e-12):
            raise KKError("base metric is degenerate on the declared base coordinates")
        D[:, j] = d
        dinv = J.reciprocal(Jet(alg, d, order)).c
        for i in range(j + 1, n):
            s = h[:, i, j].copy()
            for k in range(j):
                s = s - alg.mul(alg.mul(L[:, i, k], L[:, j, k], order), D[:, k], order)
            L[:, i, j] = alg.mul(s, dinv, order)
    return L, D


def base_coframe(h: Sym2, A: list, base_idx: list):
    """Orthonormal coframe of ``h`` annihilating the fundamental fields.

    Built from an LDL^T factorization of the base-coordinate block of ``h``;
    returns ``(e_h, signs)`` with ``signs`` the diagonal of the base ``eta``.
    """
    alg, n, order = h.alg, h.n, h.order
    nb = len(base_idx)
    hb = h.c[:, base_idx][:, :, base_idx]
    L, D = _ldl(alg, hb, order)
    s = np.sign(D[:, :, 0])
    if np.any(s != s[:1]):
        raise KKError("base signature changes across the sample")
    sq = J.sqrt(Jet(alg, D * s[..., None], order)).c  # (P, nb, M)
    # target values on the frame (d_i for i in base, A_m): u^a_i = sqrt|D_a| L_ia
    U = np.zeros((h.c.shape[0], nb, n, alg.size), dtype=h.c.dtype)
    for a in range(nb):
        for i in range(nb):
            U[:, a, i] = alg.mul(sq[:, a], L[:, i, a], order)
    V = np.zeros((h.c.shape[0], n, n, alg.size), dtype=h.c.dtype)  # columns: vectors
    for j, i in enumerate(base_idx):
        V[:, i, j, 0] = 1.0
    for m, a in enumerate(A):
        V[:, :, nb + m] = a.c
    if np.any(np.abs(np.linalg.det(V[..., 0])) < 1e-12):
        raise KKError("fundamental fields are tangent to the base coordinate directions")
    Vi = alg.matinv(V, order)
    eh = alg.einsum("ZaJ,ZJm->Zam", U, Vi, order)
    return Form(alg, n, 1, eh, order, "vector"), s[0]


def adapted_coframe(e_h: Form, base_signs, e_theta: Form, fiber_signs):
    """Stack base and vertical coframes, timelike rows first; returns ``(e, eta)``."""
    signs = np.concatenate([np.asarray(base_signs), np.asarray(fiber_signs)])
    rows = np.concatenate([e_h.c, e_theta.c], axis=1)
    perm = np.argsort(signs >= 0, kind="stable")
    e = Form(e_h.alg, e_h.n, 1, rows[:, perm], min(e_h.order, e_theta.order), "vector")
    return e, np.diag(signs[perm].astype(float))


def extract_fields(conn: KKConnection, e_theta: Form, L: np.ndarray, A: list) -> dict:
    """``Phi`` from ``e_theta = Phi theta`` and its invariance along the fibers."""
    alg = e_theta.alg
    Phi = L
    inv = 0.0
    if e_theta.order >= 1:
        for a in A:
            dPhi = alg.grad(Phi, e_theta.n)
            along = alg.einsum("Zm,Zabm->Zab", a.c, dPhi, e_theta.order - 1)
            inv = max(inv, float(np.abs(along[..., 0]).max()))
    det = np.linalg.det(Phi[..., 0])
    return {"Phi": Phi, "invariance": inv, "det_min": float(det.min())}


def adapted_gauge_check(e: Form, eta: np.ndarray, A: list, tol: float = 1e-8, points=None):
    """Max of ``|B^K_{A_m}|`` and of the naive ``L_{A_m} e`` in the adapted gauge."""
    kd = KosmannData(e, eta, points)
    bk = max(kd.B(a).max_abs() for a in A)
    naive = max(lie_derivative_form(a, e).max_abs() for a in A)
    kos = max(kosmann_lie_coframe(kd, a).max_abs() for a in A)
    return {"passed": bk < tol, "BK": bk, "naive": naive, "kosmann": kos}


def field_strength_flux(setup: KKSetup, nodes: int = 64) -> np.ndarray:
    """Integral of the reduced field strength ``d theta`` over the quadrature box.

    The connection is pulled back along the declared section (fiber
    coordinates as functions of the base coordinates, default 0) and
    integrated with a tensor Gauss-Legendre rule.  Only two-dimensional bases
    are supported.  Returns one integral per fiber direction.
    """
    chart = setup.chart
    base = setup.base_coords
    if len(base) != 2:
        raise KKError("flux quadrature needs a two-dimensional base")
    if setup.quadrature_box is None:
        raise KKError("no quadrature box declared")
    (a0, a1), (b0, b1) = setup.quadrature_box
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (a1 - a0) * x + 0.5 * (a1 + a0)
    v = 0.5 * (b1 - b0) * x + 0.5 * (b1 + b0)
    wu = 0.5 * (a1 - a0) * w
    wv = 0.5 * (b1 - b0) * w
    U, Vv = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv).reshape(-1)
    bchart = Chart("base", base, setup.quadrature_box)
    bgrid = Grid(bchart, np.column_stack([U.reshape(-1), Vv.reshape(-1)]), order=2)
    # section jets: total-space coordinates as functions of the base coordinates
    sec = []
    for c in chart.coords:
        if c in base:
            sec.append(c)
        else:
            sec.append(setup.section.get(c, "0"))
    phi = bgrid.evaluate([bchart.parse(s) for s in sec])
    tgrid = Grid(chart, phi[..., 0], order=2)
    g = setup.sample_metric(tgrid)
    A = setup.sample_fundamental(tgrid)
    conn = kk_connection_form(g, A)
    th_base = pullback_form(phi, bgrid.alg, 2, conn.theta)
    F = exterior_derivative(th_base)  # (P, k, 1)
    vals = F.values[:, :, 0]
    # pairwise (numpy) summation in fixed order
    return np.array([np.sum(W * vals[:, m]) for m in range(vals.shape[1])])


def reduce(setup: KKSetup, grid: Grid, tol_hyp: float = 1e-7) -> ReducedFields:
    """Full pipeline on one grid of the total space chart."""
    g = setup.sample_metric(grid)
    A = setup.sample_fundamental(grid)
    hyp = check_setup(g, A, tol_hyp)
    if setup.coframe is not None:
        kd = KosmannData(setup.coframe.sample(grid), setup.coframe.signature.eta, grid.points)
        hyp["coframe_kosmann_invariance"] = max(kosmann_lie_coframe(kd, a).max_abs() for a in A)
        hyp["coframe_naive"] = max(lie_derivative_form(a, kd.e).max_abs() for a in A)
        if hyp["coframe_kosmann_invariance"] > tol_hyp:
            raise KKError("coframe is not Kosmann-invariant along the fibers "
                          f"(residual {hyp['coframe_kosmann_invariance']:.3g})")
    conn = kk_connection_form(g, A)
    e_theta, L, fsigns = gram_schmidt_vertical(conn.theta, conn.gram)
    base_idx = [grid.coords.index(c) for c in setup.base_coords]
    e_h, bsigns = base_coframe(conn.h, A, base_idx)
    if np.any(fsigns != fsigns[:1]):
        raise KKError("fiber signature changes across the sample")
    e, eta = adapted_coframe(e_h, bsigns, e_theta, fsigns[0])
    fields = extract_fields(conn, e_theta, L, A)
    ghat = metric_from_coframe(e, eta, grid.points)
    diag = dict(hyp)
    diag["reconstruction"] = float(np.abs(ghat.values - g.values).max())
    diag["phi_invariance"] = fields["invariance"]
    diag["det_phi_min"] = fields["det_min"]
    if e.order >= 1:
        diag["h_invariance"] = max(lie_derivative_metric(a, conn.h).max_abs() for a in A)
        diag["adapted_naive"] = max(lie_derivative_form(a, e).max_abs() for a in A)
        diag["theta_invariance"] = max(lie_derivative_form(a, conn.theta).max_abs() for a in A)
    diag["theta_pairing"] = float(np.abs(
        np.einsum("Zkm,Zlm->Zkl", conn.theta.values, np.stack([a.values for a in A], 1))
        - np.eye(len(A))).max())
    return ReducedFields(conn.theta, conn.gV, conn.h, e_theta, e_h, e, eta, fields["Phi"],
                         fsigns[0], diag)
