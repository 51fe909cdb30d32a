"""Coframes, metrics, Levi-Civita connections, torsion and curvature.

Conventions: frame indices are raised and lowered with ``eta``; the structure
equation reads ``d e^a + omega^a_b ^ e^b = T^a`` and the curvature is
``F = d omega + omega ^ omega``.  A coframe is stored as a vector-valued
1-form (values ``e^a``), a connection as a matrix-valued 1-form
(values ``omega^a_b``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import exprlang
from .geometry import (Chart, Form, FormField, GeometryError, Grid, Sym2,
                       combos, exterior_derivative, wedge, _perm_sign)

__all__ = [
    "Signature", "Coframe", "ConnectionForm", "Metric", "NondegeneracyError",
    "metric_from_coframe", "levi_civita", "torsion", "curvature",
    "covariant_derivative", "ec_lagrangian", "frame_inverse",
    "lower", "raise_first", "gauge_coframe", "gauge_connection",
    "antisymmetry_defect", "levi_civita_symbol", "matrix_form",
]


class NondegeneracyError(GeometryError):
    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message if point is None else f"{message} at {point}")


@dataclass(frozen=True)
class Signature:
    """``p`` entries -1 followed by ``q`` entries +1."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q == 0:
            raise ValueError("signature needs p, q >= 0 and p + q >= 1")

    @property
    def dim(self) -> int:
        return self.p + self.q

    @property
    def eta(self) -> np.ndarray:
        return np.diag([-1.0] * self.p + [1.0] * self.q)

    @classmethod
    def euclidean(cls, n: int) -> "Signature":
        return cls(0, n)

    @classmethod
    def parse(cls, text) -> "Signature":
        """Accepts ``[p, q]`` or a string of signs like ``"-+++"``."""
        if isinstance(text, str):
            if set(text) - set("+-"):
                raise ValueError(f"bad signature string {text!r}")
            if "+-" in text:
                raise ValueError("negative entries must come first")
            return cls(text.count("-"), text.count("+"))
        p, q = text
        return cls(int(p), int(q))


@dataclass(frozen=True)
class Coframe:
    field: FormField
    signature: Signature

    @classmethod
    def from_rows(cls, chart: Chart, rows, signature: Signature) -> "Coframe":
        if len(rows) != chart.dim or any(len(r) != chart.dim for r in rows):
            raise GeometryError("coframe must be a dim x dim matrix of components")
        if signature.dim != chart.dim:
            raise GeometryError("signature does not match chart dimension")
        return cls(FormField.one_forms(chart, rows, "vector"), signature)

    def sample(self, grid: Grid) -> Form:
        return self.field.sample(grid)


@dataclass(frozen=True)
class ConnectionForm:
    field: FormField
    signature: Signature

    @classmethod
    def from_components(cls, chart: Chart, comps, signature: Signature,
                        antisymmetrize: bool = True) -> "ConnectionForm":
        """``comps[(a, b)]`` lists the coordinate components of ``omega^a_b``.

        The matrix size follows ``signature`` and may differ from the chart
        dimension (internal gauge groups).  With ``antisymmetrize`` the partner ``omega^b_a`` is filled in so that
        ``omega_ab = -omega_ba``.
        """
        n, N = chart.dim, signature.dim
        eta = signature.eta
        arr = np.empty((N, N, n), dtype=object)
        arr[...] = chart.parse("0")
        for (a, b), row in comps.items():
            exprs = [chart.parse(r) for r in row]
            for mu in range(n):
                arr[a, b, mu] = exprs[mu]
                if antisymmetrize and a != b:
                    # omega^b_a = -eta_bb eta_aa omega^a_b (diagonal eta)
                    s = -eta[b, b] * eta[a, a]
                    e = exprs[mu]
                    arr[b, a, mu] = e if s > 0 else exprlang.Neg(e)
        ff = FormField(1, "algebra", (N, N), {chart.name: _tuple(arr)})
        return cls(ff, signature)

    def sample(self, grid: Grid) -> Form:
        return self.field.sample(grid)


def _tuple(arr):
    if isinstance(arr, np.ndarray):
        return tuple(_tuple(a) for a in arr)
    return arr


@dataclass(frozen=True)
class Metric:
    chart: Chart
    entries: tuple

    @classmethod
    def from_rows(cls, chart: Chart, rows) -> "Metric":
        ent = tuple(tuple(chart.parse(e) for e in row) for row in rows)
        return cls(chart, ent)

    def sample(self, grid: Grid) -> Sym2:
        c = grid.evaluate(self.entries)
        c = 0.5 * (c + np.swapaxes(c, 1, 2))
        return Sym2(grid.alg, grid.n, c, grid.order)


# --------------------------------------------------------------------------

def matrix_form(e: Form) -> np.ndarray:
    """Coframe components as a jet matrix ``(P, a, mu, M)``."""
    if e.degree != 1:
        raise GeometryError("expected a 1-form")
    return e.c


def _check_nondegenerate(e: Form, points=None):
    det = np.linalg.det(e.c[..., 0])
    bad = np.abs(det) < 1e-12 * np.maximum(1.0, np.abs(e.c[..., 0]).max(axis=(1, 2)) ** e.n)
    if np.any(bad):
        i = int(np.argmax(bad))
        pt = None if points is None else points[i].tolist()
        raise NondegeneracyError("degenerate coframe", pt)


def frame_inverse(e: Form, points=None) -> np.ndarray:
    """Jets of the dual frame ``E_b^mu`` as a matrix ``(P, mu, b, M)``."""
    _check_nondegenerate(e, points)
    return e.alg.matinv(e.c, e.order)


def metric_from_coframe(e: Form, eta: np.ndarray, points=None) -> Sym2:
    """``g_{mu nu} = eta_ab e^a_mu e^b_nu``; raises on a degenerate coframe."""
    _check_nondegenerate(e, points)
    alg = e.alg
    w = np.einsum("ab,ZbmM->ZamM", eta, e.c)
    g = alg.einsum("Zam,Zan->Zmn", e.c, w, e.order)
    return Sym2(alg, e.n, g, e.order)


def signature_of(g: Sym2) -> tuple:
    ev = np.linalg.eigvalsh(g.values)
    return int((ev < 0).sum(axis=1).max()), int((ev > 0).sum(axis=1).min())


def _full2(f: Form) -> np.ndarray:
    """Antisymmetric coordinate matrix of a 2-form's jets ``(P, *v, n, n, M)``."""
    n = f.n
    out = np.zeros(f.c.shape[:-2] + (n, n, f.c.shape[-1]), dtype=f.c.dtype)
    for k, (i, j) in enumerate(combos(n, 2)):
        out[..., i, j, :] = f.c[..., k, :]
        out[..., j, i, :] = -f.c[..., k, :]
    return out


def levi_civita(e: Form, eta: np.ndarray, points=None) -> Form:
    """Torsion-free, eta-antisymmetric connection of a coframe (one order lost)."""
    alg = e.alg
    order = e.order - 1
    E = frame_inverse(e, points)  # (P, mu, b)
    D = _full2(exterior_derivative(e))  # (P, a, mu, nu)
    # C^a_{bc} = -D^a_{mu nu} E_b^mu E_c^nu
    t = alg.einsum("Zamn,Zmb->Zabn", D, E, order)
    C = -alg.einsum("Zabn,Znc->Zabc", t, E, order)
    Cl = np.einsum("ad,ZdbcM->ZabcM", eta, C)
    # w[a,b,c]: -C_abc - C_bca + C_cab
    w = 0.5 * (-Cl - np.einsum("ZbcaM->ZabcM", Cl) + np.einsum("ZcabM->ZabcM", Cl))
    eta_inv = np.linalg.inv(eta)
    wu = np.einsum("ad,ZdbcM->ZabcM", eta_inv, w)
    om = alg.einsum("Zabc,Zcm->Zabm", wu, e.c, order)
    return Form(alg, e.n, 1, om, order, "algebra")


def torsion(e: Form, omega: Form) -> Form:
    return exterior_derivative(e) + wedge(omega, e, "ab,b->a")


def curvature(omega: Form) -> Form:
    return exterior_derivative(omega) + wedge(omega, omega, "ab,bc->ac")


def covariant_derivative(omega: Form, phi: Form, rep: str = "fundamental") -> Form:
    """``d^omega phi = d phi + rho(omega) ^ phi`` for the named representation.

    ``rep`` is ``"fundamental"`` (matrix action on vectors), ``"adjoint"``
    (graded bracket on matrix-valued forms) or ``"spinor"`` (``omega`` must
    already be the spinor image, a complex matrix-valued 1-form).
    """
    d = exterior_derivative(phi)
    if rep in ("fundamental", "spinor"):
        return d + wedge(omega, phi, "ab,b->a")
    if rep == "adjoint":
        sign = -1 if phi.degree % 2 == 0 else 1
        br = wedge(omega, phi, "ab,bc->ac")
        other = wedge(phi, omega, "ab,bc->ac")
        return d + (br + other if sign > 0 else br - other)
    raise GeometryError(f"unknown representation tag {rep!r}")


def lower(omega: Form, eta: np.ndarray) -> Form:
    """``omega_ab = eta_ac omega^c_b``."""
    return omega.map_values(eta, "ac,cb->ab")


def raise_first(omega: Form, eta: np.ndarray) -> Form:
    return omega.map_values(np.linalg.inv(eta), "ac,cb->ab")


def antisymmetry_defect(omega: Form, eta: np.ndarray) -> float:
    lo = lower(omega, eta).values
    return float(np.abs(lo + np.swapaxes(lo, 1, 2)).max())


def levi_civita_symbol(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        eps[perm] = _perm_sign(perm)
    return eps


def ec_lagrangian(e: Form, omega: Form, eta: np.ndarray) -> Form:
    """``eps_{a0..ad} e^a0 ^ ... ^ e^a(d-2) ^ F^{a(d-1) ad}`` (top form)."""
    n = e.n
    if n < 3:
        raise GeometryError("the Einstein-Cartan density needs dimension >= 3")
    F = curvature(omega)
    Fup = F.map_values(np.linalg.inv(eta), "cb,ac->ab")  # F^{ab} = F^a_c eta^{cb}
    eps = levi_civita_symbol(n)
    letters = "abcdefgh"[:n]
    acc = None
    for k in range(n - 2):
        if acc is None:
            acc = e
        else:
            spec = f"{letters[:k]},{letters[k]}->{letters[:k + 1]}"
            acc = wedge(acc, e, spec)
    last = letters[n - 2:]
    spec = f"{letters[:n - 2]},{last}->{letters}"
    top = wedge(acc, Fup, spec)
    c = np.einsum(f"{letters},Z{letters}CM->ZCM", eps, top.c)
    return Form(e.alg, n, n, c, top.order, "scalar")


def gauge_coframe(gamma: np.ndarray, e: Form, order=None) -> Form:
    """``gamma . e`` for a jet matrix ``gamma`` ``(P, n, n, M)``."""
    g = Form(e.alg, e.n, 0, gamma[:, :, :, None, :], e.alg.order if order is None else order,
             "matrix")
    return wedge(g, e, "ab,b->a")


def gauge_connection(gamma: np.ndarray, omega: Form, order=None) -> Form:
    """``gamma omega gamma^-1 + gamma d(gamma^-1)``."""
    alg = omega.alg
    o = alg.order if order is None else order
    ginv = alg.matinv(gamma, o)
    G = Form(alg, omega.n, 0, gamma[:, :, :, None, :], o, "matrix")
    Gi = Form(alg, omega.n, 0, ginv[:, :, :, None, :], o, "matrix")
    return wedge(wedge(G, omega, "ab,bc->ac"), Gi, "ab,bc->ac") + wedge(
        G, exterior_derivative(Gi), "ab,bc->ac")
