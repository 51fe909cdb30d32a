"""Covariant Lie derivatives of matter fields and connections.

A covariant Lie derivative is fixed by a correction ``B_xi`` (a Lie-algebra
valued 0-form, linear in ``xi``), or equivalently by a connection ``omega``
together with ``lambda_xi`` via ``B_xi = i_xi omega - lambda_xi``:

    L~_xi phi   = L_xi phi + B_xi . phi
    L~_xi omega = L_xi omega - d^omega B_xi

``lambda = 0`` is the natural lift.  The Kosmann lift of a coframe uses the
Levi-Civita connection and the antisymmetric part of the frame components of
``L_xi e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .frames import (curvature, covariant_derivative, frame_inverse, gauge_coframe,
                     ec_lagrangian, gauge_connection, levi_civita, metric_from_coframe)
from .geometry import (Form, GeometryError, Sym2, Vec, exterior_derivative,
                       interior_product, lie_bracket, lie_derivative_form,
                       lie_derivative_metric, wedge)

__all__ = [
    "CovariantizationData", "KosmannData", "KillingVerdict",
    "natural_cov_lie_matter", "natural_cov_lie_matter_cartan",
    "natural_cov_lie_connection", "natural_cov_lie_connection_alt",
    "covariantization_term", "general_cov_lie_matter", "general_cov_lie_matter_lemma",
    "general_cov_lie_connection", "general_cov_lie_connection_curvature",
    "connection_independence_check", "swap_connection",
    "kosmann_correction", "kosmann_lie_coframe", "kosmann_forms", "killing_check",
    "gauge_transform", "frame_components", "act", "covariant_d_algebra0",
    "kosmann_condition_residual", "bracket_defect", "naive_noncovariance",
    "ec_variation", "ec_symmetry_residual",
]


def act(B: Form, phi: Form, rep: str = "fundamental") -> Form:
    """``rho(B) . phi`` for a matrix-valued 0-form ``B``."""
    if rep in ("fundamental", "spinor"):
        return wedge(B, phi, "ab,b->a")
    if rep == "adjoint":
        return wedge(B, phi, "ab,bc->ac") - wedge(phi, B, "ab,bc->ac")
    raise GeometryError(f"unknown representation tag {rep!r}")


def covariant_d_algebra0(omega: Form, B: Form) -> Form:
    """``d^omega B = dB + [omega, B]`` for a matrix-valued 0-form."""
    return exterior_derivative(B) + wedge(omega, B, "ab,bc->ac") - wedge(B, omega, "ab,bc->ac")


@dataclass
class CovariantizationData:
    """Either a correction map ``B(xi)`` or a pair ``(omega, lam(xi))``."""

    omega: Form | None = None
    lam: Callable[[Vec], Form] | None = None
    B: Callable[[Vec], Form] | None = None
    name: str = "custom"

    @classmethod
    def natural(cls, omega: Form) -> "CovariantizationData":
        return cls(omega=omega, lam=lambda xi: _zero0(omega), name="natural")

    @classmethod
    def from_pair(cls, omega: Form, lam) -> "CovariantizationData":
        return cls(omega=omega, lam=lam, name="pair")

    @classmethod
    def from_correction(cls, B) -> "CovariantizationData":
        return cls(B=B, name="correction")

    def correction(self, xi: Vec) -> Form:
        if self.B is not None:
            return self.B(xi)
        if self.omega is None or self.lam is None:
            raise GeometryError("covariantization data needs B or (omega, lambda)")
        return interior_product(xi, self.omega) - self.lam(xi)

    def lambda_of(self, xi: Vec) -> Form:
        if self.lam is None:
            raise GeometryError("these data carry no (omega, lambda) pair")
        return self.lam(xi)


def _zero0(omega: Form) -> Form:
    c = np.zeros(omega.c.shape[:-2] + (1, omega.c.shape[-1]), dtype=omega.c.dtype)
    return Form(omega.alg, omega.n, 0, c, omega.alg.order, omega.kind)


def swap_connection(data: CovariantizationData, omega_hat: Form) -> CovariantizationData:
    """Same covariant Lie derivative, re-expressed with another connection:
    ``lambda^_xi = i_xi omega^ - B_xi``."""
    return CovariantizationData.from_pair(
        omega_hat, lambda xi: interior_product(xi, omega_hat) - data.correction(xi))


# --------------------------------------------------------------------------
# natural lift

def natural_cov_lie_matter(omega: Form, xi: Vec, phi: Form, rep: str = "fundamental") -> Form:
    """``L_xi phi + rho(i_xi omega) phi``."""
    return lie_derivative_form(xi, phi) + act(interior_product(xi, omega), phi, rep)


def natural_cov_lie_matter_cartan(omega: Form, xi: Vec, phi: Form,
                                  rep: str = "fundamental") -> Form:
    """``i_xi d^omega phi + d^omega(i_xi phi)``."""
    out = interior_product(xi, covariant_derivative(omega, phi, rep))
    if phi.degree > 0:
        out = out + covariant_derivative(omega, interior_product(xi, phi), rep)
    return out


def natural_cov_lie_connection(omega: Form, xi: Vec) -> Form:
    """``i_xi F_omega``."""
    return interior_product(xi, curvature(omega))


def natural_cov_lie_connection_alt(omega: Form, xi: Vec) -> Form:
    """``L_xi omega - d^omega(i_xi omega)``."""
    return lie_derivative_form(xi, omega) - covariant_d_algebra0(omega, interior_product(xi, omega))


# --------------------------------------------------------------------------
# general covariant Lie derivatives

def covariantization_term(data: CovariantizationData, xi: Vec) -> Form:
    return data.correction(xi)


def general_cov_lie_matter(data: CovariantizationData, xi: Vec, phi: Form,
                           rep: str = "fundamental") -> Form:
    """``L_xi phi + rho(B_xi) phi``."""
    return lie_derivative_form(xi, phi) + act(data.correction(xi), phi, rep)


def general_cov_lie_matter_lemma(data: CovariantizationData, xi: Vec, phi: Form,
                                 rep: str = "fundamental") -> Form:
    """``i_xi d^omega phi + d^omega(i_xi phi) - rho(lambda_xi) phi``."""
    return natural_cov_lie_matter_cartan(data.omega, xi, phi, rep) - act(data.lambda_of(xi), phi, rep)


def general_cov_lie_connection(data: CovariantizationData, xi: Vec, omega: Form) -> Form:
    """``L_xi omega - d^omega B_xi``."""
    return lie_derivative_form(xi, omega) - covariant_d_algebra0(omega, data.correction(xi))


def general_cov_lie_connection_curvature(data: CovariantizationData, xi: Vec) -> Form:
    """``i_xi F + d^omega lambda_xi`` (uses the data's own connection)."""
    om = data.omega
    return natural_cov_lie_connection(om, xi) + covariant_d_algebra0(om, data.lambda_of(xi))


def connection_independence_check(data_a: CovariantizationData, data_b: CovariantizationData,
                                  xi: Vec, tol: float = 1e-10):
    """Compare ``i_xi omega - lambda_xi`` between two data sets.

    Returns ``(passed, max_deviation, worst_point_index)``.
    """
    diff = data_a.correction(xi) - data_b.correction(xi)
    dev = diff.max_abs()
    return dev < tol, dev, diff.argmax_point()


# --------------------------------------------------------------------------
# Kosmann

def frame_components(alpha: Form, E: np.ndarray, order: int | None = None) -> np.ndarray:
    """``X^a_b`` with ``alpha^a = X^a_b e^b``, i.e. ``X^a_b = alpha^a_mu E_b^mu``."""
    o = alpha.order if order is None else order
    return alpha.alg.einsum("Zam,Zmb->Zab", alpha.c, E, min(o, alpha.order))


def _as0(alg, n, c, order, kind="algebra") -> Form:
    return Form(alg, n, 0, c[..., None, :], order, kind)


def _combine(eta, X, e: Form, order) -> Form:
    """``eta^{ad} X_(db) e^b`` for frame components ``X^a_b``."""
    alg = e.alg
    Xl = np.einsum("da,ZabM->ZdbM", eta, X)
    S = 0.5 * (Xl + np.swapaxes(Xl, 1, 2))
    Su = np.einsum("ad,ZdbM->ZabM", np.linalg.inv(eta), S)
    return Form(alg, e.n, 1, alg.einsum("Zab,Zbm->Zam", Su, e.c, order), order, "vector")


@dataclass
class KosmannData:
    """Kosmann covariantization data built from a sampled coframe."""

    e: Form
    eta: np.ndarray
    points: np.ndarray | None = None
    _omega: Form | None = field(default=None, repr=False)
    _E: np.ndarray | None = field(default=None, repr=False)

    @property
    def omega(self) -> Form:
        if self._omega is None:
            self._omega = levi_civita(self.e, self.eta, self.points)
        return self._omega

    @property
    def E(self) -> np.ndarray:
        if self._E is None:
            self._E = frame_inverse(self.e, self.points)
        return self._E

    def lie_components(self, xi: Vec) -> np.ndarray:
        """Frame components ``X^a_b`` of the naive ``L_xi e``."""
        return frame_components(lie_derivative_form(xi, self.e), self.E)

    def covariant_components(self, xi: Vec) -> np.ndarray:
        """Frame components ``Y^a_b`` of ``d^{omega_LC}(i_xi e)``."""
        tau = interior_product(xi, self.e)
        return frame_components(covariant_derivative(self.omega, tau), self.E)

    def B(self, xi: Vec) -> Form:
        """``B^K_xi = -eta^{ad} X_[db]``."""
        X = self.lie_components(xi)
        Xl = np.einsum("da,ZabM->ZdbM", self.eta, X)
        A = 0.5 * (Xl - np.swapaxes(Xl, 1, 2))
        Bc = -np.einsum("ad,ZdbM->ZabM", np.linalg.inv(self.eta), A)
        return _as0(self.e.alg, self.e.n, Bc, min(self.e.order - 1, xi.order))

    def lam(self, xi: Vec) -> Form:
        """``lambda^K_xi = eta^{ad} Y_[db]``."""
        Y = self.covariant_components(xi)
        Yl = np.einsum("da,ZabM->ZdbM", self.eta, Y)
        A = 0.5 * (Yl - np.swapaxes(Yl, 1, 2))
        lc = np.einsum("ad,ZdbM->ZabM", np.linalg.inv(self.eta), A)
        return _as0(self.e.alg, self.e.n, lc, min(self.e.order - 1, xi.order))

    def as_correction(self) -> CovariantizationData:
        return CovariantizationData(B=self.B, name="kosmann")

    def as_pair(self) -> CovariantizationData:
        return CovariantizationData(omega=self.omega, lam=self.lam, name="kosmann")


def kosmann_correction(kd: KosmannData, xi: Vec) -> Form:
    return kd.B(xi)


def kosmann_forms(kd: KosmannData, xi: Vec) -> dict:
    """The three expressions of the Kosmann Lie derivative of ``e``:

    ``"covariant"``  eta^{ad} (d^{omega_LC} i_xi e)_(db) e^b
    ``"lie"``        eta^{ad} (L_xi e)_(db) e^b
    ``"correction"`` L_xi e + B^K_xi . e
    """
    e, eta = kd.e, kd.eta
    order = min(e.order - 1, xi.order - 1)
    Y = kd.covariant_components(xi)
    X = kd.lie_components(xi)
    top = _combine(eta, Y, e, order)
    bottom = _combine(eta, X, e, order)
    corr = lie_derivative_form(xi, e) + act(kd.B(xi), e)
    return {"covariant": top, "lie": bottom, "correction": corr}


def kosmann_lie_coframe(kd: KosmannData, xi: Vec) -> Form:
    order = min(kd.e.order - 1, xi.order - 1)
    return _combine(kd.eta, kd.lie_components(xi), kd.e, order)


def kosmann_condition_residual(kd: KosmannData, xi: Vec) -> Sym2:
    """``L_xi g - 2 eta_ab (L^K_xi e)^a (x) e^b`` (coordinate components)."""
    e, eta = kd.e, kd.eta
    g = metric_from_coframe(e, eta, kd.points)
    Lg = lie_derivative_metric(xi, g)
    LK = kosmann_lie_coframe(kd, xi)
    w = np.einsum("ab,ZbnM->ZanM", eta, e.c)
    rhs = e.alg.einsum("Zam,Zan->Zmn", LK.c, w, LK.order)
    return Sym2(e.alg, e.n, Lg.c - 2 * rhs, min(Lg.order, LK.order))


@dataclass
class KillingVerdict:
    killing: bool
    residual: float
    metric_residual: float
    worst_point: int
    agree: bool


def killing_check(kd: KosmannData, xi: Vec, tol: float = 1e-7) -> KillingVerdict:
    LK = kosmann_lie_coframe(kd, xi)
    res = LK.max_abs()
    g = metric_from_coframe(kd.e, kd.eta, kd.points)
    mres = lie_derivative_metric(xi, g).max_abs()
    killing = res < tol
    return KillingVerdict(killing, res, mres, LK.argmax_point(), killing == (mres < tol))


def gauge_transform(gamma: np.ndarray, e: Form, eta: np.ndarray, omega: Form | None = None,
                    tol: float = 1e-9):
    """``e -> gamma e``, ``omega -> gamma omega gamma^-1 + gamma d gamma^-1``.

    ``gamma`` is a jet matrix ``(P, n, n, M)``; it must be eta-orthogonal.
    """
    g0 = gamma[..., 0]
    defect = np.abs(np.einsum("pba,bc,pcd->pad", g0, eta, g0) - eta).max()
    if defect > tol:
        raise GeometryError(f"gauge transformation is not eta-orthogonal (defect {defect:.3g})")
    e2 = gauge_coframe(gamma, e)
    om2 = None if omega is None else gauge_connection(gamma, omega)
    return e2, om2


def naive_noncovariance(gamma: np.ndarray, xi: Vec, phi: Form) -> Form:
    """``L_xi(gamma phi) - gamma L_xi phi`` (nonzero for nonconstant gamma)."""
    G = Form(phi.alg, phi.n, 0, gamma[:, :, :, None, :], phi.alg.order, "matrix")
    return lie_derivative_form(xi, wedge(G, phi, "ab,b->a")) - wedge(
        G, lie_derivative_form(xi, phi), "ab,b->a")


def bracket_defect(data_for, xi: Vec, zeta: Vec, phi: Form, rep: str = "fundamental") -> Form:
    """Diagnostic ``[L~_xi, L~_zeta] phi - L~_[xi,zeta] phi``; ``data_for`` maps
    a sampled vector field to its covariantization data (or is fixed data)."""
    def D(v, f):
        data = data_for if isinstance(data_for, CovariantizationData) else data_for(v)
        return general_cov_lie_matter(data, v, f, rep)
    return D(xi, D(zeta, phi)) - D(zeta, D(xi, phi)) - D(lie_bracket(xi, zeta), phi)


# --------------------------------------------------------------------------
# Einstein-Cartan symmetry

def ec_variation(e: Form, omega: Form, xi: Vec) -> tuple:
    """The pair ``(i_xi T + d^omega i_xi e, i_xi F_omega)``."""
    return natural_cov_lie_matter_cartan(omega, xi, e), natural_cov_lie_connection(omega, xi)


def ec_symmetry_residual(e: Form, omega: Form, xi: Vec, eta: np.ndarray) -> tuple:
    """Field-space derivative of the Einstein-Cartan density along
    :func:`ec_variation` against ``L_xi`` of the density.

    The algebra of the sampled forms must carry one parameter variable after
    the ``n`` coordinates (``Grid(..., extra=1)``); the density is evaluated on
    ``(e + t de, omega + t domega)`` and differentiated in ``t`` at ``t = 0``.
    Needs jet order >= 3 for a given ``omega`` (>= 4 if ``omega`` was itself
    computed from ``e``).  Returns ``(residual, directional, lie)`` top-form
    values of shape ``(P,)``.
    """
    alg, n = e.alg, e.n
    if alg.nvars != n + 1:
        raise GeometryError("ec_symmetry_residual needs exactly one parameter variable")
    P = e.c.shape[0]
    t = alg.coordinates(np.zeros((P, n + 1)))[n].c
    de, dom = ec_variation(e, omega, xi)
    order_e, order_w = min(e.order, de.order), min(omega.order, dom.order)
    e_t = e.like(e.c + alg.mul(t[:, None, None, :], de.c, order_e), order_e)
    om_t = omega.like(omega.c + alg.mul(t[:, None, None, None, :], dom.c, order_w), order_w)
    L_t = ec_lagrangian(e_t, om_t, eta)
    if L_t.order < 1:
        raise GeometryError("jet order too low for the field-space derivative")
    directional = L_t.c[:, 0, 1 + n]
    L0 = ec_lagrangian(e, omega, eta)
    lie = lie_derivative_form(xi, L0).values[:, 0]
    return np.abs(directional - lie), directional, lie
