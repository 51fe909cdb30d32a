"""Gamma matrices and the spinorial Kosmann Lie derivative.

The spin representation of an eta-antisymmetric ``lambda^a_b`` is
``rho(lambda) = 1/4 lambda_ab Gamma^a Gamma^b`` with ``lambda_ab = eta_ac lambda^c_b``.
With this normalization ``[rho(lambda), Gamma^c] = -lambda^c_b Gamma^b``, so
``exp(rho(lambda))`` covers the frame rotation ``exp(lambda)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .covlie import KosmannData, lie_derivative_form
from .frames import Signature
from .geometry import Chart, Form, GeometryError, Grid, Vec, exterior_derivative, interior_product, wedge

__all__ = [
    "GammaRep", "SpinorField", "build_gamma", "spin_action", "spin_matrix",
    "spin_connection", "spin_covariant_derivative", "kosmann_lie_spinor",
    "kosmann_lie_spinor_forms", "clifford_multiply", "MAX_DIM",
]

MAX_DIM = 6

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class GammaRep:
    signature: Signature
    gammas: np.ndarray  # (n, s, s), upper frame index

    @property
    def dim(self) -> int:
        return self.signature.dim

    @property
    def spinor_dim(self) -> int:
        return self.gammas.shape[1]

    @property
    def lowered(self) -> np.ndarray:
        """``Gamma_a = eta_ab Gamma^b``."""
        return np.einsum("ab,bij->aij", self.signature.eta, self.gammas)

    def clifford_defect(self) -> float:
        G = self.gammas
        s = G.shape[1]
        anti = np.einsum("aij,bjk->abik", G, G) + np.einsum("bij,ajk->abik", G, G)
        target = 2 * np.einsum("ab,ik->abik", np.linalg.inv(self.signature.eta), np.eye(s))
        return float(np.abs(anti - target).max())

    @property
    def pair_products(self) -> np.ndarray:
        """``Gamma^a Gamma^b`` as an array ``(n, n, s, s)``."""
        return np.einsum("aij,bjk->abik", self.gammas, self.gammas)


def _kron(*ms):
    return reduce(np.kron, ms, np.eye(1, dtype=complex))


def build_gamma(signature: Signature) -> GammaRep:
    """Tensor-product (Jordan-Wigner) construction, spinor dimension ``2^floor(n/2)``.

    The first ``p`` (timelike) matrices are multiplied by ``i`` so that they
    square to ``-1``.
    """
    n = signature.dim
    if n > MAX_DIM:
        raise GeometryError(f"gamma matrices are supported up to dimension {MAX_DIM}")
    m = n // 2
    euclid = []
    for k in range(m):
        pre = [_Z] * k
        post = [_I2] * (m - k - 1)
        euclid.append(_kron(*pre, _X, *post))
        euclid.append(_kron(*pre, _Y, *post))
    if n % 2:
        euclid.append(_kron(*([_Z] * m)) if m else np.eye(1, dtype=complex))
    G = np.array(euclid)
    G[: signature.p] *= 1j
    return GammaRep(signature, G)


def spin_matrix(lam: np.ndarray, rep: GammaRep) -> np.ndarray:
    """``rho(lambda)`` for constant matrices ``lambda^a_b`` (``(..., n, n)``)."""
    low = np.einsum("ac,...cb->...ab", rep.signature.eta, lam)
    return 0.25 * np.einsum("...ab,abij->...ij", low, rep.pair_products)


def _spin_image(B: Form, rep: GammaRep) -> Form:
    """Apply ``rho`` to the values of a matrix-valued form (jets are linear)."""
    eta = rep.signature.eta
    low = np.einsum("ac,ZcbCM->ZabCM", eta, B.c)
    img = 0.25 * np.einsum("ZabCM,abij->ZijCM", low, rep.pair_products)
    return Form(B.alg, B.n, B.degree, img, B.order, "matrix")


def spin_action(lam: Form, psi: Form, rep: GammaRep, tol: float = 1e-10) -> Form:
    """``rho(lambda) psi`` for a matrix-valued 0-form ``lambda``."""
    low = np.einsum("ac,ZcbCM->ZabCM", rep.signature.eta, lam.c)
    defect = np.abs(low + np.swapaxes(low, 1, 2)).max() if low.size else 0.0
    if defect > tol * max(1.0, np.abs(low).max()):
        raise GeometryError(f"spin action needs an eta-antisymmetric argument (defect {defect:.3g})")
    return wedge(_spin_image(lam, rep), psi, "ab,b->a")


def spin_connection(omega: Form, rep: GammaRep) -> Form:
    return _spin_image(omega, rep)


def spin_covariant_derivative(omega: Form, psi: Form, rep: GammaRep) -> Form:
    return exterior_derivative(psi) + wedge(spin_connection(omega, rep), psi, "ab,b->a")


def clifford_multiply(e: Form, psi: Form, rep: GammaRep) -> Form:
    """Spinor-valued form ``e^a Gamma_a psi`` (``e`` a vector-valued form)."""
    low = rep.lowered
    Gpsi = np.einsum("aij,ZjCM->ZaiCM", low, psi.c)
    Gf = Form(psi.alg, psi.n, psi.degree, Gpsi, psi.order, "matrix")
    return wedge(e, Gf, "a,ab->b")


@dataclass(frozen=True)
class SpinorField:
    """Spinor components as ``(real, imag)`` expression pairs per chart."""

    components: dict

    @classmethod
    def from_strings(cls, chart: Chart, comps) -> "SpinorField":
        pairs = []
        for c in comps:
            if isinstance(c, (tuple, list)):
                re, im = c
            else:
                re, im = c, "0"
            pairs.append((chart.parse(re), chart.parse(im)))
        return cls({chart.name: tuple(pairs)})

    def sample(self, grid: Grid) -> Form:
        comps = self.components[grid.chart.name]
        re = grid.evaluate([p[0] for p in comps])
        im = grid.evaluate([p[1] for p in comps])
        c = (re + 1j * im)[:, :, None, :]
        return Form(grid.alg, grid.n, 0, c, grid.order, "spinor")


def kosmann_lie_spinor(kd: KosmannData, xi: Vec, psi: Form, rep: GammaRep) -> Form:
    """``L_xi psi + rho(B^K_xi) psi``."""
    return lie_derivative_form(xi, psi) + spin_action(kd.B(xi), psi, rep)


def kosmann_lie_spinor_forms(kd: KosmannData, xi: Vec, psi: Form, rep: GammaRep) -> dict:
    """Three expressions of the spinorial Kosmann derivative.

    ``"correction"``  L_xi psi + rho(B^K) psi
    ``"natural"``     L^{omega_LC}_xi psi - rho(lambda^K) psi
    ``"frame"``       (0-forms only) xi^b (d^omega psi)_b - 1/4 Y_[bd] Gamma^b Gamma^d psi
    """
    om = kd.omega
    S = spin_connection(om, rep)
    lam = kd.lam(xi)
    out = {"correction": kosmann_lie_spinor(kd, xi, psi, rep)}
    nat = lie_derivative_form(xi, psi) + wedge(interior_product(xi, S), psi, "ab,b->a")
    out["natural"] = nat - spin_action(lam, psi, rep)
    if psi.degree == 0:
        alg = psi.alg
        order = min(kd.e.order - 1, xi.order, psi.order - 1)
        Dpsi = spin_covariant_derivative(om, psi, rep)  # (P, s, mu)
        xib = alg.einsum("Zbm,Zm->Zb", kd.e.c, xi.c, order)
        Dfr = alg.einsum("Zsm,Zmb->Zsb", Dpsi.c, kd.E, order)
        first = alg.einsum("Zb,Zsb->Zs", xib, Dfr, order)
        Y = kd.covariant_components(xi)
        Yl = np.einsum("da,ZabM->ZdbM", kd.eta, Y)
        A = 0.5 * (Yl - np.swapaxes(Yl, 1, 2))
        R = 0.25 * np.einsum("ZbdM,bdij->ZijM", A, rep.pair_products)
        second = alg.einsum("Zij,Zj->Zi", R, psi.c[:, :, 0, :], order)
        out["frame"] = Form(alg, psi.n, 0, (first - second)[:, :, None, :], order, "spinor")
    return out
