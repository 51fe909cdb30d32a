"""Total-space check of covariant Lie derivatives on a trivial patch ``U x G``.

Base data ``(omega, lambda, xi, phi)`` are lifted to the product chart

    omega~ = h^-1 omega h + h^-1 dh,     phi~ = h^-1 phi,
    xi~    = xi + vertical part solving  h^-1 dh(xi~) = -h^-1 (i_xi omega - lambda) h,

so that ``i_xi~ omega~ = h^-1 lambda h``.  The ordinary Lie derivatives along
``xi~`` are computed by the Cartan formula in product coordinates, pulled back
along a section and compared with the base-space formulas

    L_xi omega - d^omega B,    L_xi phi + B phi,    B = i_xi omega - lambda.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .covlie import act, covariant_d_algebra0
from .frames import covariant_derivative, curvature
from .geometry import (Chart, Form, FormField, GeometryError, Grid, Vec, VectorField,
                       exterior_derivative, interior_product, lie_derivative_form,
                       pullback, pullback_form, sample_points, wedge)
from .jets import Jet

__all__ = ["TotalSpacePatch", "build_patch", "lift_connection", "lift_matter",
           "lift_vector_field", "lift_and_compare", "OracleReport", "GROUPS", "MAX_TOTAL_DIM",
           "group_matrix", "group_params", "TOLERANCES", "OracleCase", "random_case", "run_case", "group_key"]

MAX_TOTAL_DIM = 6

# (parameter names, matrix rows as expressions, eta, parameter box)
GROUPS = {
    "so2": (("alpha",), [["cos(alpha)", "-sin(alpha)"], ["sin(alpha)", "cos(alpha)"]],
            np.eye(2), ((-2.5, 2.5),)),
    "so11": (("rap",), [["cosh(rap)", "sinh(rap)"], ["sinh(rap)", "cosh(rap)"]],
             np.diag([-1.0, 1.0]), ((-1.0, 1.0),)),
    # Tait-Bryan angles, h = Rx(a1) Ry(a2) Rz(a3); identity at the origin
    "so3": (("a1", "a2", "a3"), [
        ["cos(a2)*cos(a3)", "-cos(a2)*sin(a3)", "sin(a2)"],
        ["cos(a1)*sin(a3) + sin(a1)*sin(a2)*cos(a3)",
         "cos(a1)*cos(a3) - sin(a1)*sin(a2)*sin(a3)", "-sin(a1)*cos(a2)"],
        ["sin(a1)*sin(a3) - cos(a1)*sin(a2)*cos(a3)",
         "sin(a1)*cos(a3) + cos(a1)*sin(a2)*sin(a3)", "cos(a1)*cos(a2)"]],
            np.eye(3), ((-1.2, 1.2), (-1.2, 1.2), (-1.2, 1.2))),
}
_ALIASES = {"so(2)": "so2", "so(1,1)": "so11", "so(3)": "so3", "so3-euler": "so3",
            "so(3)-euler": "so3", "so2": "so2", "so11": "so11", "so3": "so3"}


def group_matrix(group: str, params: np.ndarray) -> np.ndarray:
    """Numeric group element(s) for parameters ``(..., k)``."""
    p = np.asarray(params, dtype=float)
    if group == "so2":
        a = p[..., 0]
        c, s = np.cos(a), np.sin(a)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    if group == "so11":
        r = p[..., 0]
        c, s = np.cosh(r), np.sinh(r)
        return np.stack([np.stack([c, s], -1), np.stack([s, c], -1)], -2)
    a, b, c = p[..., 0], p[..., 1], p[..., 2]
    one, zero = np.ones_like(a), np.zeros_like(a)

    def rx(t):
        return np.stack([np.stack([one, zero, zero], -1),
                         np.stack([zero, np.cos(t), -np.sin(t)], -1),
                         np.stack([zero, np.sin(t), np.cos(t)], -1)], -2)

    def ry(t):
        return np.stack([np.stack([np.cos(t), zero, np.sin(t)], -1),
                         np.stack([zero, one, zero], -1),
                         np.stack([-np.sin(t), zero, np.cos(t)], -1)], -2)

    def rz(t):
        return np.stack([np.stack([np.cos(t), -np.sin(t), zero], -1),
                         np.stack([np.sin(t), np.cos(t), zero], -1),
                         np.stack([zero, zero, one], -1)], -2)

    return rx(a) @ ry(b) @ rz(c)


def group_params(group: str, h: np.ndarray) -> np.ndarray:
    """Inverse of :func:`group_matrix` on the parameter box."""
    if group == "so2":
        return np.arctan2(h[..., 1, 0], h[..., 0, 0])[..., None]
    if group == "so11":
        return np.arcsinh(h[..., 0, 1])[..., None]
    b = np.arctan2(h[..., 0, 2], np.hypot(h[..., 0, 0], h[..., 0, 1]))
    a = np.arctan2(-h[..., 1, 2], h[..., 2, 2])
    c = np.arctan2(-h[..., 0, 1], h[..., 0, 0])
    return np.stack([a, b, c], -1)


def _algebra_basis(eta: np.ndarray) -> np.ndarray:
    N = eta.shape[0]
    basis = []
    for i, j in itertools.combinations(range(N), 2):
        E = np.zeros((N, N))
        E[i, :] += eta[j]
        E[j, :] -= eta[i]
        basis.append(E)
    return np.array(basis)


@dataclass(frozen=True)
class TotalSpacePatch:
    base: Chart
    group: str
    params: tuple
    matrix: tuple   # expressions over the total chart
    eta: np.ndarray
    total: Chart
    basis: np.ndarray

    @property
    def N(self) -> int:
        return self.eta.shape[0]

    @property
    def k(self) -> int:
        return len(self.params)

    @property
    def n(self) -> int:
        return self.base.dim


def group_key(group: str) -> str:
    key = _ALIASES.get(group.lower())
    if key is None:
        raise GeometryError(f"unsupported group {group!r} (use so2, so11 or so3)")
    return key


def build_patch(base: Chart, group: str) -> TotalSpacePatch:
    key = group_key(group)
    names, rows, eta, pbox = GROUPS[key]
    if base.dim + len(names) > MAX_TOTAL_DIM:
        raise GeometryError(f"total dimension {base.dim + len(names)} exceeds {MAX_TOTAL_DIM}")
    clash = set(names) & set(base.coords)
    if clash:
        raise GeometryError(f"base coordinates clash with group parameters {sorted(clash)}")
    total = Chart(f"{base.name}x{key}", base.coords + names, base.box + pbox)
    matrix = tuple(tuple(total.parse(e) for e in row) for row in rows)
    return TotalSpacePatch(base, key, names, matrix, eta, total, _algebra_basis(eta))


# --------------------------------------------------------------------------

def _matrix0(alg, n, c, order) -> Form:
    return Form(alg, n, 0, c[:, :, :, None, :], order, "matrix")


def _group_jets(patch: TotalSpacePatch, tgrid: Grid):
    alg = tgrid.alg
    h = tgrid.evaluate(patch.matrix)
    hinv = alg.matinv(h, tgrid.order)
    return h, hinv


def lift_connection(patch: TotalSpacePatch, omega: FormField, tgrid: Grid):
    """``omega~ = h^-1 pi^*omega h + h^-1 dh`` on the total grid."""
    alg, n = tgrid.alg, tgrid.n
    h, hinv = _group_jets(patch, tgrid)
    proj = tgrid.evaluate([patch.total.parse(c) for c in patch.base.coords])
    om = pullback(proj, omega, tgrid, patch.base)
    H = _matrix0(alg, n, h, tgrid.order)
    Hi = _matrix0(alg, n, hinv, tgrid.order)
    mc = wedge(Hi, exterior_derivative(H), "ab,bc->ac")
    lifted = wedge(wedge(Hi, om, "ab,bc->ac"), H, "ab,bc->ac") + mc
    return lifted, h, hinv


def lift_matter(patch: TotalSpacePatch, phi: FormField, tgrid: Grid, hinv: np.ndarray) -> Form:
    proj = tgrid.evaluate([patch.total.parse(c) for c in patch.base.coords])
    ph = pullback(proj, phi, tgrid, patch.base)
    return wedge(_matrix0(tgrid.alg, tgrid.n, hinv, tgrid.order), ph, "ab,b->a")


def _vertical_solve(patch, tgrid, h, hinv, target):
    """Vertical components ``v^A`` with ``h^-1 d_A h v^A = target`` (algebra-valued jets)."""
    alg = tgrid.alg
    n, k = patch.n, patch.k
    order = tgrid.order - 1
    dh = alg.grad(h, tgrid.n)  # (P, a, b, mu, M)
    Mg = alg.einsum("Zab,Zbcm->Zacm", hinv, dh[:, :, :, n:n + k], order)  # (P, a, c, A)
    pinv = np.linalg.pinv(patch.basis.reshape(len(patch.basis), -1).T)  # (k, N*N)
    P = h.shape[0]
    Mc = np.einsum("iq,ZqAM->ZiAM", pinv, Mg.reshape(P, -1, k, alg.size))  # (P, i, A)
    tc = np.einsum("iq,ZqM->ZiM", pinv, target.reshape(P, -1, alg.size))
    Minv = alg.matinv(Mc, order)
    return alg.einsum("ZAi,Zi->ZA", Minv, tc, order)


def lift_vector_field(patch, tgrid, xi: VectorField, B: np.ndarray, h, hinv) -> Vec:
    """``xi~`` with horizontal base part ``xi`` and vertical part from ``-h^-1 B h``."""
    alg = tgrid.alg
    order = tgrid.order - 1
    base_xi = tgrid.evaluate(xi.components[patch.base.name])
    target = -alg.einsum("Zab,Zbc->Zac", hinv, alg.einsum("Zab,Zbc->Zac", B, h, order), order)
    v = _vertical_solve(patch, tgrid, h, hinv, target)
    c = np.concatenate([base_xi, v], axis=1)
    return Vec(alg, tgrid.n, c, order)


def fundamental_fields(patch, tgrid, h, hinv) -> list:
    out = []
    P = h.shape[0]
    for E in patch.basis:
        t = tgrid.alg.constant(np.broadcast_to(E, (P,) + E.shape))
        v = _vertical_solve(patch, tgrid, h, hinv, t)
        c = np.concatenate([np.zeros((P, patch.n, tgrid.alg.size)), v], axis=1)
        out.append(Vec(tgrid.alg, tgrid.n, c, tgrid.order - 1))
    return out


# default thresholds per recorded check
TOLERANCES = {
    "lift_invariant": 1e-9,
    "connection_on_fundamental": 1e-9,
    "matter_horizontal": 1e-9,
    "horizontality_connection": 1e-8,
    "horizontality_matter": 1e-8,
    "xi_invariance": 1e-7,
}
DEFAULT_TOL = 1e-6


@dataclass
class OracleReport:
    group: str
    npoints: int
    checks: dict = field(default_factory=dict)   # name -> max deviation
    worst: dict = field(default_factory=dict)    # name -> point (base coordinates)
    runtime: float = 0.0

    def record(self, name: str, form_or_value, points=None):
        if isinstance(form_or_value, Form):
            val = form_or_value.max_abs()
            idx = form_or_value.argmax_point()
        else:
            arr = np.abs(np.asarray(form_or_value))
            val = float(arr.max()) if arr.size else 0.0
            idx = int(np.unravel_index(np.argmax(arr), arr.shape)[0]) if arr.size else 0
        self.checks[name] = val
        if points is not None:
            self.worst[name] = [float(x) for x in points[idx]]

    def failures(self, tol: float | None = None) -> dict:
        """Checks above their threshold (``tol`` overrides the comparison threshold)."""
        out = {}
        for name, val in self.checks.items():
            limit = TOLERANCES.get(name, DEFAULT_TOL if tol is None else tol)
            if not val <= limit:
                out[name] = val
        return out

    @property
    def passed(self) -> bool:
        return not self.failures()

    @property
    def deviation(self) -> float:
        """Largest deviation among the base-formula comparisons."""
        keys = ("connection", "matter", "natural_lift", "total_cartan_vs_curvature_connection",
                "total_cartan_vs_covariant_matter", "section_pullback_connection")
        return max((self.checks[k] for k in keys if k in self.checks), default=0.0)


def _section_exprs(patch, section):
    if section is None:
        texts = ["0"] * patch.k
    elif isinstance(section, dict):
        texts = [section.get(p, "0") for p in patch.params]
    else:
        texts = list(section)
    return [patch.base.parse(t) for t in texts]


def _matrix_exprs(lam, chart: Chart):
    return [[chart.parse(e) for e in row] for row in lam]


def _mul(alg, a, b, order):
    return alg.einsum("Zab,Zbc->Zac", a, b, order)


def _base_vec_on_total(patch, tgrid, xi: VectorField) -> np.ndarray:
    return tgrid.evaluate(xi.components[patch.base.name])


def lift_and_compare(patch: TotalSpacePatch, omega: FormField, lam, xi: VectorField,
                     phi: FormField | None = None, section=None, npoints: int = 20,
                     seed: int = 0, points: np.ndarray | None = None,
                     lift_tol: float = 1e-8, invariance: bool = True) -> OracleReport:
    """Run the total-space comparison on ``npoints`` base points.

    ``lam`` is a matrix of expressions on the base chart.  ``section`` gives
    the group parameters along the section as base expressions (identity
    section by default); the base side then uses the correspondingly
    gauge-transformed data ``g0^-1 omega g0 + g0^-1 dg0``, ``g0^-1 lam g0``
    and ``g0^-1 phi``.
    """
    t0 = time.perf_counter()
    base = patch.base
    n, k = patch.n, patch.k
    order = 2
    pts = sample_points(base.box, npoints, seed) if points is None else np.asarray(points)
    bgrid = Grid(base, pts, order)
    balg = bgrid.alg
    sec = _section_exprs(patch, section)
    sjets = bgrid.evaluate([base.parse(c) for c in base.coords] + sec)
    tgrid = Grid(patch.total, sjets[..., 0], order)
    talg = tgrid.alg
    P = len(pts)
    rep = OracleReport(patch.group, P)
    lam_e = _matrix_exprs(lam, base)

    # total-space side
    om_t, h, hinv = lift_connection(patch, omega, tgrid)
    lam_t = tgrid.evaluate(lam_e)
    proj = tgrid.evaluate([patch.total.parse(c) for c in base.coords])
    om_pi = pullback(proj, omega, tgrid, base)
    xi_h = Vec(talg, tgrid.n, np.concatenate(
        [_base_vec_on_total(patch, tgrid, xi), np.zeros((P, k, talg.size))], axis=1), order)
    B_t = interior_product(xi_h, om_pi).c[:, :, :, 0, :] - lam_t
    xi_t = lift_vector_field(patch, tgrid, xi, B_t, h, hinv)
    lam_tilde = _mul(talg, hinv, _mul(talg, lam_t, h, 1), 1)
    lift_res = interior_product(xi_t, om_t).c[:, :, :, 0, 0] - lam_tilde[..., 0]
    rep.record("lift_invariant", lift_res, pts)
    if rep.checks["lift_invariant"] > lift_tol:
        raise GeometryError(f"lift invariant violated ({rep.checks['lift_invariant']:.3g}); "
                            "construction bug")
    A = fundamental_fields(patch, tgrid, h, hinv)
    rep.record("connection_on_fundamental", np.array(
        [np.abs(interior_product(a, om_t).values[:, :, :, 0] - E).max()
         for a, E in zip(A, patch.basis)]))

    L_om = lie_derivative_form(xi_t, om_t)
    alt = interior_product(xi_t, curvature(om_t)) + covariant_d_algebra0(
        om_t, interior_product(xi_t, om_t))
    rep.record("total_cartan_vs_curvature_connection", L_om - alt, pts)
    rep.record("horizontality_connection", np.array(
        [interior_product(a, L_om).max_abs() for a in A]))
    lhs_om = pullback_form(sjets, balg, n, L_om, 0)

    # base side
    om_b = omega.sample(bgrid)
    genv = {p: Jet(balg, sjets[:, n + i], order) for i, p in enumerate(patch.params)}
    g0 = bgrid.evaluate(patch.matrix, genv)
    g0i = balg.matinv(g0, order)
    G0, G0i = _matrix0(balg, n, g0, order), _matrix0(balg, n, g0i, order)
    om_s = wedge(wedge(G0i, om_b, "ab,bc->ac"), G0, "ab,bc->ac") + wedge(
        G0i, exterior_derivative(G0), "ab,bc->ac")
    lam_s = _mul(balg, g0i, _mul(balg, bgrid.evaluate(lam_e), g0, order), order)
    xi_s = xi.sample(bgrid)
    B_s = interior_product(xi_s, om_s) - _matrix0(balg, n, lam_s, order)
    rhs_om = lie_derivative_form(xi_s, om_s) - covariant_d_algebra0(om_s, B_s)
    rep.record("connection", lhs_om - rhs_om.truncated(0), pts)
    if not np.any(lam_s):
        # natural lift: the base side is i_xi F_omega
        nat = interior_product(xi_s, curvature(om_s))
        rep.record("natural_lift", lhs_om - nat.truncated(0), pts)
    rep.record("section_pullback_connection",
               pullback_form(sjets, balg, n, om_t, 0) - om_s.truncated(0), pts)

    if phi is not None:
        ph_t = lift_matter(patch, phi, tgrid, hinv)
        L_ph = lie_derivative_form(xi_t, ph_t)
        alt_ph = interior_product(xi_t, covariant_derivative(om_t, ph_t)) - act(
            interior_product(xi_t, om_t), ph_t)
        if ph_t.degree > 0:
            alt_ph = alt_ph + covariant_derivative(om_t, interior_product(xi_t, ph_t))
            rep.record("matter_horizontal", np.array(
                [interior_product(a, ph_t).max_abs() for a in A]))
            rep.record("horizontality_matter", np.array(
                [interior_product(a, L_ph).max_abs() for a in A]))
        rep.record("total_cartan_vs_covariant_matter", L_ph - alt_ph, pts)
        lhs_ph = pullback_form(sjets, balg, n, L_ph, 0)
        ph_s = wedge(G0i, phi.sample(bgrid), "ab,b->a")
        rhs_ph = lie_derivative_form(xi_s, ph_s) + act(B_s, ph_s)
        rep.record("matter", lhs_ph - rhs_ph.truncated(0), pts)

    if invariance:
        rep.record("xi_invariance", _xi_invariance(patch, omega, lam_e, xi, pts, seed), pts)
    rep.runtime = time.perf_counter() - t0
    return rep


def _xi_invariance(patch, omega, lam_e, xi, pts, seed, step: float = 1e-5) -> np.ndarray:
    """``(R_g)_* xi~ - xi~ o R_g`` by central differences for a few group elements."""
    rng = np.random.default_rng(seed + 17)
    pbox = np.asarray(GROUPS[patch.group][3])
    P = len(pts)
    params = 0.5 * (pbox[:, 0] + (pbox[:, 1] - pbox[:, 0]) * rng.random((P, patch.k)))
    out = []
    for gp in 0.3 * rng.standard_normal((3, patch.k)):
        g = group_matrix(patch.group, gp)

        def right(p):
            return group_params(patch.group, group_matrix(patch.group, p) @ g)

        q = right(params)
        xi_p = _xi_tilde_at(patch, omega, lam_e, xi, np.hstack([pts, params]))
        xi_q = _xi_tilde_at(patch, omega, lam_e, xi, np.hstack([pts, q]))
        J = np.zeros((P, patch.k, patch.k))
        for a in range(patch.k):
            d = np.zeros(patch.k)
            d[a] = step
            J[:, :, a] = (right(params + d) - right(params - d)) / (2 * step)
        pushed = np.einsum("ZBA,ZA->ZB", J, xi_p[:, patch.n:])
        out.append(np.abs(pushed - xi_q[:, patch.n:]).max(axis=1))
        out.append(np.abs(xi_p[:, :patch.n] - xi_q[:, :patch.n]).max(axis=1))
    return np.max(out, axis=0)


def _xi_tilde_at(patch, omega, lam_e, xi, tpts) -> np.ndarray:
    tgrid = Grid(patch.total, tpts, 1)
    talg = tgrid.alg
    h = tgrid.evaluate(patch.matrix)
    hinv = talg.matinv(h, 1)
    proj = tgrid.evaluate([patch.total.parse(c) for c in patch.base.coords])
    om = pullback(proj, omega, tgrid, patch.base)
    xc = _base_vec_on_total(patch, tgrid, xi)
    xv = Vec(talg, tgrid.n, np.concatenate([xc, np.zeros((len(tpts), patch.k, talg.size))], 1), 1)
    B = interior_product(xv, om).c[:, :, :, 0, :] - tgrid.evaluate(lam_e)
    target = -_mul(talg, hinv, _mul(talg, B, h, 1), 1)
    v = _vertical_solve(patch, tgrid, h, hinv, target)
    return np.concatenate([xc[..., 0], v[..., 0]], axis=1)


@dataclass
class OracleCase:
    omega: FormField
    lam: list
    xi: VectorField
    phi: FormField
    section: dict | None


def random_case(rng: np.random.Generator, patch: TotalSpacePatch, natural: bool = False,
                with_section: bool = True) -> OracleCase:
    """Seeded base data for :func:`lift_and_compare` (bounded on the base box)."""
    from .corpus import bounded_smooth, random_connection, random_lambda, random_matter
    from .frames import ConnectionForm, Signature

    base, eta = patch.base, patch.eta
    sig = Signature(int((np.diag(eta) < 0).sum()), int((np.diag(eta) > 0).sum()))
    om = ConnectionForm.from_components(base, random_connection(rng, base, eta), sig).field
    N = eta.shape[0]
    lam = [["0"] * N for _ in range(N)] if natural else random_lambda(rng, base, eta)
    xi = VectorField.from_strings(base, [bounded_smooth(rng, base) for _ in range(base.dim)])
    phi = FormField.one_forms(base, random_matter(rng, base, N))
    section = None
    if with_section:
        _, _, _, pbox = GROUPS[patch.group]
        section = {p: bounded_smooth(rng, base, 2, 0.4 * (hi - lo) / 2)
                   for p, (lo, hi) in zip(patch.params, pbox)}
    return OracleCase(om, lam, xi, phi, section)


def run_case(patch: TotalSpacePatch, case: OracleCase, npoints: int = 20, seed: int = 0,
             invariance: bool = True) -> OracleReport:
    return lift_and_compare(patch, case.omega, case.lam, case.xi, case.phi, case.section,
                            npoints, seed, invariance=invariance)
