import numpy as np
import pytest

from kosmann.corpus import random_coframe, random_connection, random_gauge, random_matter, \
    random_vector_field
from kosmann.covlie import (CovariantizationData, KosmannData, act, bracket_defect,
                            connection_independence_check, gauge_transform,
                            general_cov_lie_connection, general_cov_lie_connection_curvature,
                            general_cov_lie_matter, general_cov_lie_matter_lemma, killing_check,
                            kosmann_forms, kosmann_lie_coframe, natural_cov_lie_connection,
                            natural_cov_lie_connection_alt, natural_cov_lie_matter,
                            natural_cov_lie_matter_cartan, naive_noncovariance)
from kosmann.frames import Coframe, ConnectionForm, Signature, gauge_coframe
from kosmann.geometry import FormField, GeometryError, VectorField

from helpers import box_chart, grid_on

PLANE = box_chart(2)
E2 = Signature.euclidean(2)


def _flat(grid):
    e = Coframe.from_rows(PLANE, [["1", "0"], ["0", "1"]], E2).sample(grid)
    return KosmannData(e, E2.eta, grid.points)


def _vec(chart, comps, grid):
    return VectorField.from_strings(chart, comps).sample(grid)


def test_flat_rotation_is_compensated():
    g = grid_on(PLANE, 3)
    kd = _flat(g)
    xi = _vec(PLANE, ["-y", "x"], g)
    Be = act(kd.B(xi), kd.e).values
    np.testing.assert_allclose(Be[:, 0], np.broadcast_to([0.0, 1.0], (20, 2)))   # +dy
    np.testing.assert_allclose(Be[:, 1], np.broadcast_to([-1.0, 0.0], (20, 2)))  # -dx
    assert kosmann_lie_coframe(kd, xi).max_abs() == 0.0
    v = killing_check(kd, xi)
    assert v.killing and v.agree


def test_flat_dilation_is_not_killing():
    g = grid_on(PLANE, 3)
    kd = _flat(g)
    xi = _vec(PLANE, ["x", "y"], g)
    assert kd.B(xi).max_abs() == 0.0
    np.testing.assert_allclose(kosmann_lie_coframe(kd, xi).values, kd.e.values)
    v = killing_check(kd, xi)
    assert not v.killing and v.agree and v.residual == pytest.approx(1.0)


def _random(seed, n=3, order=4, sig=None):
    rng = np.random.default_rng(seed)
    chart = box_chart(n)
    sig = sig or Signature.euclidean(n)
    g = grid_on(chart, order, 10, seed)
    e = Coframe.from_rows(chart, random_coframe(rng, chart), sig).sample(g)
    xi = _vec(chart, random_vector_field(rng, chart), g)
    return rng, chart, sig, g, KosmannData(e, sig.eta, g.points), xi


@pytest.mark.parametrize("sig", [Signature(0, 3), Signature(1, 2)])
def test_three_forms_agree(sig):
    _, _, _, _, kd, xi = _random(3, sig=sig)
    f = kosmann_forms(kd, xi)
    assert (f["covariant"] - f["lie"]).max_abs() < 1e-12
    assert (f["lie"] - f["correction"]).max_abs() < 1e-12


def test_kosmann_correction_linearity():
    rng, chart, _, g, kd, xi = _random(4)
    zeta = _vec(chart, random_vector_field(rng, chart), g)
    lhs = kd.B(xi.times(g.scalar("2.5 + 0*x").c) + zeta).values
    assert np.abs(lhs - 2.5 * kd.B(xi).values - kd.B(zeta).values).max() < 1e-12
    # over functions: B_{f xi} - f B_xi = -eta^{-1} Alt(eta tau (x) df(E)), tau = i_xi e
    f = g.scalar("1 + x*y")
    tau = np.einsum("pam,pm->pa", kd.e.values, xi.values)
    dfE = np.einsum("pm,pmb->pb", f.gradient, kd.E[..., 0])
    A = np.einsum("da,pa,pb->pdb", kd.eta, tau, dfE)
    expected = -np.einsum("ad,pdb->pab", np.linalg.inv(kd.eta), 0.5 * (A - A.swapaxes(1, 2)))
    got = kd.B(xi.times(f.c)).values[..., 0] - f.value[:, None, None] * kd.B(xi).values[..., 0]
    assert np.abs(expected).max() > 0.01
    assert np.abs(got - expected).max() < 1e-12


def test_natural_lift_formulas_agree():
    rng, chart, sig, g, _, xi = _random(5)
    om = ConnectionForm.from_components(chart, random_connection(rng, chart, sig.eta),
                                        sig).sample(g)
    phi = FormField.one_forms(chart, random_matter(rng, chart, 3)).sample(g)
    assert (natural_cov_lie_matter(om, xi, phi)
            - natural_cov_lie_matter_cartan(om, xi, phi)).max_abs() < 1e-8
    assert (natural_cov_lie_connection(om, xi)
            - natural_cov_lie_connection_alt(om, xi)).max_abs() < 1e-8


def test_general_lift_formulas_agree():
    rng, chart, sig, g, kd, xi = _random(6)
    data = kd.as_pair()
    phi = FormField.one_forms(chart, random_matter(rng, chart, 3)).sample(g)
    assert (general_cov_lie_matter(data, xi, phi)
            - general_cov_lie_matter_lemma(data, xi, phi)).max_abs() < 1e-8
    assert (general_cov_lie_connection(data, xi, kd.omega)
            - general_cov_lie_connection_curvature(data, xi)).max_abs() < 1e-8
    ok, dev, _ = connection_independence_check(kd.as_pair(), kd.as_correction(), xi)
    assert ok and dev < 1e-12


def test_natural_lift_is_gauge_covariant_and_naive_is_not():
    rng, chart, sig, g, kd, xi = _random(7, sig=Signature(1, 2))
    gamma = random_gauge(rng, chart, sig.eta).jets(g)
    e2, om2 = gauge_transform(gamma, kd.e, sig.eta, kd.omega)
    lhs = natural_cov_lie_matter(om2, xi, e2)
    rhs = gauge_coframe(gamma, natural_cov_lie_matter(kd.omega, xi, kd.e), lhs.order)
    assert (lhs - rhs).max_abs() < 1e-8
    assert naive_noncovariance(gamma, xi, kd.e).max_abs() > 0.01


def test_constant_gauge_commutes_with_plain_lie_derivative():
    g = grid_on(PLANE, 3)
    c, s = np.cos(0.4), np.sin(0.4)
    gamma = g.alg.constant(np.broadcast_to([[c, -s], [s, c]], (20, 2, 2)).copy())
    kd = _flat(g)
    xi = _vec(PLANE, ["x*y", "sin(x)"], g)
    assert naive_noncovariance(gamma, xi, kd.e).max_abs() < 1e-15


def test_gauge_transform_rejects_non_orthogonal():
    g = grid_on(PLANE, 2)
    gamma = g.alg.constant(np.broadcast_to([[2.0, 0.0], [0.0, 1.0]], (20, 2, 2)).copy())
    with pytest.raises(GeometryError):
        gauge_transform(gamma, _flat(g).e, E2.eta)


def test_natural_bracket_defect_is_curvature():
    # for the natural lift the commutator defect is rho(F(xi, zeta))
    rng, chart, sig, g, _, xi = _random(8, order=5)
    zeta = _vec(chart, random_vector_field(rng, chart), g)
    om = ConnectionForm.from_components(chart, random_connection(rng, chart, sig.eta),
                                        sig).sample(g)
    phi = FormField.one_forms(chart, random_matter(rng, chart, 3)).sample(g)
    data = CovariantizationData.natural(om)
    from kosmann.frames import curvature
    from kosmann.geometry import interior_product
    F = interior_product(zeta, interior_product(xi, curvature(om)))
    diff = bracket_defect(data, xi, zeta, phi) - act(F, phi)
    assert diff.truncated(0).max_abs() < 1e-8
