import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kosmann import jets, kernels
from kosmann.jets import Jet, JetAlgebra


def _random_jet(rng, alg, lead=(5,)):
    return rng.standard_normal(lead + (alg.size,))


def test_monomial_count():
    for nv, order in ((1, 4), (2, 3), (3, 2), (4, 4)):
        assert JetAlgebra(nv, order).size == math.comb(nv + order, order)


def test_product_is_commutative_and_associative(rng):
    alg = JetAlgebra(3, 3)
    a, b, c = (_random_jet(rng, alg) for _ in range(3))
    np.testing.assert_allclose(alg.mul(a, b), alg.mul(b, a), atol=1e-14)
    np.testing.assert_allclose(alg.mul(alg.mul(a, b), c), alg.mul(a, alg.mul(b, c)), atol=1e-12)


def test_leibniz_rule(rng):
    alg = JetAlgebra(2, 4)
    a, b = _random_jet(rng, alg), _random_jet(rng, alg)
    lhs = alg.truncate(alg.deriv(alg.mul(a, b), 0), 3)
    rhs = alg.mul(alg.deriv(a, 0), b, 3) + alg.mul(a, alg.deriv(b, 0), 3)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_series_matches_direct_functions():
    alg = JetAlgebra(2, 4)
    x, y = alg.coordinates(np.array([[0.3, -0.2]]))
    u = x * y + x
    np.testing.assert_allclose((jets.exp(u) * jets.exp(-u)).c, Jet(alg, alg.constant([1.0])).c,
                               atol=1e-14)
    s2c2 = jets.sin(u) * jets.sin(u) + jets.cos(u) * jets.cos(u)
    np.testing.assert_allclose(s2c2.c, alg.constant([1.0]), atol=1e-14)
    np.testing.assert_allclose(jets.log(jets.exp(u)).c, u.c, atol=1e-14)
    np.testing.assert_allclose((jets.sqrt(u * u + 2.0) ** 2).c, (u * u + 2.0).c, atol=1e-13)


def test_matrix_inverse(rng):
    alg = JetAlgebra(3, 3)
    a = rng.standard_normal((4, 3, 3, alg.size)) * 0.3
    a[..., 0] += 3 * np.eye(3)
    inv = alg.matinv(a)
    eye = alg.constant(np.broadcast_to(np.eye(3), (4, 3, 3)))
    np.testing.assert_allclose(alg.matmul(a, inv), eye, atol=1e-12)


def test_composition_chain_rule():
    inner_alg = JetAlgebra(1, 3)
    (t,) = inner_alg.coordinates(np.array([[0.4]]))
    # y(t) = (sin t, t^2); f(y) = y0 * y1 at the point y(0.4)
    outer = JetAlgebra(2, 3)
    y0 = np.array([[math.sin(0.4), 0.16]])
    a, b = outer.coordinates(y0)
    f = a * b
    inner = np.stack([jets.sin(t).c, (t * t).c], axis=-2)
    got = outer.compose(f.c, inner, inner_alg)
    want = (jets.sin(t) * t * t).c
    np.testing.assert_allclose(got, want, atol=1e-14)


def test_to_derivatives():
    alg = JetAlgebra(1, 4)
    (x,) = alg.coordinates(np.array([[0.0]]))
    d = alg.to_derivatives(jets.exp(x).c)
    np.testing.assert_allclose(d, np.ones((1, 5)), atol=1e-14)


def test_abs_is_rejected_at_zero():
    from kosmann import exprlang
    with pytest.raises(exprlang.DomainError):
        exprlang.eval_jet(exprlang.parse("abs(x)", ("x",)), {"x": 0.0}, order=1)


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_backends_agree_with_reference(backend, rng):
    alg = JetAlgebra(4, 3)
    a, b = _random_jet(rng, alg, (50,)), _random_jet(rng, alg, (50,))
    coeffs = rng.standard_normal((4, 50))
    delta = np.array(b, copy=True)
    delta[:, 0] = 0
    previous = kernels.BACKEND
    try:
        kernels.use(backend)
        m = kernels.mul(a, b, alg)
        s = kernels.series(coeffs, delta, alg)
    finally:
        kernels.use(previous)
    # dense reference product
    ref = np.zeros_like(a)
    for i, mi in enumerate(alg.monomials):
        for j, mj in enumerate(alg.monomials):
            if sum(mi) + sum(mj) <= alg.order:
                ref[:, alg.index[tuple(p + q for p, q in zip(mi, mj))]] += a[:, i] * b[:, j]
    np.testing.assert_allclose(m, ref, atol=1e-12)
    ref_s = alg.constant(coeffs[3])
    for k in (2, 1, 0):
        ref_s = alg.mul(ref_s, delta)
        ref_s[:, 0] += coeffs[k]
    np.testing.assert_allclose(s, ref_s, atol=1e-12)


def test_backends_bitwise_close_on_complex(rng):
    if "compiled" not in kernels.available_backends():
        pytest.skip("compiled kernels not built")
    alg = JetAlgebra(3, 3)
    a = _random_jet(rng, alg, (8,)) + 1j * _random_jet(rng, alg, (8,))
    b = _random_jet(rng, alg, (8,)) + 1j * _random_jet(rng, alg, (8,))
    previous = kernels.BACKEND
    try:
        kernels.use("python")
        ref = kernels.mul(a, b, alg)
        kernels.use("compiled")
        got = kernels.mul(a, b, alg)
    finally:
        kernels.use(previous)
    np.testing.assert_allclose(got, ref, atol=1e-13)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.use("fortran")


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-2, 2), y=st.floats(0.2, 2))
def test_quotient_rule_property(x, y):
    alg = JetAlgebra(2, 2)
    u, v = alg.coordinates(np.array([[x, y]]))
    q = jets.sin(u) / v
    assert float(q.gradient[0, 0]) == pytest.approx(math.cos(x) / y, rel=1e-12, abs=1e-14)
    assert float(q.gradient[0, 1]) == pytest.approx(-math.sin(x) / y ** 2, rel=1e-12, abs=1e-14)
