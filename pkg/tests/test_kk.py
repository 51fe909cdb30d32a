import numpy as np
import pytest

from kosmann.frames import Coframe, Metric, Signature
from kosmann.geometry import Chart, Form, Grid, VectorField, sample_points
from kosmann.kk import (KKError, KKSetup, adapted_gauge_check, field_strength_flux,
                        gram_schmidt_vertical, reduce)
from kosmann.specfile import load_spec


def _reduce(name, npoints=12, order=3):
    setup = load_spec(name).kk
    grid = Grid(setup.chart, sample_points(setup.chart.box, npoints, 3), order)
    return setup, grid, reduce(setup, grid)


def test_hopf_reduction():
    setup, grid, red = _reduce("s3_hopf")
    th = grid.points[:, 0]
    np.testing.assert_allclose(red.Phi[:, 0, 0, 0], 0.5, atol=1e-10)
    np.testing.assert_allclose(red.gV[:, 0, 0, 0], 0.25, atol=1e-12)
    theta = red.theta.values[:, 0]
    np.testing.assert_allclose(theta, np.column_stack([0 * th, np.cos(th), 1 + 0 * th]),
                               atol=1e-12)
    h = red.h.values
    np.testing.assert_allclose(h[:, 0, 0], 0.25, atol=1e-9)
    np.testing.assert_allclose(h[:, 1, 1], 0.25 * np.sin(th) ** 2, atol=1e-9)
    assert np.abs(h[:, 2]).max() < 1e-9 and abs(h[:, 0, 1]).max() < 1e-9
    d = red.diagnostics
    assert d["reconstruction"] < 1e-9 and d["adapted_naive"] < 1e-8 and d["det_phi_min"] > 0
    e = red.e.values  # (1/2 dth, 1/2 sin(th) dph, 1/2 (dps + cos(th) dph))
    np.testing.assert_allclose(e[:, 0], np.column_stack([0.5 + 0 * th, 0 * th, 0 * th]),
                               atol=1e-12)
    np.testing.assert_allclose(np.abs(e[:, 1, 1]), 0.5 * np.sin(th), atol=1e-12)
    chk = adapted_gauge_check(red.e, red.eta, setup.sample_fundamental(grid), points=grid.points)
    assert chk["passed"] and chk["naive"] < 1e-8 and chk["kosmann"] < 1e-8


def test_misgauged_coframe_fails_the_adapted_gauge_check():
    # the bundled Hopf coframe is the adapted one rotated by ps in the base plane
    spec = load_spec("s3_hopf")
    setup = spec.kk
    grid = Grid(setup.chart, sample_points(setup.chart.box, 12, 4), 3)
    e = spec.coframe.field.sample(grid, setup.chart.name)
    chk = adapted_gauge_check(e, spec.eta, setup.sample_fundamental(grid), points=grid.points)
    assert not chk["passed"] and chk["BK"] > 0.01 and chk["naive"] > 0.01
    assert chk["kosmann"] < 1e-8


def test_hopf_flux_is_one_monopole():
    setup = load_spec("s3_hopf").kk
    flux = field_strength_flux(setup)
    assert abs(abs(flux[0]) - 4 * np.pi) < 1e-3 * 4 * np.pi
    assert abs(flux[0] / setup.fiber_periods[0]) == pytest.approx(1.0, rel=1e-3)


def test_product_reduction():
    setup, grid, red = _reduce("product_s2xs1")
    np.testing.assert_allclose(red.Phi[..., 0], 1.0, atol=1e-12)
    assert red.diagnostics["reconstruction"] < 1e-9
    chk = adapted_gauge_check(red.e, red.eta, setup.sample_fundamental(grid), points=grid.points)
    assert chk["BK"] < 1e-12


def test_warped_reduction():
    setup, grid, red = _reduce("warped")
    x, w = grid.points[:, 0], grid.points[:, 1]
    np.testing.assert_allclose(red.Phi[:, 0, 0, 0], 2 + np.sin(x) * np.cos(w), atol=1e-10)
    np.testing.assert_allclose(red.gV[:, 0, 0, 0], (2 + np.sin(x) * np.cos(w)) ** 2, atol=1e-10)
    assert red.diagnostics["phi_invariance"] < 1e-8
    assert abs(field_strength_flux(setup)[0]) < 1e-12


def _theta(k, n=3, P=4, order=2):
    chart = Chart("c", ("x", "y", "z")[:n], [(-1, 1)] * n)
    grid = Grid(chart, np.zeros((P, n)), order)
    c = np.zeros((P, k, n, grid.alg.size))
    for m in range(k):
        c[:, m, n - k + m, 0] = 1.0
    return grid, Form(grid.alg, n, 1, c, order, "vector")


def test_gram_schmidt_two_fibers():
    grid, theta = _theta(2)
    gram = grid.alg.constant(np.broadcast_to([[1.0, 0.5], [0.5, 1.0]], (4, 2, 2)).copy())
    _, L, signs = gram_schmidt_vertical(theta, gram)
    s = np.sqrt(0.75)
    np.testing.assert_allclose(L[0, :, :, 0], [[1.0, 0.0], [-0.5 / s, 1.0 / s]], atol=1e-15)
    assert np.all(signs == 1)


def test_gram_schmidt_unit_and_timelike_fiber():
    grid, theta = _theta(1)
    quarter = grid.alg.constant(np.full((4, 1, 1), 0.25))
    e, L, signs = gram_schmidt_vertical(theta, quarter)
    np.testing.assert_allclose(L[:, 0, 0, 0], 2.0)  # e = theta / |theta|, |theta|^2 = 1/4
    neg = grid.alg.constant(np.full((4, 1, 1), -1.0))
    _, L, signs = gram_schmidt_vertical(theta, neg)
    np.testing.assert_allclose(L[:, 0, 0, 0], 1.0)
    assert np.all(signs == -1)
    with pytest.raises(KKError):
        gram_schmidt_vertical(theta, grid.alg.constant(np.zeros((4, 1, 1))))


def test_setup_errors():
    chart = Chart("m", ("x", "y", "z"), [(-1, 1)] * 3)
    grid = Grid(chart, sample_points(chart.box, 6, 0), 2)
    good = Metric.from_rows(chart, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    z_dep = Metric.from_rows(chart, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1 + z^2"]])
    dz = VectorField.from_strings(chart, ["0", "0", "1"])
    null = VectorField.from_strings(chart, ["0", "0", "0"])
    with pytest.raises(KKError, match="invariant"):
        reduce(KKSetup(chart, [dz], ("x", "y"), z_dep), grid)
    with pytest.raises(KKError, match="null"):
        reduce(KKSetup(chart, [null], ("x", "y"), good), grid)
    assert reduce(KKSetup(chart, [dz], ("x", "y"), good), grid).diagnostics["reconstruction"] == 0
    bad_cf = Coframe.from_rows(chart, [["cos(z)", "-sin(z)", "0"], ["sin(z)", "cos(z)", "0"],
                                       ["0", "0", "1"]], Signature.euclidean(3))
    # a fiber-rotated coframe is still Kosmann-invariant, so it is accepted
    red = reduce(KKSetup(chart, [dz], ("x", "y"), None, bad_cf), grid)
    assert red.diagnostics["coframe_naive"] > 0.5
    assert red.diagnostics["coframe_kosmann_invariance"] < 1e-12
