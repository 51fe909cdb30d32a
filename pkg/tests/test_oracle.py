import numpy as np
import pytest

from kosmann import oracle
from kosmann.covlie import act, covariant_d_algebra0
from kosmann.frames import ConnectionForm, Signature
from kosmann.geometry import (Chart, FormField, GeometryError, Grid, VectorField, exterior_derivative,
                              sample_points)
from kosmann.oracle import (build_patch, group_matrix, group_params, lift_and_compare,
                            lift_connection, random_case, run_case)

from helpers import box_chart

BASE = box_chart(2, "base")


def _tgrid(patch, npoints=10, seed=0, section_zero=False):
    pts = sample_points(patch.total.box, npoints, seed)
    if section_zero:
        pts[:, patch.n:] = 0.0
    return Grid(patch.total, pts, 2)


@pytest.mark.parametrize("group", ["so2", "so11", "so3"])
def test_group_parameters_round_trip(group):
    patch = build_patch(BASE, group)
    rng = np.random.default_rng(0)
    box = np.array(patch.total.box[patch.n:])
    p = rng.uniform(box[:, 0], box[:, 1], (50, patch.k))
    np.testing.assert_allclose(group_params(group, group_matrix(group, p)), p, atol=1e-12)
    h = group_matrix(group, p)
    eta = patch.eta
    np.testing.assert_allclose(np.einsum("pba,bc,pcd->pad", h, eta, h),
                               np.broadcast_to(eta, h.shape), atol=1e-12)


def test_zero_connection_lifts_to_maurer_cartan():
    patch = build_patch(BASE, "so3")
    tg = _tgrid(patch)
    zero = ConnectionForm.from_components(BASE, {}, Signature.euclidean(3)).field
    lifted, h, hinv = lift_connection(patch, zero, tg)
    mc = np.einsum("pab,pbcm->pacm", hinv[..., 0],
                   np.stack([tg.alg.grad(h, tg.n)[..., i, 0] for i in range(tg.n)], -1))
    np.testing.assert_allclose(lifted.values[:, :, :, :], mc, atol=1e-14)
    assert np.abs(lifted.values[:, :, :, :patch.n]).max() == 0.0
    tz = _tgrid(patch, section_zero=True)
    assert np.abs(lift_connection(patch, zero, tz)[0].values[:, :, :, :patch.n]).max() == 0.0


def test_so2_lift_of_a_constant_connection():
    patch = build_patch(BASE, "so2")
    tg = _tgrid(patch)
    om = ConnectionForm.from_components(BASE, {(0, 1): ["0.7", "-0.2"]}, Signature(0, 2)).field
    lifted = lift_connection(patch, om, tg)[0].values
    Jm = np.array([[0.0, -1.0], [1.0, 0.0]])
    # abelian: omega~ = omega + d(alpha) J, with omega^0_1 stored in the (0, 1) slot
    expected = np.zeros((10, 2, 2, 3))
    expected[:, 0, 1, :2] = [0.7, -0.2]
    expected[:, 1, 0, :2] = [-0.7, 0.2]
    expected[:, :, :, 2] += Jm
    np.testing.assert_allclose(lifted, expected, atol=1e-14)


def test_so3_identity_section_pulls_back_to_omega(rng):
    patch = build_patch(BASE, "so3")
    case = random_case(rng, patch)
    tz = _tgrid(patch, section_zero=True)
    lifted = lift_connection(patch, case.omega, tz)[0].values[:, :, :, :patch.n]
    bg = Grid(BASE, tz.points[:, :patch.n], 2)
    assert np.abs(lifted - case.omega.sample(bg).values).max() < 1e-12


def test_patch_limits():
    with pytest.raises(GeometryError):
        build_patch(box_chart(4), "so3")
    with pytest.raises(GeometryError):
        build_patch(Chart("c", ("alpha", "y"), [(-1, 1)] * 2), "so2")
    with pytest.raises(GeometryError):
        build_patch(BASE, "su2")


@pytest.mark.parametrize("group", ["so2", "so11", "so3"])
def test_random_cases_agree(group):
    patch = build_patch(BASE, group)
    for i in range(3):
        case = random_case(np.random.default_rng(100 + i), patch, natural=(i == 0))
        rep = run_case(patch, case, 8, i)
        assert not rep.failures(1e-8), rep.checks
        assert rep.deviation < 1e-10


def test_trivial_data_deviation():
    patch = build_patch(BASE, "so3")
    zero = ConnectionForm.from_components(BASE, {}, Signature.euclidean(3)).field
    rep = lift_and_compare(patch, zero, [["0"] * 3] * 3,
                           VectorField.from_strings(BASE, ["1", "x*y"]),
                           FormField.one_forms(BASE, [["x", "0"], ["y", "1"], ["0", "x*y"]]),
                           npoints=6)
    assert rep.deviation < 1e-10


def test_negative_controls(monkeypatch):
    # a base formula missing the commutator or the matter action must be caught
    patch = build_patch(BASE, "so3")
    case = random_case(np.random.default_rng(5), patch)
    assert run_case(patch, case, 6, 0, invariance=False).deviation < 1e-10
    monkeypatch.setattr(oracle, "covariant_d_algebra0", lambda om, B: exterior_derivative(B))
    rep = run_case(patch, case, 6, 0, invariance=False)
    assert rep.checks["connection"] > 0.01
    monkeypatch.setattr(oracle, "covariant_d_algebra0", covariant_d_algebra0)
    monkeypatch.setattr(oracle, "act", lambda B, phi, rep="fundamental": act(B, phi).scale(0.0))
    rep = run_case(patch, case, 6, 0, invariance=False)
    assert rep.checks["matter"] > 0.01
