"""Acceptance criteria 1-12, one printed verdict line each.

Thresholds are the fixed acceptance values; fixture-declared tolerances are not
consulted here.  Run with ``pytest tests/test_acceptance.py -v``; the verdict
lines are repeated in the terminal summary.
"""

import time

import numpy as np
import pytest

from kosmann import exprlang
from kosmann.checks import run_check, sub_seed
from kosmann.corpus import (expression_corpus, random_connection, random_coframe, random_gauge,
                            random_vector_field)
from kosmann.covlie import (CovariantizationData, KosmannData, ec_symmetry_residual,
                            gauge_transform, kosmann_condition_residual, kosmann_forms,
                            kosmann_lie_coframe, naive_noncovariance, swap_connection)
from kosmann.frames import (ConnectionForm, Coframe, Signature, gauge_coframe, levi_civita)
from kosmann.geometry import VectorField, interior_product
from kosmann.oracle import build_patch, random_case, run_case
from kosmann.specfile import FIXTURES, load_spec
from kosmann.spinor import build_gamma

from helpers import box_chart, grid_on

SEED = 1729


def _rng(*labels):
    return np.random.default_rng(sub_seed(SEED, *labels))


def _records(spec_name, suite, **kw):
    return run_check(load_spec(spec_name), suite, SEED, **kw).records


def _by_prefix(records, prefix):
    return [r for r in records if r.name.startswith(prefix)]


def _random_frame_case(label, i, order=3, npoints=20, extra=0):
    n = 2 + i % 3
    chart = box_chart(n)
    rng = _rng(label, i)
    sig = Signature.euclidean(n)
    e = Coframe.from_rows(chart, random_coframe(rng, chart, depth=4), sig)
    xi = VectorField.from_strings(chart, random_vector_field(rng, chart, depth=4))
    grid = grid_on(chart, order, npoints, sub_seed(SEED, label, "grid", i), extra)
    return chart, rng, sig, grid, e.sample(grid), xi.sample(grid)


@pytest.fixture(scope="module")
def frame_corpus():
    """100 seeded coframes and vector fields in dimensions 2, 3, 4."""
    out = []
    for i in range(100):
        chart, _, sig, grid, e, xi = _random_frame_case("frames", i)
        out.append((chart.dim, KosmannData(e, sig.eta, grid.points), xi))
    return out


def test_criterion_01_kosmann_condition(frame_corpus, acceptance):
    worst = max(kosmann_condition_residual(kd, xi).max_abs() for _, kd, xi in frame_corpus)
    dims = sorted({d for d, _, _ in frame_corpus})
    ok = worst < 1e-9
    acceptance(1, ok, f"Kosmann defining condition: max residual {worst:.2e} < 1e-9 "
                      f"over {len(frame_corpus)} coframes, dims {dims}")
    assert ok


def test_criterion_02_three_forms(frame_corpus, acceptance):
    pair = 0.0
    anti = 0.0
    for _, kd, xi in frame_corpus:
        forms = list(kosmann_forms(kd, xi).values())
        for a in range(3):
            for b in range(a + 1, 3):
                pair = max(pair, (forms[a] - forms[b]).max_abs())
        low = np.einsum("ab,Zbc->Zac", kd.eta, kd.B(xi).values[..., 0])
        anti = max(anti, float(np.abs(low + np.swapaxes(low, 1, 2)).max()))
    ok = pair < 1e-9 and anti < 1e-10
    acceptance(2, ok, f"three forms agree to {pair:.2e} < 1e-9; "
                      f"lowered B^K antisymmetric to {anti:.2e} < 1e-10")
    assert ok


def test_criterion_03_killing(acceptance):
    problems = []
    agree = 0
    total = 0
    named = {}
    for name in FIXTURES:
        for r in _records(name, "killing"):
            total += 1
            agree += bool(r.detail["verdicts_agree"])
            if not r.detail["verdicts_agree"]:
                problems.append(f"{name}:{r.name} verdicts disagree")
            named[(name, r.name.split(":")[1].split("@")[0])] = r
    for key in (("schwarzschild", "dt"), ("schwarzschild", "dph")):
        r = named[key]
        if not (r.detail["verdict"] == "killing" and r.max_residual < 1e-9):
            problems.append(f"{key}: residual {r.max_residual:.2e}")
    for key in (("flat2d", "dilation"), ("flat4d", "dilation")):
        r = named[key]
        if not (r.detail["verdict"] == "not-killing" and r.max_residual > 0.1):
            problems.append(f"{key}: residual {r.max_residual:.2e}")
    tilt = [r for (f, n), r in named.items() if f == "s2" and n == "tilt"]
    if not tilt or not all(r.detail["verdict"] == "killing" for r in tilt):
        problems.append("S2 tilted rotation not Killing")
    ok = not problems
    sch = max(named[("schwarzschild", k)].max_residual for k in ("dt", "dph"))
    dil = named[("flat2d", "dilation")].max_residual
    acceptance(3, ok, f"Killing verdicts agree {agree}/{total}; Schwarzschild dt, dph "
                      f"{sch:.2e} < 1e-9; flat dilation {dil:.2f} > 0.1; S2 tilt passes"
                      + ("" if ok else f"; {problems}"))
    assert ok


def test_criterion_04_connection_independence(acceptance):
    worst = 0.0
    for i in range(50):
        chart, rng, sig, grid, e, xi = _random_frame_case("swap", i, order=4)
        kd = KosmannData(e, sig.eta, grid.points)
        base = kd.as_pair()
        alpha = ConnectionForm.from_components(
            chart, random_connection(rng, chart, sig.eta), sig).field.sample(grid)
        om_hat = kd.omega + alpha.truncated(kd.omega.order)
        recipe = CovariantizationData.from_pair(
            om_hat, lambda v, a=alpha: kd.lam(v) + interior_product(v, a))
        swapped = swap_connection(base, om_hat)
        for other in (recipe, swapped):
            worst = max(worst, (base.correction(xi) - other.correction(xi)).max_abs())
    ok = worst < 1e-10
    acceptance(4, ok, f"connection swap: correction-term deviation {worst:.2e} < 1e-10 "
                      f"on 50 cases")
    assert ok


def test_criterion_05_covariance(acceptance):
    cov = 0.0
    witness = np.inf
    for i in range(50):
        chart, rng, sig, grid, e, xi = _random_frame_case("gauge", i)
        gamma = random_gauge(rng, chart, sig.eta).jets(grid)
        kd = KosmannData(e, sig.eta, grid.points)
        e2, _ = gauge_transform(gamma, e, sig.eta)
        kd2 = KosmannData(e2, sig.eta, grid.points)
        lhs = kosmann_lie_coframe(kd2, xi)
        rhs = gauge_coframe(gamma, kosmann_lie_coframe(kd, xi), lhs.order)
        cov = max(cov, (lhs - rhs).max_abs())
        # a witness is any field exhibiting the defect: the trial's field or a coordinate field
        probes = [xi] + [VectorField.from_strings(chart, ["1" if j == m else "0"
                                                          for j in range(chart.dim)]).sample(grid)
                         for m in range(chart.dim)]
        witness = min(witness, max(naive_noncovariance(gamma, v, e).max_abs() for v in probes))
    ok = cov < 1e-8 and witness > 0.01
    acceptance(5, ok, f"gauge covariance deviation {cov:.2e} < 1e-8 on 50 gauges; "
                      f"smallest naive witness {witness:.3f} > 0.01")
    assert ok


def test_criterion_06_levi_civita(acceptance):
    tor = metr = bian = 0.0
    curv = None
    for name in FIXTURES:
        recs = _records(name, "torsion")
        assert all("error" not in r.detail for r in recs), recs
        tor = max([tor] + [r.max_residual for r in _by_prefix(recs, "torsion:")])
        metr = max([metr] + [r.max_residual for r in _by_prefix(recs, "metricity:")])
        bian = max([bian] + [r.max_residual for r in _by_prefix(recs, "bianchi:")])
        if name == "s2":
            curv = max(r.max_residual for r in _by_prefix(recs, "curvature:"))
    ok = tor < 1e-10 and metr < 1e-10 and curv is not None and curv < 1e-9 and bian < 1e-8
    acceptance(6, ok, f"torsion {tor:.2e} < 1e-10 (metricity {metr:.2e}) on {len(FIXTURES)} "
                      f"fixtures; S2 curvature {curv:.2e} < 1e-9; Bianchi {bian:.2e} < 1e-8")
    assert ok


def test_criterion_07_oracle(acceptance):
    base = box_chart(2, "base")
    t0 = time.perf_counter()
    worst = {}
    natural = {}
    for group in ("so2", "so3"):
        patch = build_patch(base, group)
        worst[group] = 0.0
        for i in range(20):
            rng = _rng("oracle", group, i)
            case = random_case(rng, patch, natural=(i == 0))
            rep = run_case(patch, case, 20, sub_seed(SEED, "oracle-grid", group, i))
            worst[group] = max(worst[group], rep.deviation)
            if "natural_lift" in rep.checks:
                natural[group] = rep.checks["natural_lift"]
    runtime = time.perf_counter() - t0
    nat = max(natural.values())
    ok = max(worst.values()) < 1e-6 and len(natural) == 2 and nat < 1e-6 and runtime <= 300
    acceptance(7, ok, f"total-space oracle: SO(2) {worst['so2']:.2e}, SO(3) "
                      f"{worst['so3']:.2e} < 1e-6 over 20 cases each; natural lift "
                      f"{nat:.2e} < 1e-6; {runtime:.1f} s <= 300 s")
    assert ok


def test_criterion_08_hopf(acceptance):
    recs = {r.name: r for r in _records("s3_hopf", "kk-reduce")}
    rec = recs["reconstruction"].max_residual
    h = recs["base-metric"].max_residual
    phi = recs["phi"].max_residual
    bk = recs["adapted-gauge"].detail["BK"]
    flux = recs["flux"].detail["flux"][0]
    rel = abs(abs(flux) - 4 * np.pi) / (4 * np.pi)
    ok = rec < 1e-9 and h < 1e-9 and phi < 1e-10 and bk < 1e-8 and rel < 1e-3
    acceptance(8, ok, f"Hopf: reconstruction {rec:.2e}, round S2 (r=1/2) {h:.2e}, "
                      f"Phi=1/2 {phi:.2e}, adapted B^K {bk:.2e}, flux {flux:.6f} "
                      f"(|flux|/4pi - 1 = {rel:.1e})")
    assert ok


def test_criterion_09_product_and_warped(acceptance):
    parts = []
    ok = True
    for name in ("product_s2xs1", "warped"):
        recs = {r.name: r for r in _records(name, "kk-reduce")}
        phi = recs["phi"].max_residual
        ad = recs["adapted-gauge"].detail
        ok = ok and phi < 1e-9 and ad["naive"] < 1e-8 and ad["kosmann"] < 1e-8
        parts.append(f"{name}: Phi {phi:.2e}, naive {ad['naive']:.2e}, "
                     f"Kosmann {ad['kosmann']:.2e}")
    acceptance(9, ok, "; ".join(parts))
    assert ok


def test_criterion_10_spinor(acceptance):
    forms = leib = pin = 0.0
    cliff = 0.0
    for name in FIXTURES:
        spec = load_spec(name)
        cliff = max(cliff, build_gamma(spec.signature).clifford_defect())
        if not spec.spinors:
            continue
        recs = _records(name, "spinor")
        assert all("error" not in r.detail for r in recs), recs
        forms = max([forms] + [r.max_residual for r in _by_prefix(recs, "spinor-forms:")])
        leib = max([leib] + [r.max_residual for r in _by_prefix(recs, "clifford-leibniz:")])
        pin = max([pin] + [r.max_residual for r in _by_prefix(recs, "double-cover-pinning")])
    for p, q in ((2, 0), (3, 0), (4, 0), (1, 1), (1, 3), (3, 1), (2, 2), (5, 0), (6, 0)):
        cliff = max(cliff, build_gamma(Signature(p, q)).clifford_defect())
    ok = forms < 1e-9 and cliff == 0.0 and pin < 1e-8 and leib < 1e-8
    acceptance(10, ok, f"spinor three forms {forms:.2e} < 1e-9; Clifford defect {cliff:g} "
                       f"(exact); pinning {pin:.2e} < 1e-8; Leibniz {leib:.2e} < 1e-8")
    assert ok


def test_criterion_11_einstein_cartan(acceptance):
    worst = {3: 0.0, 4: 0.0}
    for n in (3, 4):
        chart = box_chart(n)
        sig = Signature.euclidean(n)
        for k in range(3):
            rng = _rng("ec", n, k)
            grid = grid_on(chart, 3, 20, sub_seed(SEED, "ec-grid", n, k), extra=1)
            e = Coframe.from_rows(chart, random_coframe(rng, chart, depth=3), sig).sample(grid)
            om = ConnectionForm.from_components(
                chart, random_connection(rng, chart, sig.eta), sig).field.sample(grid)
            xi = VectorField.from_strings(chart, random_vector_field(rng, chart, 3)).sample(grid)
            r, _, _ = ec_symmetry_residual(e, om, xi, sig.eta)
            worst[n] = max(worst[n], float(r.max()))
        grid = grid_on(chart, 4, 20, sub_seed(SEED, "ec-lc", n), extra=1)
        rng = _rng("ec-lc", n)
        e = Coframe.from_rows(chart, random_coframe(rng, chart, depth=3), sig).sample(grid)
        om = levi_civita(e, sig.eta, grid.points)
        xi = VectorField.from_strings(chart, random_vector_field(rng, chart, 3)).sample(grid)
        r, _, _ = ec_symmetry_residual(e, om, xi, sig.eta)
        worst[n] = max(worst[n], float(r.max()))
    for name in ("s3_hopf", "flat4d", "schwarzschild"):
        for rec in _records(name, "ec-symmetry"):
            assert "error" not in rec.detail, rec
            dim = load_spec(name).main_chart.dim
            worst[dim] = max(worst[dim], rec.max_residual)
    ok = max(worst.values()) < 1e-6
    acceptance(11, ok, f"Einstein-Cartan symmetry at 20 points: dim 3 {worst[3]:.2e}, "
                       f"dim 4 {worst[4]:.2e} < 1e-6")
    assert ok


def _fd_gradient(node, coords, p, h=1e-3):
    """Fourth-order central differences."""
    g = np.zeros(len(coords))
    for i, c in enumerate(coords):
        vals = []
        for s in (-2, -1, 1, 2):
            q = dict(zip(coords, p))
            q[c] = p[i] + s * h
            vals.append(float(exprlang.evaluate(node, q)))
        g[i] = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    return g


def test_criterion_12_parser(acceptance):
    coords = ("x", "y", "z")
    corpus = expression_corpus(SEED, 1000, coords)
    rng = _rng("parser-points")
    round_trip = 0
    worst = 0.0
    for text in corpus:
        node = exprlang.parse(text, coords)
        printed = exprlang.to_text(node)
        again = exprlang.parse(printed, coords)
        p = rng.uniform(-0.9, 0.9, 3)
        env = dict(zip(coords, p))
        if again == node and exprlang.to_text(again) == printed and \
                float(exprlang.evaluate(again, env)) == float(exprlang.evaluate(node, env)):
            round_trip += 1
        jet = exprlang.eval_jet(node, env, order=1)
        fd = _fd_gradient(node, coords, p)
        # allowed error: max(1e-7 relative, 1e-9 absolute); ``worst`` is the used fraction
        allowed = np.maximum(1e-7 * np.abs(fd), 1e-9)
        worst = max(worst, float((np.abs(jet.gradient - fd) / allowed).max()))
    ok = round_trip == len(corpus) and worst < 1.0
    acceptance(12, ok, f"parser round-trip {round_trip}/{len(corpus)}; jet gradient vs "
                       f"finite differences uses {worst:.1%} of max(1e-7 rel, 1e-9 abs)")
    assert ok
