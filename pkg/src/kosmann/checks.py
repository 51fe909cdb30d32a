"""Named check suites over a loaded geometry file, with JSON reports."""

from __future__ import annotations

import json
import re
import time
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import exprlang
from .corpus import bounded_smooth, random_connection, random_gauge, random_matter
from .covlie import (CovariantizationData, KosmannData, ec_symmetry_residual, gauge_transform,
                     general_cov_lie_matter_lemma, killing_check, kosmann_condition_residual,
                     kosmann_forms, kosmann_lie_coframe, naive_noncovariance, swap_connection)
from .frames import (ConnectionForm, antisymmetry_defect, covariant_derivative, curvature,
                     gauge_coframe, levi_civita, torsion)
from .geometry import (Form, FormField, GeometryError, Grid, VectorField, interior_product,
                       pullback, pushforward, sample_points, wedge)
from .kk import KKError, adapted_gauge_check, field_strength_flux, reduce
from .oracle import GROUPS, MAX_TOTAL_DIM, build_patch, group_key, random_case, run_case
from .specfile import GeometrySpec
from .spinor import (build_gamma, clifford_multiply, kosmann_lie_spinor,
                     kosmann_lie_spinor_forms, spin_matrix)

__all__ = ["SUITES", "Record", "Report", "run_check", "DEFAULT_TOLERANCES", "sub_seed"]

SUITES = ("killing", "kosmann-equivalence", "covariance", "noncovariance-witness",
          "connection-independence", "torsion", "ec-symmetry", "spinor", "oracle", "kk-reduce")

# upper bounds unless noted
DEFAULT_TOLERANCES = {
    "killing": 1e-9,            # residual of a declared Killing field
    "killing_verdict": 1e-7,    # threshold separating the two verdicts
    "non_killing": 0.1,         # lower bound for a declared non-Killing field
    "kosmann_equivalence": 1e-9,
    "antisymmetry": 1e-10,
    "kosmann_condition": 1e-9,
    "covariance": 1e-8,
    "patching": 1e-9,
    "witness": 0.01,            # lower bound
    "connection_independence": 1e-10,
    "lemma_matter": 1e-9,
    "torsion": 1e-10,
    "curvature": 1e-9,
    "bianchi": 1e-8,
    "ec_symmetry": 1e-6,
    "spinor": 1e-9,
    "clifford": 1e-12,
    "pinning": 1e-8,
    "leibniz": 1e-8,
    "oracle": 1e-6,
    "reconstruction": 1e-9,
    "phi": 1e-10,
    "h": 1e-9,
    "adapted": 1e-8,
    "flux": 1e-3,               # relative
}
_LOWER = {"witness", "non_killing"}


def sub_seed(seed: int, *labels) -> int:
    """Deterministic per-check seed derived from the run seed and labels."""
    key = zlib.crc32("/".join(map(str, labels)).encode())
    return int(np.random.SeedSequence([seed & (2 ** 64 - 1), key]).generate_state(1)[0])


@dataclass
class Record:
    name: str
    anchor: str
    passed: bool
    max_residual: float
    threshold: float
    worst_point: list | None = None
    runtime: float = 0.0
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "passed": bool(self.passed),
                "max_residual": float(self.max_residual), "threshold": float(self.threshold),
                "worst_point": self.worst_point, "runtime": round(self.runtime, 6),
                "detail": self.detail}


@dataclass
class Report:
    spec: str
    suite: str
    seed: int
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def as_dict(self) -> dict:
        return {"spec": self.spec, "suite": self.suite, "seed": self.seed,
                "passed": self.passed,
                "summary": {"total": len(self.records),
                            "failed": sum(not r.passed for r in self.records)},
                "records": [r.as_dict() for r in self.records]}

    def to_json(self, runtime: bool = True) -> str:
        d = self.as_dict()
        if not runtime:
            for r in d["records"]:
                r.pop("runtime")
        return dumps(d)


_FLOAT = "\x00f"


def _mark(obj):
    if isinstance(obj, dict):
        return {str(k): _mark(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_mark(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            return str(v)
        return _FLOAT + format(v, ".17g")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _mark(obj.tolist())
    return obj


def dumps(obj) -> str:
    """JSON with insertion key order and floats printed with 17 significant digits."""
    text = json.dumps(_mark(obj), indent=2, ensure_ascii=False)
    return re.sub(r'"\\u0000f([^"]*)"', r"\1", text)


class _Ctx:
    def __init__(self, spec: GeometrySpec, seed: int, tol: float | None, npoints: int):
        self.spec = spec
        self.seed = seed
        self.override = tol
        self.npoints = npoints

    def tol(self, key: str) -> float:
        if self.override is not None and key not in _LOWER:
            return float(self.override)
        return self.spec.tol(key, DEFAULT_TOLERANCES[key])

    def rng(self, *labels) -> np.random.Generator:
        return np.random.default_rng(sub_seed(self.seed, *labels))

    def grid(self, chart, order=3, extra=0, label="", box=None) -> Grid:
        pts = sample_points(chart.box if box is None else box, self.npoints,
                            sub_seed(self.seed, "grid", chart.name, label))
        return Grid(chart, pts, order, extra)

    def coframe_charts(self):
        cf = self.spec.coframe
        if cf is None:
            return []
        return [self.spec.charts[c] for c in cf.field.components]

    def fields_on(self, chart, random_count: int = 1):
        """Declared vector fields on ``chart`` plus seeded random ones."""
        out = [(name, VectorField({chart.name: vf.components[chart.name]}))
               for name, vf in self.spec.vectorfields.items() if chart.name in vf.components]
        rng = self.rng("vf", chart.name)
        for i in range(random_count):
            comps = [bounded_smooth(rng, chart, 3) for _ in range(chart.dim)]
            out.append((f"random{i}", VectorField.from_strings(chart, comps)))
        return out


def _point(grid: Grid, idx: int) -> list:
    return [float(x) for x in grid.points[idx]]


def _worst(arr: np.ndarray) -> tuple:
    """Max of ``|arr|`` over everything and the point index (axis 0) where it occurs."""
    a = np.abs(np.asarray(arr)).reshape(len(arr), -1)
    if a.size == 0:
        return 0.0, 0
    per = a.max(axis=1)
    i = int(np.argmax(per))
    return float(per[i]), i


def _record(name, anchor, value, threshold, grid=None, idx=0, lower=False, t0=None, **detail):
    passed = bool(value > threshold) if lower else bool(value <= threshold)
    wp = _point(grid, idx) if grid is not None else None
    rt = time.perf_counter() - t0 if t0 is not None else 0.0
    return Record(name, anchor, passed, float(value), float(threshold), wp, rt, detail)


def _error_record(name, anchor, exc, t0):
    return Record(name, anchor, False, float("inf"), 0.0, None, time.perf_counter() - t0,
                  {"error": f"{type(exc).__name__}: {exc}"})


def _sampled_coframe(ctx: _Ctx, chart, grid) -> Form:
    return ctx.spec.coframe.field.sample(grid, chart.name)


# --------------------------------------------------------------------------
# suites

def suite_killing(ctx: _Ctx):
    expected = ctx.spec.expect.get("killing", {})
    for chart in ctx.coframe_charts():
        grid = ctx.grid(chart)
        kd = KosmannData(_sampled_coframe(ctx, chart, grid), ctx.spec.eta, grid.points)
        for name, vf in ctx.fields_on(chart, 0):
            t0 = time.perf_counter()
            v = killing_check(kd, vf.sample(grid), ctx.tol("killing_verdict"))
            exp = expected.get(name)
            ok = v.agree and (exp is None or bool(exp) == v.killing)
            thr = ctx.tol("killing") if v.killing else ctx.tol("non_killing")
            if exp is True:
                ok = ok and v.residual <= ctx.tol("killing")
            if exp is False:
                ok = ok and v.residual > ctx.tol("non_killing")
            yield Record(f"killing:{name}@{chart.name}", "kosmann/killing-equivalence", ok,
                         v.residual, thr, _point(grid, v.worst_point), time.perf_counter() - t0,
                         {"verdict": "killing" if v.killing else "not-killing",
                          "expected": None if exp is None else
                          ("killing" if exp else "not-killing"),
                          "metric_residual": v.metric_residual, "verdicts_agree": v.agree})


def suite_kosmann_equivalence(ctx: _Ctx):
    eta = ctx.spec.eta
    for chart in ctx.coframe_charts():
        grid = ctx.grid(chart)
        kd = KosmannData(_sampled_coframe(ctx, chart, grid), eta, grid.points)
        for name, vf in ctx.fields_on(chart, 2):
            t0 = time.perf_counter()
            xi = vf.sample(grid)
            forms = kosmann_forms(kd, xi)
            keys = list(forms)
            dev = np.zeros(grid.npoints)
            for i in range(3):
                for j in range(i + 1, 3):
                    d = np.abs((forms[keys[i]] - forms[keys[j]]).values).reshape(grid.npoints, -1)
                    dev = np.maximum(dev, d.max(axis=1))
            val, idx = _worst(dev)
            yield _record(f"three-forms:{name}@{chart.name}", "kosmann/three-forms", val,
                          ctx.tol("kosmann_equivalence"), grid, idx, t0=t0)
            t0 = time.perf_counter()
            B = kd.B(xi).values[..., 0]
            low = np.einsum("ab,Zbc->Zac", eta, B)
            val, idx = _worst(low + np.swapaxes(low, 1, 2))
            yield _record(f"BK-antisymmetry:{name}@{chart.name}", "kosmann/correction",
                          val, ctx.tol("antisymmetry"), grid, idx, t0=t0)
            t0 = time.perf_counter()
            res = kosmann_condition_residual(kd, xi).values
            val, idx = _worst(res)
            yield _record(f"kosmann-condition:{name}@{chart.name}", "kosmann/defining-condition",
                          val, ctx.tol("kosmann_condition"), grid, idx, t0=t0)


def suite_covariance(ctx: _Ctx):
    eta = ctx.spec.eta
    for chart in ctx.coframe_charts():
        grid = ctx.grid(chart)
        e = _sampled_coframe(ctx, chart, grid)
        kd = KosmannData(e, eta, grid.points)
        rng = ctx.rng("gauge", chart.name)
        for k in range(5):
            t0 = time.perf_counter()
            gamma = random_gauge(rng, chart, eta).jets(grid)
            e2, _ = gauge_transform(gamma, e, eta)
            kd2 = KosmannData(e2, eta, grid.points)
            dev = np.zeros(grid.npoints)
            for name, vf in ctx.fields_on(chart, 1):
                xi = vf.sample(grid)
                lhs = kosmann_lie_coframe(kd2, xi)
                rhs = gauge_coframe(gamma, kosmann_lie_coframe(kd, xi), lhs.order)
                d = np.abs((lhs - rhs).values).reshape(grid.npoints, -1).max(axis=1)
                dev = np.maximum(dev, d)
            val, idx = _worst(dev)
            yield _record(f"gauge-covariance:{chart.name}#{k}", "kosmann/gauge-covariance", val,
                          ctx.tol("covariance"), grid, idx, t0=t0)
    yield from _overlap_records(ctx)


def _overlap_records(ctx: _Ctx):
    spec, eta = ctx.spec, ctx.spec.eta
    cf = spec.coframe
    for gname, ov in spec.gauges.items():
        if cf is None or ov.gauge is None:
            continue
        if ov.src.name not in cf.field.components or ov.dst.name not in cf.field.components:
            continue
        t0 = time.perf_counter()
        grid = ctx.grid(ov.src, 3, label=gname, box=ov.box)
        y = ov.map_jets(grid)
        e_src = cf.field.sample(grid, ov.src.name)
        e_dst = pullback(y, cf.field, grid, ov.dst)
        gamma = ov.gauge.sample(grid)
        orth = ov.gauge.check(eta, grid)
        patch = e_dst - gauge_coframe(gamma, e_src, e_dst.order)
        val, idx = _worst(patch.values)
        yield _record(f"patching:{gname}", "atlas/coframe-patching", max(val, orth),
                      ctx.tol("patching"), grid, idx, t0=t0, orthogonality=orth)
        kd_src = KosmannData(e_src, eta, grid.points)
        kd_dst = KosmannData(e_dst, eta, grid.points)
        for name, vf in spec.vectorfields.items():
            if ov.src.name not in vf.components:
                continue
            t0 = time.perf_counter()
            xi = VectorField({ov.src.name: vf.components[ov.src.name]}).sample(grid)
            lhs = kosmann_lie_coframe(kd_dst, xi)
            rhs = gauge_coframe(gamma, kosmann_lie_coframe(kd_src, xi), lhs.order)
            val, idx = _worst((lhs - rhs).values)
            consistency = 0.0
            if ov.dst.name in vf.components:
                pushed = pushforward(y, xi).values
                env = {c: y[:, i, 0] for i, c in enumerate(ov.dst.coords)}
                target = np.stack([np.broadcast_to(
                    np.asarray(exprlang.evaluate(e, env), dtype=float), (grid.npoints,))
                    for e in vf.components[ov.dst.name]], axis=1)
                consistency = float(np.abs(pushed - target).max())
            yield _record(f"overlap-covariance:{name}@{gname}", "kosmann/gauge-covariance",
                          max(val, consistency), ctx.tol("covariance"), grid, idx, t0=t0,
                          field_consistency=consistency)


def suite_noncovariance_witness(ctx: _Ctx):
    eta = ctx.spec.eta
    for chart in ctx.coframe_charts():
        grid = ctx.grid(chart)
        e = _sampled_coframe(ctx, chart, grid)
        rng = ctx.rng("witness", chart.name)
        for k in range(5):
            t0 = time.perf_counter()
            gamma = random_gauge(rng, chart, eta).jets(grid)
            best = 0.0
            idx = 0
            for name, vf in ctx.fields_on(chart, 1):
                dev = naive_noncovariance(gamma, vf.sample(grid), e)
                v, i = _worst(dev.values)
                if v > best:
                    best, idx = v, i
            yield _record(f"witness:{chart.name}#{k}", "naive/noncovariance", best,
                          ctx.tol("witness"), grid, idx, lower=True, t0=t0)


def suite_connection_independence(ctx: _Ctx):
    eta = ctx.spec.eta
    sig = ctx.spec.signature
    for chart in ctx.coframe_charts():
        grid = ctx.grid(chart, 4)
        e = _sampled_coframe(ctx, chart, grid)
        kd = KosmannData(e, eta, grid.points)
        base = kd.as_pair()
        rng = ctx.rng("swap", chart.name)
        fields = ctx.fields_on(chart, 1)
        for k in range(5):
            t0 = time.perf_counter()
            alpha = ConnectionForm.from_components(
                chart, random_connection(rng, chart, eta), sig).field.sample(grid)
            om_hat = kd.omega + alpha.truncated(kd.omega.order)
            # recipe: lambda^ = lambda^K + i_xi (omega^ - omega)
            recipe = CovariantizationData.from_pair(
                om_hat, lambda xi, a=alpha: kd.lam(xi) + interior_product(xi, a))
            swapped = swap_connection(base, om_hat)
            phi0 = FormField.one_forms(chart, random_matter(rng, chart, sig.dim)).sample(grid)
            dev_b = np.zeros(grid.npoints)
            dev_m = np.zeros(grid.npoints)
            for name, vf in fields:
                xi = vf.sample(grid)
                for other in (recipe, swapped):
                    d = np.abs((base.correction(xi) - other.correction(xi)).values)
                    dev_b = np.maximum(dev_b, d.reshape(grid.npoints, -1).max(axis=1))
                m0 = general_cov_lie_matter_lemma(base, xi, phi0)
                m1 = general_cov_lie_matter_lemma(recipe, xi, phi0)
                d = np.abs((m0 - m1).values).reshape(grid.npoints, -1).max(axis=1)
                dev_m = np.maximum(dev_m, d)
            val, idx = _worst(dev_b)
            yield _record(f"correction-term:{chart.name}#{k}", "covlie/connection-independence",
                          val, ctx.tol("connection_independence"), grid, idx, t0=t0)
            val, idx = _worst(dev_m)
            yield _record(f"lemma-matter:{chart.name}#{k}", "covlie/connection-independence",
                          val, ctx.tol("lemma_matter"), grid, idx, t0=t0)


def suite_torsion(ctx: _Ctx):
    eta = ctx.spec.eta
    K = ctx.spec.expect.get("curvature")
    for chart in ctx.coframe_charts():
        t0 = time.perf_counter()
        grid = ctx.grid(chart, 3)
        e = _sampled_coframe(ctx, chart, grid)
        om = levi_civita(e, eta, grid.points)
        val, idx = _worst(torsion(e, om).values)
        yield _record(f"torsion:{chart.name}", "frames/levi-civita", val, ctx.tol("torsion"),
                      grid, idx, t0=t0)
        t0 = time.perf_counter()
        val = antisymmetry_defect(om, eta)
        yield _record(f"metricity:{chart.name}", "frames/levi-civita", val,
                      ctx.tol("torsion"), t0=t0)
        t0 = time.perf_counter()
        F = curvature(om)
        val, idx = _worst(covariant_derivative(om, F, "adjoint").values)
        yield _record(f"bianchi:{chart.name}", "frames/curvature", val, ctx.tol("bianchi"),
                      grid, idx, t0=t0)
        if K is not None and chart.dim == 2:
            t0 = time.perf_counter()
            area = wedge(e.component(0), e.component(1)).values[:, 0]
            F12 = F.values[:, 0, 1, 0]
            val, idx = min((_worst(F12 - s * float(K) * area) for s in (1.0, -1.0)),
                           key=lambda t: t[0])
            yield _record(f"curvature:{chart.name}", "frames/curvature", val,
                          ctx.tol("curvature"), grid, idx, t0=t0, expected=float(K))


def suite_ec_symmetry(ctx: _Ctx):
    eta = ctx.spec.eta
    sig = ctx.spec.signature
    for chart in ctx.coframe_charts():
        if chart.dim < 3:
            yield Record(f"ec-symmetry:{chart.name}", "frames/einstein-cartan", True, 0.0,
                         ctx.tol("ec_symmetry"), None, 0.0,
                         {"skipped": "the Einstein-Cartan density needs dimension >= 3"})
            continue
        rng = ctx.rng("ec", chart.name)
        fields = ctx.fields_on(chart, 1)
        # off-shell: a seeded random connection
        t0 = time.perf_counter()
        grid = ctx.grid(chart, 3, extra=1)
        e = _sampled_coframe(ctx, chart, grid)
        om = ConnectionForm.from_components(chart, random_connection(rng, chart, eta),
                                            sig).field.sample(grid)
        dev = np.zeros(grid.npoints)
        for name, vf in fields:
            r, _, _ = ec_symmetry_residual(e, om, vf.sample(grid), eta)
            dev = np.maximum(dev, r)
        val, idx = _worst(dev)
        yield _record(f"ec-symmetry:random-connection@{chart.name}", "frames/einstein-cartan",
                      val, ctx.tol("ec_symmetry"), grid, idx, t0=t0)
        # on the Levi-Civita connection of the declared coframe
        t0 = time.perf_counter()
        grid = ctx.grid(chart, 4, extra=1)
        e = _sampled_coframe(ctx, chart, grid)
        om = levi_civita(e, eta, grid.points)
        dev = np.zeros(grid.npoints)
        for name, vf in fields:
            r, _, _ = ec_symmetry_residual(e, om, vf.sample(grid), eta)
            dev = np.maximum(dev, r)
        val, idx = _worst(dev)
        yield _record(f"ec-symmetry:levi-civita@{chart.name}", "frames/einstein-cartan",
                      val, ctx.tol("ec_symmetry"), grid, idx, t0=t0)


def suite_spinor(ctx: _Ctx):
    spec = ctx.spec
    eta = spec.eta
    t0 = time.perf_counter()
    rep = build_gamma(spec.signature)
    yield _record("clifford-relations", "spinor/gamma", rep.clifford_defect(),
                  ctx.tol("clifford"), t0=t0, spinor_dim=rep.spinor_dim)
    t0 = time.perf_counter()
    yield _record("double-cover-pinning", "spinor/exponentiation",
                  pinning_residual(rep, ctx.rng("pin")), ctx.tol("pinning"), t0=t0)
    for sname, sf in spec.spinors.items():
        for chart in ctx.coframe_charts():
            if chart.name not in sf.components:
                continue
            grid = ctx.grid(chart, 3)
            e = _sampled_coframe(ctx, chart, grid)
            kd = KosmannData(e, eta, grid.points)
            psi = sf.sample(grid)
            if psi.c.shape[1] != rep.spinor_dim:
                raise GeometryError(f"spinor {sname!r} has {psi.c.shape[1]} components, "
                                    f"expected {rep.spinor_dim}")
            for name, vf in ctx.fields_on(chart, 1):
                t0 = time.perf_counter()
                xi = vf.sample(grid)
                forms = kosmann_lie_spinor_forms(kd, xi, psi, rep)
                keys = list(forms)
                dev = np.zeros(grid.npoints)
                for i in range(len(keys)):
                    for j in range(i + 1, len(keys)):
                        d = np.abs((forms[keys[i]] - forms[keys[j]]).values)
                        dev = np.maximum(dev, d.reshape(grid.npoints, -1).max(axis=1))
                val, idx = _worst(dev)
                yield _record(f"spinor-forms:{sname}:{name}@{chart.name}", "spinor/kosmann",
                              val, ctx.tol("spinor"), grid, idx, t0=t0)
                t0 = time.perf_counter()
                lhs = kosmann_lie_spinor(kd, xi, clifford_multiply(e, psi, rep), rep)
                rhs = clifford_multiply(kosmann_lie_coframe(kd, xi), psi, rep) + \
                    clifford_multiply(e, kosmann_lie_spinor(kd, xi, psi, rep), rep)
                val, idx = _worst((lhs - rhs).values)
                yield _record(f"clifford-leibniz:{sname}:{name}@{chart.name}", "spinor/kosmann",
                              val, ctx.tol("leibniz"), grid, idx, t0=t0)


def pinning_residual(rep, rng: np.random.Generator, trials: int = 5) -> float:
    """``exp(rho(lam)) Gamma^c exp(-rho(lam)) = exp(-lam)^c_b Gamma^b`` for random
    constant ``lam``, plus ``exp(rho(2 pi J)) = -1`` for unit rotation generators."""
    eta = rep.signature.eta
    n = rep.dim
    worst = 0.0
    for _ in range(trials):
        A = rng.standard_normal((n, n))
        low = 0.5 * (A - A.T)
        lam = np.linalg.inv(eta) @ low
        S = expm(spin_matrix(lam, rep))
        Si = expm(-spin_matrix(lam, rep))
        lhs = np.einsum("ij,cjk,kl->cil", S, rep.gammas, Si)
        rhs = np.einsum("cb,bij->cij", expm(-lam), rep.gammas)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    for i in range(n):
        for j in range(i + 1, n):
            if eta[i, i] * eta[j, j] < 0:
                continue
            low = np.zeros((n, n))
            low[i, j], low[j, i] = 1.0, -1.0
            J = np.linalg.inv(eta) @ low
            rot = expm(2 * np.pi * J)
            S = expm(2 * np.pi * spin_matrix(J, rep))
            worst = max(worst, float(np.abs(rot - np.eye(n)).max()),
                        float(np.abs(S + np.eye(rep.spinor_dim)).max()))
    return worst


def suite_oracle(ctx: _Ctx, groups=None, cases: int = 3):
    chart = ctx.spec.main_chart
    names = groups or ctx.spec.expect.get("oracle_groups") or ["so2", "so3"]
    for g in names:
        k = len(GROUPS[group_key(g)][0])
        if chart.dim + k > MAX_TOTAL_DIM:
            yield Record(f"oracle:{g}", "oracle/total-space", True, 0.0, ctx.tol("oracle"),
                         None, 0.0, {"skipped": f"total dimension {chart.dim + k} exceeds "
                                                f"{MAX_TOTAL_DIM}"})
            continue
        patch = build_patch(chart, g)
        for i in range(cases):
            t0 = time.perf_counter()
            rng = ctx.rng("oracle", g, i)
            case = random_case(rng, patch, natural=(i == 0))
            rep = run_case(patch, case, ctx.npoints, sub_seed(ctx.seed, "oracle-grid", g, i))
            fails = rep.failures(ctx.tol("oracle"))
            worst_key = max(rep.checks, key=lambda key: rep.checks[key])
            yield Record(f"oracle:{g}#{i}", "oracle/total-space", not fails, rep.deviation,
                         ctx.tol("oracle"), rep.worst.get("connection"),
                         time.perf_counter() - t0,
                         {"checks": rep.checks, "failed": sorted(fails),
                          "largest": worst_key, "natural_lift": i == 0})


def suite_kk_reduce(ctx: _Ctx):
    setup = ctx.spec.kk
    if setup is None:
        yield Record("kk-reduce", "kk/reduction", True, 0.0, 0.0, None, 0.0,
                     {"skipped": "no [kk] block"})
        return
    exp = ctx.spec.expect
    chart = setup.chart
    t0 = time.perf_counter()
    grid = ctx.grid(chart, 3, label="kk")
    try:
        red = reduce(setup, grid)
    except KKError as exc:
        yield _error_record("kk-reduce", "kk/reduction", exc, t0)
        return
    dg = red.diagnostics
    yield _record("reconstruction", "kk/reduction", dg["reconstruction"],
                  ctx.tol("reconstruction"), t0=t0)
    Phi = red.Phi[..., 0]
    if "phi" in exp:
        t0 = time.perf_counter()
        target = _expected_matrix(exp["phi"], chart, grid, Phi.shape[1:])
        val, idx = _worst(Phi - target)
        yield _record("phi", "kk/dilaton", val, ctx.tol("phi"), grid, idx, t0=t0,
                      phi_range=[float(Phi.min()), float(Phi.max())])
    if "h" in exp:
        t0 = time.perf_counter()
        target = _expected_matrix(exp["h"], chart, grid, red.h.values.shape[1:])
        val, idx = _worst(red.h.values - target)
        yield _record("base-metric", "kk/reduction", val, ctx.tol("h"), grid, idx, t0=t0)
    t0 = time.perf_counter()
    A = setup.sample_fundamental(grid)
    chk = adapted_gauge_check(red.e, red.eta, A, ctx.tol("adapted"), grid.points)
    yield _record("adapted-gauge", "kk/adapted-gauge", max(chk["BK"], chk["naive"], chk["kosmann"]),
                  ctx.tol("adapted"), t0=t0, BK=chk["BK"], naive=chk["naive"],
                  kosmann=chk["kosmann"], coframe_naive=dg.get("coframe_naive"),
                  phi_invariance=dg["phi_invariance"])
    if "flux" in exp:
        t0 = time.perf_counter()
        flux = field_strength_flux(setup)
        target = np.asarray(exp["flux"], dtype=float)
        # relative to the expected value (absolute for an expected zero)
        rel = float(np.max(np.abs(flux - target) / np.where(target != 0, np.abs(target), 1.0)))
        yield _record("flux", "kk/field-strength", rel, ctx.tol("flux"), t0=t0,
                      flux=[float(f) for f in flux], expected=target.tolist())


def _expected_matrix(value, chart, grid: Grid, shape):
    arr = np.asarray(value, dtype=object)
    if arr.shape == ():
        # a scalar stands for that multiple of the identity
        arr = np.full(shape, "0", dtype=object)
        for i in range(min(shape)):
            arr[(i,) * len(shape)] = value
    else:
        arr = arr.reshape(shape)
    out = np.zeros((grid.npoints,) + tuple(shape))
    env = {c: grid.points[:, i] for i, c in enumerate(chart.coords)}
    for idx in np.ndindex(*shape):
        e = chart.parse(arr[idx])
        out[(slice(None),) + idx] = np.broadcast_to(
            np.asarray(exprlang.evaluate(e, env), dtype=float), (grid.npoints,))
    return out


_DISPATCH = {
    "killing": suite_killing,
    "kosmann-equivalence": suite_kosmann_equivalence,
    "covariance": suite_covariance,
    "noncovariance-witness": suite_noncovariance_witness,
    "connection-independence": suite_connection_independence,
    "torsion": suite_torsion,
    "ec-symmetry": suite_ec_symmetry,
    "spinor": suite_spinor,
    "oracle": suite_oracle,
    "kk-reduce": suite_kk_reduce,
}


def run_check(spec: GeometrySpec, name: str, seed: int = 0, tol: float | None = None,
              npoints: int = 20, **options) -> Report:
    """Run one suite (or ``"all"``) and collect the records."""
    if name != "all" and name not in _DISPATCH:
        raise KeyError(f"unknown check {name!r}; choose from {', '.join(SUITES + ('all',))}")
    ctx = _Ctx(spec, seed, tol, npoints)
    report = Report(spec.name, name, seed)
    names = SUITES if name == "all" else (name,)
    for n in names:
        fn = _DISPATCH[n]
        t0 = time.perf_counter()
        try:
            gen = fn(ctx, **options) if n == "oracle" else fn(ctx)
            for rec in gen:
                report.records.append(rec)
        except (GeometryError, exprlang.ExpressionError) as exc:
            report.records.append(_error_record(n, "error", exc, t0))
    return report
