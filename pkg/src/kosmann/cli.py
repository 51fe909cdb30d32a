"""Command line entry point.

    kosmann check <spec> --suite <name> [--seed N] [--tol T] [--out report.json]
    kosmann reduce <spec> [--out fields.json]
    kosmann oracle <spec> --group so2|so11|so3 [--cases N] [--out report.json]

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid spec or
arguments, 3 internal error.  ``KOSMANN_SEED`` supplies the seed when
``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import traceback

import numpy as np

from .checks import SUITES, Record, Report, dumps, run_check, sub_seed
from .geometry import GeometryError, sample_points, Grid
from .kk import KKError, field_strength_flux, reduce
from .oracle import build_patch, random_case, run_case
from .specfile import SpecError, load_spec

log = logging.getLogger("kosmann")

EXIT_OK, EXIT_FAIL, EXIT_SPEC, EXIT_INTERNAL = 0, 1, 2, 3


def _seed(value) -> int:
    s = int(value, 0) if isinstance(value, str) else int(value)
    if not 0 <= s < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return s


def _default_seed() -> int:
    env = os.environ.get("KOSMANN_SEED")
    if env is None:
        return 0
    try:
        return _seed(env)
    except (ValueError, argparse.ArgumentTypeError):
        raise SpecError([(None, f"KOSMANN_SEED={env!r} is not an unsigned 64-bit integer")])


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _summary(report: Report) -> None:
    for r in report.records:
        if not r.passed:
            log.warning("FAIL %s: residual %.3g (threshold %.3g) %s", r.name, r.max_residual,
                        r.threshold, r.detail.get("error", ""))
    failed = sum(not r.passed for r in report.records)
    log.info("%s/%s: %d checks, %d failed", report.spec, report.suite, len(report.records),
             failed)


def cmd_check(args) -> int:
    spec = load_spec(args.spec)
    seed = _default_seed() if args.seed is None else args.seed
    report = run_check(spec, args.suite, seed, args.tol, args.npoints)
    _emit(report.to_json(runtime=not args.no_runtime), args.out)
    _summary(report)
    return report.exit_code


def cmd_reduce(args) -> int:
    spec = load_spec(args.spec)
    if spec.kk is None:
        raise SpecError([(None, "the geometry file has no [kk] block")], spec.path)
    seed = _default_seed() if args.seed is None else args.seed
    setup = spec.kk
    pts = sample_points(setup.chart.box, args.npoints, sub_seed(seed, "grid", setup.chart.name, "kk"))
    grid = Grid(setup.chart, pts, 3)
    try:
        red = reduce(setup, grid)
    except KKError as exc:
        rec = Record("kk-reduce", "kk/reduction", False, float("inf"), 0.0,
                     detail={"error": str(exc)})
        rep = Report(spec.name, "reduce", seed, [rec])
        _emit(rep.to_json(), args.out)
        _summary(rep)
        return EXIT_FAIL
    out = {
        "spec": spec.name,
        "seed": seed,
        "coords": list(setup.chart.coords),
        "base_coords": list(setup.base_coords),
        "points": pts,
        "Phi": red.Phi[..., 0],
        "kk_connection": red.theta.values,
        "vertical_metric": red.gV[..., 0],
        "base_metric": red.h.values,
        "coframe": red.e.values,
        "eta": np.diag(red.eta),
        "diagnostics": red.diagnostics,
    }
    if setup.quadrature_box is not None and len(setup.base_coords) == 2:
        flux = field_strength_flux(setup)
        out["flux"] = flux
        if setup.fiber_periods:
            out["flux_over_period"] = flux / np.asarray(setup.fiber_periods)
    _emit(dumps(out), args.out)
    phi = red.Phi[..., 0]
    log.info("%s: Phi in [%.17g, %.17g], reconstruction residual %.3g", spec.name,
             phi.min(), phi.max(), red.diagnostics["reconstruction"])
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = load_spec(args.spec)
    seed = _default_seed() if args.seed is None else args.seed
    chart = spec.main_chart
    patch = build_patch(chart, args.group)
    report = Report(spec.name, f"oracle-{args.group}", seed)
    for i in range(args.cases):
        t0 = time.perf_counter()
        rng = np.random.default_rng(sub_seed(seed, "oracle", args.group, i))
        case = random_case(rng, patch, natural=(i == 0))
        rep = run_case(patch, case, args.npoints, sub_seed(seed, "oracle-grid", args.group, i))
        fails = rep.failures(args.tol)
        thr = 1e-6 if args.tol is None else args.tol
        report.records.append(Record(
            f"oracle:{args.group}#{i}", "oracle/total-space", not fails, rep.deviation, thr,
            rep.worst.get("connection"), time.perf_counter() - t0,
            {"checks": rep.checks, "failed": sorted(fails), "natural_lift": i == 0}))
    _emit(report.to_json(runtime=not args.no_runtime), args.out)
    _summary(report)
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kosmann", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("spec", help="path to a .geo file or the name of a bundled fixture")
        sp.add_argument("--seed", type=_seed, default=None,
                        help="64-bit seed (default: $KOSMANN_SEED or 0)")
        sp.add_argument("--npoints", type=int, default=20, help="sample points per grid")
        sp.add_argument("--out", default=None, help="write JSON here instead of stdout")

    c = sub.add_parser("check", help="run a named check suite")
    common(c)
    c.add_argument("--suite", required=True, choices=SUITES + ("all",))
    c.add_argument("--tol", type=float, default=None, help="override every upper threshold")
    c.add_argument("--no-runtime", action="store_true", help="omit runtime fields")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("reduce", help="Kaluza-Klein reduction of the [kk] block")
    common(r)
    r.set_defaults(func=cmd_reduce)

    o = sub.add_parser("oracle", help="total-space oracle over the first chart")
    common(o)
    o.add_argument("--group", required=True, choices=("so2", "so11", "so3"))
    o.add_argument("--cases", type=int, default=20)
    o.add_argument("--tol", type=float, default=None)
    o.add_argument("--no-runtime", action="store_true")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except FileNotFoundError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except GeometryError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
