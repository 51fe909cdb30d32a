"""Compare the compiled and numpy jet kernels.

    python3 benchmarks/bench_jets.py [--rows 2000] [--repeat 5]

Times truncated products and Horner series for a few (variables, order)
pairs, checks that both backends agree, and prints the speedup.
"""

import argparse
import time

import numpy as np

from kosmann import kernels
from kosmann.jets import JetAlgebra

CASES = [(2, 3), (3, 3), (4, 3), (4, 4), (5, 4), (6, 3)]


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(rows: int, repeat: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    results = []
    backends = kernels.available_backends()
    for nvars, order in CASES:
        alg = JetAlgebra(nvars, order)
        a = rng.standard_normal((rows, alg.size))
        b = rng.standard_normal((rows, alg.size))
        delta = b.copy()
        delta[:, 0] = 0.0
        coeffs = rng.standard_normal((order + 1, rows))
        row = {"nvars": nvars, "order": order, "size": alg.size}
        outputs = {}
        for name in backends:
            kernels.use(name)
            outputs[name] = (kernels.mul(a, b, alg), kernels.series(coeffs, delta, alg))
            row[f"mul_{name}"] = _time(lambda: kernels.mul(a, b, alg), repeat)
            row[f"series_{name}"] = _time(lambda: kernels.series(coeffs, delta, alg), repeat)
        if len(outputs) == 2:
            row["max_diff"] = max(float(np.abs(x - y).max())
                                  for x, y in zip(outputs["python"], outputs["compiled"]))
        results.append(row)
    return backends, results


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--rows", type=int, default=2000, help="jets per call")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    initial = kernels.BACKEND
    backends, results = bench(args.rows, args.repeat)
    kernels.use(initial)
    print(f"backends: {', '.join(backends)}; {args.rows} jets per call, best of {args.repeat}, "
          "times in milliseconds")
    head = f"{'vars':>4} {'ord':>3} {'M':>4}  {'mul py':>9} "
    if "compiled" in backends:
        head += f"{'mul cy':>9} {'x':>6}  {'ser py':>9} {'ser cy':>9} {'x':>6}  {'max diff':>8}"
    else:
        head += f"{'ser py':>9}"
    print(head)
    for r in results:
        line = f"{r['nvars']:>4} {r['order']:>3} {r['size']:>4}  {r['mul_python'] * 1e3:9.2f} "
        if "compiled" in backends:
            line += (f"{r['mul_compiled'] * 1e3:9.2f} {r['mul_python'] / r['mul_compiled']:6.1f}  "
                     f"{r['series_python'] * 1e3:9.2f} {r['series_compiled'] * 1e3:9.2f} "
                     f"{r['series_python'] / r['series_compiled']:6.1f}  {r['max_diff']:8.1e}")
        else:
            line += f"{r['series_python'] * 1e3:9.2f}"
        print(line)


if __name__ == "__main__":
    main()
