"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import sys
import timeit

import numpy as np

from fracinv import _kernels_py as py

try:
    from fracinv import _ckernels as cy
except ImportError:
    sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")


def cases(rng):
    for m in (401, 1601):
        col = rng.normal(size=m)
        u = rng.normal(size=m)
        yield f"lag_weights M={m}", lambda mod, m=m: mod.lag_weights(m, 0.3)
        yield f"toeplitz_dense M={m}", lambda mod, col=col: mod.toeplitz_dense(col)
        yield f"toeplitz_matvec M={m}", lambda mod, col=col, u=u: mod.toeplitz_matvec(col, u)
    for n in (3, 5):
        nodes = 1599
        mats = rng.normal(size=(nodes, n, n)) + 3 * np.eye(n)
        rhs = rng.normal(size=(nodes, n))
        yield f"solve_small_batched {nodes}x{n}x{n}", lambda mod, a=mats, b=rhs: mod.solve_small_batched(a, b)
        vals = rng.uniform(-1, 1, size=(nodes, n))
        yield f"vandermonde_products {nodes}x{n}", lambda mod, v=vals: mod.vandermonde_products(v)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None, help="also write the table as JSON")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':<36s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, call in cases(rng):
        t = {}
        for label, mod in (("python", py), ("cython", cy)):
            timer = timeit.Timer(lambda: call(mod))
            loops, _ = timer.autorange()
            t[label] = min(timer.repeat(args.repeat, loops)) / loops * 1e3
        rows.append({"kernel": name, **t, "speedup": t["python"] / t["cython"]})
        print(f"{name:<36s} {t['python']:12.4f} {t['cython']:12.4f} {t['python'] / t['cython']:8.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
