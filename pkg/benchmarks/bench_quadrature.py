"""Benchmark the quadrature hot kernels: numba lane vs pure numpy.

Times the three accelerated primitives on realistic node batches and a full
bounded-calculus evaluation, under both lanes.  numba timings exclude the
first (compilation) call.

    python3 benchmarks/bench_quadrature.py --dim 6 --nodes 4096 --repeat 5
"""

import argparse
import time

import numpy as np

from qfine import _accel
from qfine import quaternion as qt
import qfine as qf


def timeit(fn, repeat):
    fn()  # warm-up / JIT compile
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lane(lane, dim, nodes, repeat):
    _accel.set_backend(lane)
    rng = np.random.default_rng(0)
    n = dim
    K = rng.standard_normal((nodes, 4 * n, 4 * n))
    w = rng.standard_normal((nodes, 4))
    X = rng.standard_normal((nodes, n, n))
    Y = rng.standard_normal((nodes, n, n))
    LJ = qt.embed_left(qt.E1)
    a = rng.standard_normal((nodes, 4))
    b = rng.standard_normal((nodes, 4))

    T = qf.random_commuting_tuple(rng, dim)
    f = qf.rational([1.0, 0.5], [qf.spectrum_of(T).bound() + 4.0])

    rows = {
        "qmul_many": timeit(lambda: _accel.qmul_many(a, b), repeat),
        "assemble": timeit(lambda: _accel.assemble_slice_operator(X, Y, LJ), repeat),
        "accum_left": timeit(lambda: _accel.accumulate_embed_left(K, w, n), repeat),
        "accum_right": timeit(lambda: _accel.accumulate_embed_right(w, K, n), repeat),
        "F-calculus": timeit(lambda: qf.calculus_bounded("F", f, T), repeat),
    }
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=6)
    ap.add_argument("--nodes", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    lanes = ["numpy"]
    try:
        import numba  # noqa: F401

        lanes.append("numba")
    except ImportError:
        print("numba not installed; benchmarking numpy lane only")

    results = {lane: bench_lane(lane, args.dim, args.nodes, args.repeat) for lane in lanes}
    names = list(results[lanes[0]])
    width = max(len(s) for s in names)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{l:>10}" for l in lanes)
    if len(lanes) == 2:
        header += f"  {'speedup':>8}"
    print(f"dim={args.dim} nodes={args.nodes} (best of {args.repeat})")
    print(header)
    for name in names:
        line = f"{name:<{width}}  " + "  ".join(
            f"{results[l][name]*1e3:8.2f}ms" for l in lanes
        )
        if len(lanes) == 2:
            line += f"  {results['numpy'][name]/results['numba'][name]:7.2f}x"
        print(line)


if __name__ == "__main__":
    main()
