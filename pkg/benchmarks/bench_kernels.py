"""Wall-clock comparison of the numba kernels against the numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--sides 10,20] [--sweeps 20] [--repeat 3]

Both backends are importable in one process, so the switch is made per call
rather than through PSOS_NO_NUMBA. The first numba call of each kernel is
run once untimed to keep compilation out of the numbers.
"""
import argparse
import time

import numpy as np

from psos._accel import HAVE_NUMBA
from psos.model import augment_with_diagonals, gen_spinglass, triangle_covering
from psos.oracle import exhaustive_map
from psos.sdp import SolverConfig, partial_sos


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_sweeps(side, sweeps, repeat):
    m = augment_with_diagonals(gen_spinglass(side, 1, 0), side)
    cov = triangle_covering(side)
    rows = []
    for use_numba in (True, False):
        cfg = SolverConfig(max_sweeps=sweeps, tol=1e-300, use_numba=use_numba)
        if use_numba:
            partial_sos(m, cov, SolverConfig(max_sweeps=1, use_numba=True))
        t, res = best_of(lambda: partial_sos(m, cov, cfg), repeat)
        rows.append((use_numba, t / res.sweeps, res.state.vectors))
    # rounding differences compound over sweeps, so report the gap instead of a flag
    gap = float(np.abs(rows[0][2] - rows[1][2]).max())
    return rows[0][1], rows[1][1], gap


def bench_exhaustive(side, repeat):
    m = gen_spinglass(side, 1, 0)
    exhaustive_map(gen_spinglass(2, 1, 0), use_numba=True)
    tn, (_, vn) = best_of(lambda: exhaustive_map(m, use_numba=True), repeat)
    tp, (_, vp) = best_of(lambda: exhaustive_map(m, use_numba=False), repeat)
    return tn, tp, abs(vn - vp)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sides", default="10,20", help="grid sides for the sweep benchmark")
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--exhaustive-side", type=int, default=4, help="grid side for exhaustive search (n = side^2)")
    a = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':<24}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}{'max gap':>12}")
    for side in (int(s) for s in a.sides.split(",")):
        tn, tp, gap = bench_sweeps(side, a.sweeps, a.repeat)
        print(f"{f'sweep {side}x{side}':<24}{1e3 * tn:>12.2f}{1e3 * tp:>12.2f}{tp / tn:>10.1f}{gap:>12.1e}")
    s = a.exhaustive_side
    tn, tp, gap = bench_exhaustive(s, a.repeat)
    print(f"{f'exhaustive n={s * s}':<24}{1e3 * tn:>12.2f}{1e3 * tp:>12.2f}{tp / tn:>10.1f}{gap:>12.1e}")


if __name__ == "__main__":
    main()
