"""Time every kernel on its numba and numpy paths.

    python3 benchmarks/bench_kernels.py --size 20000 --repeat 5
"""

import argparse
import time

import numpy as np

from srlp_lab import kernels
from srlp_lab.corpus import builtin_walk
from srlp_lab.spectral import jacobi_truncation


def cases(size):
    w = builtin_walk("rational_drift")
    p, r, q = w.arrays(size)
    logpi = w.log_pi_array(size)
    J = jacobi_truncation(w, min(size, 2000))
    d, pj, qj = J._kernel_args()
    lo, hi = J.bracket()
    n = J.N
    v = np.zeros(min(size, 4000))
    v[0] = 1.0
    W = v.size
    steps = np.array([W // 2], dtype=np.int64)
    tg = np.array([0], dtype=np.int64)
    xs = np.linspace(-1, 1, 16)
    return {
        "recurrence": (p, r, q, xs, size - 1),
        "ratio": (p, r, q, 1.0, size - 1),
        "backward_ratio": (p, r, q, 1.0, size),
        "pm_ratio": (p, r, q, 1.0, size - 1),
        "qbar": (np.log(p), logpi, r, size - 1),
        "sturm": (d, pj, qj, n, xs),
        "bisect_k": (d, pj, qj, n, n - 1, lo, hi, 1e-14),
        "bisect_all": (d, pj, qj, min(n, 300), lo, hi, 1e-13),
        "propagate": (v, p[:W], r[:W], q[:W], steps, tg),
        "tridiag_solve": (J.diagonal, J.offdiagonal, 0.5, np.ones(n)),
    }


def best_of(fn, args, repeat):
    fn(*args)  # compile / warm up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20000, help="walk length fed to the kernels")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, a in cases(args.size).items():
        nb, ref = kernels.IMPLEMENTATIONS[name]
        t_nb = best_of(nb, a, args.repeat)
        t_np = best_of(ref, a, args.repeat)
        print(f"{name:<16}{1e3 * t_nb:12.3f}{1e3 * t_np:12.3f}{t_np / t_nb:10.1f}")


if __name__ == "__main__":
    main()
