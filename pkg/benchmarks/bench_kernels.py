"""Time the numba and pure-numpy kernel paths side by side.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 1024,16384,131072]

Also checks that both paths agree before timing them.  Run with
ARMASIN_DISABLE_NUMBA=1 to see only the numpy column.
"""

import argparse
import time

import numpy as np

from armasin import _kernels
from armasin.filter_design import FilterSpec, design_elliptic

CASE3 = FilterSpec("bandstop", (0.158, 0.168), (0.16, 0.165), 1.0, 20.0)


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="1024,16384,131072")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = np.random.default_rng(0)
    tf = design_elliptic(CASE3)
    b, a = tf.b, tf.a

    rows = []
    for n in sizes:
        x = rng.standard_normal(n)
        m = 1 << (n - 1).bit_length()
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        cases = [
            ("lfilter", n, lambda: _kernels.lfilter_numpy(b, a, x), lambda: _kernels.lfilter_numba(b, a, x)),
            ("fft_pow2", m, lambda: _kernels.fft_pow2_numpy(z), lambda: _kernels.fft_pow2_numba(z, False)),
        ]
        for name, size, np_fn, nb_fn in cases:
            t_np = best_of(np_fn, args.repeat)
            if _kernels.HAVE_NUMBA:
                ref, got = np_fn(), nb_fn()  # first call also compiles / loads cache
                err = float(np.max(np.abs(ref - got)) / max(1.0, np.max(np.abs(ref))))
                t_nb = best_of(nb_fn, args.repeat)
            else:
                err, t_nb = float("nan"), float("nan")
            rows.append((name, size, t_np, t_nb, err))

    print(f"{'kernel':10s}{'size':>9s}{'numpy ms':>12s}{'numba ms':>12s}{'speedup':>9s}{'rel err':>10s}")
    for name, size, t_np, t_nb, err in rows:
        print(f"{name:10s}{size:9d}{1e3 * t_np:12.3f}{1e3 * t_nb:12.3f}{t_np / t_nb:9.1f}{err:10.1e}")


if __name__ == "__main__":
    main()
