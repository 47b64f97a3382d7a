"""Compare the compiled and pure-Python LMS kernels.

Usage: ``python benchmarks/bench_lms.py [--symbols N] [--taps T] [--repeat R]``
"""
import argparse
import time

import numpy as np

from phasedd import _lms_py, lms


def _case(n_out, taps, stride, seed=0):
    rng = np.random.default_rng(seed)
    x = np.ascontiguousarray(rng.standard_normal((3, n_out * stride))
                             + 1j * rng.standard_normal((3, n_out * stride)))
    d = rng.standard_normal(n_out) + 1j * rng.standard_normal(n_out)
    return x, d, np.zeros((3, taps), dtype=complex)


def _time(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        x, d, w = args
        w = w.copy()
        t0 = time.perf_counter()
        out = fn(x, d, w, 1e-3, d.size // 2, True, 0, 2, d.size)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--symbols", type=int, default=2 ** 14, help="equalizer outputs per run")
    p.add_argument("--taps", type=int, default=15)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    case = _case(args.symbols, args.taps, 2)
    t_py, (y_py, _) = _time(_lms_py.lms_run, case, args.repeat)
    print(f"python  {t_py * 1e3:9.1f} ms  ({args.symbols / t_py / 1e3:8.1f} ksym/s)")
    if lms.BACKEND != "cython":
        print("cython  not built (install with the build step to compare)")
        return 0
    t_cy, (y_cy, _) = _time(lms.lms_run, case, args.repeat)
    print(f"cython  {t_cy * 1e3:9.1f} ms  ({args.symbols / t_cy / 1e3:8.1f} ksym/s)")
    print(f"speed-up {t_py / t_cy:6.1f}x, max |y_cy - y_py| = {np.max(np.abs(y_cy - y_py)):.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
