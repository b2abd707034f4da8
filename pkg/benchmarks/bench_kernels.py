"""Compare the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Prints the best of
``--repeat`` timings and the maximum absolute difference per case.
"""

import argparse
import timeit

import numpy as np

from alpertlab import _kernels_py

try:
    from alpertlab import _kernels as _compiled
except ImportError:
    _compiled = None


def cases(rng):
    for n, m, dim in ((2000, 500, 1), (20000, 2000, 1), (4096, 2000, 2)):
        x = rng.uniform(-1, 1, (n, dim))
        amp = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u = rng.uniform(-50, 50, (m, dim))
        v = rng.uniform(-50, 50, m)
        yield f"phase_sum n={n} m={m} dim={dim}", "phase_sum", (amp, x, u, v)
    breaks = np.linspace(-1, 1, 65)
    coeffs = rng.standard_normal((64, 8))
    yield "legendre_pp_eval 1e6 points", "legendre_pp_eval", (breaks, coeffs, rng.uniform(-1.1, 1.1, 10**6))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'case':38s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s} {'max diff':>10s}")
    for label, name, a in cases(rng):
        fpy = getattr(_kernels_py, name)
        tpy = min(timeit.repeat(lambda: fpy(*a), number=1, repeat=args.repeat))
        if _compiled is None:
            print(f"{label:38s} {tpy:11.4f} {'n/a':>13s}")
            continue
        fc = getattr(_compiled, name)
        tc = min(timeit.repeat(lambda: fc(*a), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(fpy(*a) - fc(*a))))
        print(f"{label:38s} {tpy:11.4f} {tc:13.4f} {tpy / tc:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
