"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--sizes 200 400 800] [--repeat 3]

Reports wall time per call and checks that both backends agree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from vigil._core import _pure

try:
    from vigil._core import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def svr_case(n, rng):
    X = rng.uniform(0, 1, (n, 8))
    y = np.clip(0.5 + 0.3 * np.sin(4 * X[:, 0]) + 0.05 * rng.standard_normal(n), 0, 1)
    d = (X * X).sum(1)[:, None] + (X * X).sum(1)[None, :] - 2 * X @ X.T
    return np.exp(-0.5 * np.maximum(d, 0)), y


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 400, 800])
    ap.add_argument("--scan-length", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)

    print(f"{'kernel':<22}{'size':>8}{'pure s':>10}{'cython s':>10}{'speed-up':>10}  agree")
    for n in args.sizes:
        K, y = svr_case(n, rng)
        tp, (cp, rp, _) = best_of(lambda: _pure.smo_svr(K, y, 4.0, 0.01), 1)
        if _ckernels is None:
            print(f"{'smo_svr':<22}{n:>8}{tp:>10.3f}")
            continue
        tc, (cc, rc, _) = best_of(lambda: _ckernels.smo_svr(K, y, 4.0, 0.01), args.repeat)
        agree = np.allclose(cp, cc, atol=1e-9) and abs(rp - rc) < 1e-9
        print(f"{'smo_svr':<22}{n:>8}{tp:>10.3f}{tc:>10.4f}{tp / tc:>10.1f}  {agree}")

    c = np.convolve(rng.standard_normal(args.scan_length), np.ones(25) / 5, mode="same")
    tp, outp = best_of(lambda: _pure.scan_peak_runs(c, 2.0, 1.0), args.repeat)
    if _ckernels is not None:
        tc, outc = best_of(lambda: _ckernels.scan_peak_runs(c, 2.0, 1.0), args.repeat)
        agree = all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(outp, outc))
        print(f"{'scan_peak_runs':<22}{args.scan_length:>8}{tp:>10.4f}{tc:>10.4f}{tp / tc:>10.1f}  {agree}")
    else:
        print(f"{'scan_peak_runs':<22}{args.scan_length:>8}{tp:>10.4f}")


if __name__ == "__main__":
    main()
