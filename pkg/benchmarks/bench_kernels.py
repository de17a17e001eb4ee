"""Compare the numba and numpy kernel backends.

Kernel timings call both implementations directly on the same arrays.
End-to-end timings run ``hgauge verify`` in subprocesses with
``HGAUGE_BACKEND`` set to each value.

    python3 benchmarks/bench_kernels.py [--sizes 200 800] [--repeat 5] [--no-e2e]
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hgauge.kernels import _numba, _numpy


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _operands(n, rng):
    mono = rng.integers(0, 1 << 24, n).astype(np.int64)
    mask = rng.integers(0, 1 << 10, n).astype(np.int64)
    num = rng.integers(-9, 10, n).astype(np.int64)
    return mono, mask, num


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    guard = np.int64(1 << 62)
    rows = []
    for n in sizes:
        a, b = _operands(n, rng), _operands(n, rng)
        args = (*a, *b, guard)
        _numba.block_product(*args)  # compile outside the timing
        t_np = _best(lambda: _numpy.block_product(*args), repeat)
        t_nb = _best(lambda: _numba.block_product(*args), repeat)
        rows.append((f"block_product {n}x{n}", t_np, t_nb))

        m = n * 20
        hdr = rng.integers(0, 64, m).astype(np.int64)
        mono = rng.integers(0, n, m).astype(np.int64)
        num = rng.integers(-3, 4, m).astype(np.int64)
        _numba.reduce_terms(hdr, mono, num)
        t_np = _best(lambda: _numpy.reduce_terms(hdr, mono, num), repeat)
        t_nb = _best(lambda: _numba.reduce_terms(hdr, mono, num), repeat)
        rows.append((f"reduce_terms {m}", t_np, t_nb))
    return rows


def bench_e2e(args):
    rows = []
    for backend in ("numpy", "numba"):
        env = dict(os.environ, HGAUGE_BACKEND=backend)
        cmd = [sys.executable, "-m", "hgauge", "verify", "--no-timing", "--workers", "1", *args]
        subprocess.run(cmd, env=env, capture_output=True, check=True)  # warm the numba cache
        t0 = time.perf_counter()
        subprocess.run(cmd, env=env, capture_output=True, check=True)
        rows.append((backend, time.perf_counter() - t0))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 400, 1600])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-e2e", action="store_true")
    opts = ap.parse_args(argv)

    print(f"{'kernel':<26}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, t_np, t_nb in bench_kernels(opts.sizes, opts.repeat):
        print(f"{name:<26}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")

    if not opts.no_e2e:
        here = os.path.dirname(os.path.abspath(__file__))
        suite = ["--scenario", os.path.join(here, "..", "scenarios", "stress_n2.scn")]
        print("\nend to end: hgauge verify --scenario scenarios/stress_n2.scn")
        for backend, secs in bench_e2e(suite):
            print(f"  HGAUGE_BACKEND={backend:<6} {secs:6.2f}s")


if __name__ == "__main__":
    main()
