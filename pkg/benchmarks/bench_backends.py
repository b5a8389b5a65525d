"""Time the numba kernels against the pure-numpy fallback.

Runs each spatial kernel on identical seeded inputs under both backends
and prints best-of-N wall times plus the speedup.  The numba set gets an
untimed warmup call first so JIT compilation stays out of the numbers.

    python benchmarks/bench_backends.py [--maps 32] [--size 64] [--repeats 5]
"""

import argparse
import time

import numpy as np

from camkit import _kernels_numpy


def best_of(fn, args, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--maps", type=int, default=32)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    try:
        from camkit import _kernels_numba
    except ImportError:
        print("numba is not importable; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    c, n, s = 3, args.maps, args.size
    x = rng.standard_normal((c, s, s)).astype(np.float32)
    w = rng.standard_normal((n, c, 3, 3)).astype(np.float32)
    b = rng.standard_normal(n).astype(np.float32)
    y = _kernels_numpy.conv2d_forward(x, w, b, 1, 1)
    gy = rng.standard_normal(y.shape).astype(np.float32)
    _, arg = _kernels_numpy.maxpool_forward(y, 2, 2)
    gp = rng.standard_normal((n, s // 2, s // 2)).astype(np.float32)

    cases = [
        ("conv2d_forward", "conv2d_forward", (x, w, b, 1, 1)),
        ("conv2d_input_grad", "conv2d_input_grad", (gy, w, 1, 1, s, s)),
        ("maxpool_forward", "maxpool_forward", (y, 2, 2)),
        ("maxpool_scatter", "maxpool_scatter", (gp.astype(np.float64), arg, s, s)),
        ("avgpool_forward", "avgpool_forward", (y, 2, 2)),
        ("avgpool_scatter", "avgpool_scatter", (gp.astype(np.float64), 2, 2, s, s)),
    ]

    print(f"maps={n} size={s}x{s} repeats={args.repeats} (best-of)")
    print(f"{'kernel':<20} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for label, name, call_args in cases:
        np_fn = getattr(_kernels_numpy, name)
        nb_fn = getattr(_kernels_numba, name)
        nb_fn(*call_args)  # warmup: trigger compilation
        t_np = best_of(np_fn, call_args, args.repeats)
        t_nb = best_of(nb_fn, call_args, args.repeats)
        print(f"{label:<20} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms {t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
