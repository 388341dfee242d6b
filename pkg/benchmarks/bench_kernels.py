"""Compare the numba and numpy paths of the hot kernels.

Run with ``python benchmarks/bench_kernels.py``. The first numba call pays
the compile cost, so each kernel is warmed up before timing.
"""
import argparse
import timeit

import numpy as np

from almostsync import _kernels


def correlation_inputs(rng, n_q, n_out, d):
    shape = (n_q, n_out, d, d)
    left = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    right = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return left, right


def bench(label, fn_numba, fn_numpy, args, repeat):
    fn_numba(*args)  # compile
    ref, got = fn_numpy(*args), fn_numba(*args)
    err = max(np.abs(np.asarray(r) - np.asarray(g)).max() for r, g in zip(np.atleast_1d(ref), np.atleast_1d(got))) \
        if isinstance(ref, tuple) else np.abs(ref - got).max()
    t_jit = min(timeit.repeat(lambda: fn_numba(*args), number=1, repeat=repeat))
    t_np = min(timeit.repeat(lambda: fn_numpy(*args), number=1, repeat=repeat))
    print(f"{label:<34} numba {t_jit * 1e3:9.3f} ms   numpy {t_np * 1e3:9.3f} ms   "
          f"ratio {t_np / t_jit:6.2f}   max|diff| {err:.1e}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    rng = np.random.default_rng(args.seed)
    for n_q, n_out, d in [(2, 2, 4), (6, 8, 16), (6, 8, 64), (9, 2, 128)]:
        left, right = correlation_inputs(rng, n_q, n_out, d)
        bench(f"correlation_tensor {n_q}x{n_out} d={d}", _kernels.correlation_tensor_numba,
              _kernels.correlation_tensor_numpy, (left, right), args.repeat)
    for n in (16, 128, 512):
        w = rng.random((n, n))
        bench(f"prefix_block_sums n={n}", _kernels.prefix_block_sums_numba,
              _kernels.prefix_block_sums_numpy, (w,), args.repeat)


if __name__ == "__main__":
    main()
