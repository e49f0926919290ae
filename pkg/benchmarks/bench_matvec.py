"""Time the compiled CSR/KL kernels against the NumPy fallback.

    python3 benchmarks/bench_matvec.py [--repeat 200]
"""

import argparse
import timeit

import numpy as np

from smartkl import _fallback
from smartkl.problems import expander_instance, gaussian_blur_operator, parallel_beam_tomography

try:
    from smartkl import _kernels
except ImportError:
    _kernels = None


def cases():
    yield "expander 40x200", expander_instance().A
    yield "blur 64^2, mask 9", gaussian_blur_operator(64, 64, 9, 2.0)
    yield "tomography 64^2, 30 angles", parallel_beam_tomography(64, 30)


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=repeat, repeat=5)) / repeat * 1e6


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernels are not built; only the fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'operator':<28} {'nnz':>8} {'kernel':<8} {'numpy us':>10} {'cython us':>10} {'speedup':>8}")
    for name, A in cases():
        m, n = A.shape
        x, u = rng.uniform(size=n), rng.uniform(0.1, 1, size=m)
        yp = rng.uniform(0.1, 1, size=m)
        args_ = (A.indptr, A.indices, A.data)
        kernels = {
            "A x": (lambda k: (lambda: k.csr_matvec(*args_, x))),
            "A^T u": (lambda k: (lambda: k.csr_rmatvec(*args_, u, n))),
            "KL": (lambda k: (lambda: k.kl_sum(u, yp))),
        }
        for kname, make in kernels.items():
            t_np = bench(make(_fallback), args.repeat)
            if _kernels is not None:
                t_cy = bench(make(_kernels), args.repeat)
                print(f"{name:<28} {A.nnz:>8} {kname:<8} {t_np:>10.2f} {t_cy:>10.2f} {t_np / t_cy:>7.2f}x")
            else:
                print(f"{name:<28} {A.nnz:>8} {kname:<8} {t_np:>10.2f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
