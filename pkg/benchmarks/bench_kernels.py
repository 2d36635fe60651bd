"""Time the compiled kernels against the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``; prints one row per kernel
and size with the best-of-``repeat`` time for each backend and the speedup.
"""
import argparse
import timeit

from specperturb import _backend, _fallback
from specperturb.numkernel import EIG_TOL, MAX_SWEEPS, SeededRng, gaussian_matrix


def cases(scale):
    rng = SeededRng(0)
    for n in (32, 64, 128) if scale == "full" else (32,):
        B = gaussian_matrix(n, n, rng)
        S = B + B.T
        yield "jacobi_eigh", n, lambda k, S=S: k.jacobi_eigh(S, EIG_TOL, MAX_SWEEPS)
        M = gaussian_matrix(n, 2 * n, rng)
        yield "jacobi_svd", n, lambda k, M=M: k.jacobi_svd(M, EIG_TOL, MAX_SWEEPS)
    for N in (200, 1000) if scale == "full" else (200,):
        X = gaussian_matrix(N, 50, rng)
        yield "pairwise_sqdist", N, lambda k, X=X: k.pairwise_sqdist(X)
        P = gaussian_matrix(N, 3, rng)
        C0 = P[:3].copy()
        yield "lloyd", N, lambda k, P=P, C0=C0: k.lloyd(P, C0.copy(), 300, 1e-9)
    for N in (1000,):
        L, R = gaussian_matrix(N, 8, rng), gaussian_matrix(N // 2, 8, rng)
        idx = rng.integers(N * (N // 2), N * N // 20)
        rows, cols = idx // (N // 2), idx % (N // 2)
        yield "masked_dot", idx.size, lambda k, L=L, R=R, r=rows, c=cols: k.masked_dot(L, R, r, c)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smallest sizes only")
    args = ap.parse_args()
    if _backend.BACKEND != "cython":
        print("compiled extension not available; timing the fallback only")
    print(f"{'kernel':<16}{'size':>8}{'numpy [ms]':>13}{'cython [ms]':>13}{'speedup':>9}")
    for name, size, fn in cases("quick" if args.quick else "full"):
        slow = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat)) * 1e3
        if _backend.BACKEND == "cython":
            fast = min(timeit.repeat(lambda: fn(_backend.kernels), number=1,
                                     repeat=args.repeat)) * 1e3
            print(f"{name:<16}{size:>8}{slow:>13.2f}{fast:>13.2f}{slow / fast:>8.1f}x")
        else:
            print(f"{name:<16}{size:>8}{slow:>13.2f}{'-':>13}{'-':>9}")


if __name__ == "__main__":
    main()
