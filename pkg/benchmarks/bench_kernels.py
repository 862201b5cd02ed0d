"""Time the basis-change search with and without numba.

Uses a pair that is not isomorphic (A_{3,10} against A_{3,9}) so the search
exhausts the whole candidate set at the chosen height.

    python benchmarks/bench_kernels.py [--height 2]
"""
import argparse
import time


from rdsym import _kernels
from rdsym.matrix_algebra import _numeric_constants, load_appendix


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--height", type=int, default=2)
    args = ap.parse_args()
    app = load_appendix()
    ca = _numeric_constants(app.algebra("A_{3,10}", "a=1"))
    cb = _numeric_constants(app.algebra("A_{3,9}", "a=1"))
    vals = _kernels.integer_values(args.height)
    n_cand = len(vals) ** (ca.shape[0] ** 2)
    print(f"candidates: {n_cand}")
    if _kernels.HAVE_NUMBA:
        _kernels.find_basis_change(ca, cb, _kernels.integer_values(1), use_numba=True)  # compile
        t0 = time.perf_counter()
        hit = _kernels.find_basis_change(ca, cb, vals, use_numba=True)
        print(f"numba: {time.perf_counter() - t0:.3f} s, found={hit is not None}")
    else:
        print("numba: unavailable")
    t0 = time.perf_counter()
    hit = _kernels.find_basis_change(ca, cb, vals, use_numba=False)
    print(f"numpy: {time.perf_counter() - t0:.3f} s, found={hit is not None}")


if __name__ == "__main__":
    main()
