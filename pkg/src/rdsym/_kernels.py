"""Brute-force basis-change search between small Lie algebras.

Given structure constants ``ca[i, j, k]`` of algebra A and ``cb`` of algebra B
(both ``n x n x n``), find an invertible ``P`` with entries from a finite value
set such that ``phi(e_i) = sum_a P[a, i] f_a`` preserves brackets:

    sum_k ca[i, j, k] P[:, k] == sum_{a, b} P[a, i] P[b, j] cb[a, b, :]

The numba kernel walks the candidates with an odometer and exits on the first
hit. Setting ``RDSYM_NO_NUMBA=1`` selects the chunked numpy path instead.
"""
from __future__ import annotations

import itertools
import os

import numpy as np

_DISABLED = os.environ.get("RDSYM_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:  # pragma: no cover - import guard
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

TOL = 1e-9


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def _search_numpy(ca, cb, values, chunk: int = 1 << 16):
    n = ca.shape[0]
    vals = np.asarray(values, dtype=np.float64)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    total = len(vals) ** (n * n)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.empty((idx.size, n * n), dtype=np.int64)
        rest = idx.copy()
        for d in range(n * n - 1, -1, -1):
            digits[:, d] = rest % len(vals)
            rest //= len(vals)
        P = vals[digits].reshape(-1, n, n)
        ok = np.ones(P.shape[0], dtype=bool)
        for i, j in pairs:
            lhs = np.einsum("k,pak->pa", ca[i, j], P)
            rhs = np.einsum("pa,pb,abc->pc", P[:, :, i], P[:, :, j], cb)
            ok &= np.all(np.abs(lhs - rhs) < TOL, axis=1)
            if not ok.any():
                break
        if not ok.any():
            continue
        for p in np.nonzero(ok)[0]:
            if abs(np.linalg.det(P[p])) > TOL:
                return P[p].copy()
    return None


if HAVE_NUMBA:
    @njit(cache=True)
    def _search_numba(ca, cb, vals):  # pragma: no cover - compiled
        n = ca.shape[0]
        nv = vals.shape[0]
        nn = n * n
        digits = np.zeros(nn, dtype=np.int64)
        P = np.empty((n, n))
        while True:
            for d in range(nn):
                P[d // n, d % n] = vals[digits[d]]
            good = True
            for i in range(n):
                if not good:
                    break
                for j in range(i + 1, n):
                    for c in range(n):
                        lhs = 0.0
                        for k in range(n):
                            lhs += ca[i, j, k] * P[c, k]
                        rhs = 0.0
                        for a in range(n):
                            pa = P[a, i]
                            if pa == 0.0:
                                continue
                            for b in range(n):
                                rhs += pa * P[b, j] * cb[a, b, c]
                        if abs(lhs - rhs) > 1e-9:
                            good = False
                            break
                    if not good:
                        break
            if good and abs(np.linalg.det(P)) > 1e-9:
                return P.copy(), True
            d = nn - 1
            while d >= 0:
                digits[d] += 1
                if digits[d] < nv:
                    break
                digits[d] = 0
                d -= 1
            if d < 0:
                return P.copy(), False


def find_basis_change(ca, cb, values, *, use_numba: bool | None = None):
    """Return the first bracket-preserving invertible P over ``values`` or None."""
    ca = np.ascontiguousarray(ca, dtype=np.float64)
    cb = np.ascontiguousarray(cb, dtype=np.float64)
    if ca.shape != cb.shape:
        return None
    use = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    if use:
        P, found = _search_numba(ca, cb, np.asarray(values, dtype=np.float64))
        return P if found else None
    return _search_numpy(ca, cb, values)


def integer_values(height: int) -> list[float]:
    """Integers of absolute value at most ``height``, zero first."""
    return [0.0] + [float(s * k) for k in range(1, height + 1) for s in (1, -1)]


def permutations_preserving(ca, cb) -> list[tuple[int, ...]]:
    """Basis permutations sigma with ca[i, j, k] == cb[s(i), s(j), s(k)]."""
    n = ca.shape[0]
    out = []
    for perm in itertools.permutations(range(n)):
        p = np.array(perm)
        if np.allclose(ca, cb[np.ix_(p, p, p)], atol=TOL):
            out.append(perm)
    return out
