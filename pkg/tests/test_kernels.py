import os
import subprocess
import sys

import numpy as np
import pytest

from rdsym import _kernels
from rdsym.matrix_algebra import _numeric_constants, load_appendix


def _consts(name, case):
    return _numeric_constants(load_appendix().algebra(name, case))


def _preserves(P, ca, cb):
    n = ca.shape[0]
    for i in range(n):
        for j in range(n):
            lhs = P @ ca[i, j]
            rhs = np.einsum("a,b,abc->c", P[:, i], P[:, j], cb)
            if not np.allclose(lhs, rhs):
                return False
    return abs(np.linalg.det(P)) > 1e-9


def test_integer_values():
    assert _kernels.integer_values(2) == [0.0, 1.0, -1.0, 2.0, -2.0]


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not importable")
def test_backends_agree():
    ca, cb = _consts("A_{3,4}", "a=1"), _consts("A_{3,1}", "a!=1")
    vals = _kernels.integer_values(1)
    Pn = _kernels.find_basis_change(ca, cb, vals, use_numba=True)
    Pp = _kernels.find_basis_change(ca, cb, vals, use_numba=False)
    assert Pn is not None and Pp is not None
    assert _preserves(Pn, ca, cb) and _preserves(Pp, ca, cb)
    np.testing.assert_array_equal(Pn, Pp)


def test_no_solution_returns_none():
    ca = np.zeros((2, 2, 2))
    cb = np.zeros((2, 2, 2))
    cb[0, 1, 1], cb[1, 0, 1] = 1, -1
    for use in (False, _kernels.HAVE_NUMBA):
        assert _kernels.find_basis_change(ca, cb, _kernels.integer_values(1), use_numba=use) is None


def test_permutations_preserving():
    cb = np.zeros((2, 2, 2))
    cb[0, 1, 1], cb[1, 0, 1] = 1, -1
    ca = np.zeros((2, 2, 2))
    ca[1, 0, 0], ca[0, 1, 0] = 1, -1
    assert _kernels.permutations_preserving(ca, cb) == [(1, 0)]


def test_environment_flag_selects_numpy():
    env = {**os.environ, "RDSYM_NO_NUMBA": "1"}
    out = subprocess.run([sys.executable, "-c", "from rdsym import _kernels; print(_kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
