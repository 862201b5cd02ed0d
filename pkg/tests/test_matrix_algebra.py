import json

import numpy as np
import pytest
import sympy as sp

from rdsym.matrix_algebra import (AlgebraVerdict, AppendixError, FieldForm, IsoVerdict,
                                  MatrixAlgebra, MatrixRealization, ShapeError,
                                  SingularTransformError, appendix_path, commutator, conjugate,
                                  find_isomorphism, homomorphism_defects, invariants, load_appendix,
                                  parse_relation, realize_as_field, verify_algebra, verify_appendix)
from rdsym.model import VectorField, make_D
from rdsym.prolong import lie_bracket

u, v, t = sp.symbols("u v t")
lam = sp.Symbol("lam")


@pytest.fixture(scope="module")
def app():
    return load_appendix()


def test_commutator_examples(app):
    g = app.matrices
    assert commutator(g["g1_1"], g["g5"]) == g["g5"]
    assert commutator(g["g3"], g["g3"]) == MatrixRealization.of("0", sp.zeros(3, 3))


def test_realization_shape_checks():
    with pytest.raises(ShapeError):
        MatrixRealization.of("bad", [[1, 0, 0], [0, 0, 0], [0, 0, 0]])
    with pytest.raises(ShapeError):
        MatrixRealization.of("bad", sp.zeros(4, 4))


def test_conjugate_identity_and_errors(app):
    g3 = app.matrices["g3"]
    assert conjugate(g3, sp.eye(3)) == g3
    with pytest.raises(SingularTransformError):
        conjugate(g3, [[1, 0, 0], [0, 1, 1], [0, 1, 1]])
    with pytest.raises(ShapeError):
        conjugate(g3, [[0, 1, 0], [1, 0, 0], [0, 0, 1]])


def test_conjugate_diagonal_scaling(app):
    k = sp.Symbol("k")
    h = conjugate(app.matrices["g5"], sp.diag(1, k, 1), a=sp.Rational(1, 2))
    assert h.matrix == sp.Matrix([[0, 0, 0], [k, 0, 0], [0, 0, 0]])


def test_conjugate_antidiagonal_swaps_slots(app):
    swap = [[1, 0, 0], [0, 0, 1], [0, 1, 0]]
    h = conjugate(app.matrices["g3"], swap, a=1)
    assert h.matrix == sp.Matrix([[0, 0, 0], [1, 0, 0], [lam, 0, 0]])
    with pytest.raises(ValueError):
        conjugate(app.matrices["g3"], swap, a=2)


def test_conjugation_preserves_brackets(app):
    rng = np.random.default_rng(0)
    mats = [m for m in app.matrices.values() if not m.params]
    for _ in range(10):
        while True:
            U = sp.Matrix(3, 3, [1, 0, 0, *(int(c) for c in rng.integers(-3, 4, 6))])
            if U.det() != 0:
                break
        i, j = rng.choice(len(mats), 2, replace=False)
        g, h = mats[i], mats[j]
        lhs = commutator(conjugate(g, U), conjugate(h, U))
        assert lhs == conjugate(commutator(g, h), U)


def test_realize_examples(app):
    assert realize_as_field(app.matrices["g4"]) == VectorField.from_components(0, [0], 0, v)
    assert realize_as_field(app.matrices["g5"]) == VectorField.from_components(0, [0], 1, 0)
    zero = MatrixRealization.of("0", sp.zeros(3, 3))
    assert realize_as_field(zero).is_zero_structurally()
    X1 = realize_as_field(app.matrices["g4"], FieldForm.X1, mu=3)
    assert X1 == 3 * make_D(1) + VectorField.from_components(0, [0], 0, -2 * v)
    X2 = realize_as_field(app.matrices["g4"], "X2", lam=2)
    assert X2 == VectorField.from_components(0, [0], 0, sp.exp(2 * t) * v)


def test_field_map_reverses_brackets(app):
    assert homomorphism_defects(list(app.matrices.values())) == []
    g, h = app.matrices["g1_1"], app.matrices["g5"]
    lhs = realize_as_field(commutator(g, h))
    assert lie_bracket(realize_as_field(g), realize_as_field(h)) == -1 * lhs


@pytest.mark.parametrize("name", ["A_{2,1}", "A_{2,2}", "A_{2,3}"])
def test_abelian_algebras(app, name):
    rep = verify_algebra(app.algebra(name, "a!=1"))
    assert rep.verdict is AlgebraVerdict.PASS
    assert rep.computed == []


def test_single_element_algebra(app):
    A = MatrixAlgebra("one", (app.matrices["g3"],), ())
    assert verify_algebra(A).verdict is AlgebraVerdict.PASS


def test_relation_parsing():
    r = parse_relation("[e1,e3] = e2 + e3", 3)
    assert (r.i, r.j) == (0, 2) and r.text() == "[e1,e3] = e2 + e3"
    with pytest.raises(ValueError):
        parse_relation("[e1,e4] = e2", 3)


def test_lie_relation_family(app):
    assert verify_algebra(app.algebra("A_{2,4}", "a!=1")).verdict is AlgebraVerdict.PASS
    assert verify_algebra(app.algebra("A_{3,9}", "a=1")).verdict is AlgebraVerdict.PASS


def test_printed_order_mismatch_is_reported(app):
    rep = verify_algebra(app.algebra("A_{3,11}", "a=1"))
    assert rep.verdict is AlgebraVerdict.FAIL
    assert rep.relabeling == (2, 0, 1)


def test_lambda_dependent_closure_is_conditional(app):
    rep = verify_algebra(app.algebra("A_{3,1}", "a=1"))
    assert rep.verdict is AlgebraVerdict.CONDITIONAL
    assert rep.holds_when == [{"lam": "0"}]


def test_quarantined_algebras(app):
    rep = verify_algebra(app.algebra("A_{4,2}", "a=1"))
    assert rep.verdict is AlgebraVerdict.QUARANTINED


def test_isomorphism_search(app):
    A = app.algebra("A_{3,4}", "a=1")
    B = app.algebra("A_{3,1}", "a!=1")
    vals = {lam: sp.Rational(7, 3)}
    res = find_isomorphism(A.subs(vals), B.subs(vals))
    assert res.verdict is IsoVerdict.ISOMORPHIC and res.basis_change.det() != 0
    with pytest.raises(ValueError):
        find_isomorphism(app.algebra("A_{3,5}", "a=1"), B)


def test_invariants_refute(app):
    vals = {lam: sp.Rational(7, 3)}
    A = app.algebra("A_{3,5}", "a=1").subs(vals)
    B = app.algebra("A_{3,1}", "a!=1").subs(vals)
    assert invariants(A) != invariants(B)
    assert find_isomorphism(A, B).verdict is IsoVerdict.NOT_ISOMORPHIC


def _dump(tmp_path, data):
    p = tmp_path / "appendix.json"
    p.write_text(json.dumps(data), encoding="utf-8")
    return p


def test_load_errors(tmp_path):
    data = json.loads(appendix_path().read_text(encoding="utf-8"))
    (tmp_path / "empty.json").write_text(" ", encoding="utf-8")
    with pytest.raises(AppendixError, match="empty"):
        load_appendix(tmp_path / "empty.json")
    bad = json.loads(json.dumps(data))
    bad["algebras"][0]["basis"] = ["g99"]
    with pytest.raises(AppendixError) as exc:
        load_appendix(_dump(tmp_path, bad))
    assert exc.value.pointer == "/algebras/0/basis"
    bad = json.loads(json.dumps(data))
    bad["matrices"]["g4"]["rows"][0] = ["1", "0", "0"]
    with pytest.raises(AppendixError) as exc:
        load_appendix(_dump(tmp_path, bad))
    assert exc.value.pointer == "/matrices/g4"


def test_appendix_report_runtime(app):
    rep = verify_appendix(app)
    assert rep.seconds < 5
    assert rep.homomorphism_defects == []
    keys = {r.key: r.verdict for r in rep.algebras}
    assert keys["A_{3,10} [a=1]"] is AlgebraVerdict.FAIL
