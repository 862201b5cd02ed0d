import pytest
import sympy as sp

from rdsym.expr import SymbolTable, parse
from rdsym.model import (DiffusionSystem, GeneratorError, Kind, VectorField, make_basic, make_D,
                         make_G, make_Ghat, make_K, parse_field, validate)
from rdsym.prolong import lie_bracket

t, x1, x2, u, v = sp.symbols("t x1 x2 u v")


def _sys(f1="u*v", f2="-u*v", a=1, m=1, **kw):
    tab = SymbolTable(m=m, params=kw.pop("params", ()))
    return DiffusionSystem(m, parse(f1, tab), parse(f2, tab), a=sp.sympify(a), table=tab, **kw)


@pytest.mark.parametrize("m,count", [(1, 2), (2, 4), (3, 7), (4, 11)])
def test_basic_count(m, count):
    assert len(make_basic(m)) == count


def test_rotation_generator():
    J = make_basic(2)[3]
    assert J == VectorField.from_components(0, [-x2, x1], 0, 0)


def test_dilation_m2():
    D = make_D(2)
    assert D.components == (t, x1 / 2, x2 / 2, 0, 0)


def test_galilei_at_negative_a():
    G = make_G(_sys(a=-1), 1)
    assert G == VectorField.from_components(0, [t], -x1 * u / 2, x1 * v / 2)


def test_exp_galilei_at_zero_gamma_is_translation():
    assert make_Ghat(_sys(), 1, 0) == make_basic(1)[1]


def test_conformal_m1():
    K = make_K(_sys())
    assert K == VectorField.from_components(2 * t**2, [2 * t * x1], -x1**2 * u / 2 - t * u,
                                            -x1**2 * v / 2 - t * v)


def test_generators_need_diagonal_nonzero_a():
    with pytest.raises(GeneratorError):
        make_K(_sys(a=0))
    with pytest.raises(GeneratorError):
        make_G(DiffusionSystem(1, 0, 0, kind=Kind.FIRST_ORDER), 1)


def test_validate_warns_non_canonical_a():
    out = validate(_sys(a=2))
    assert [w.level for w in out] == ["warning"]
    assert validate(_sys(a=1)) == []
    assert validate(_sys(a=sp.Rational(-1, 2))) == []


def test_validate_rejects_explicit_time():
    tab = SymbolTable(m=1)
    sys = DiffusionSystem(1, t * u, v, table=tab)
    errs = [w for w in validate(sys) if w.level == "error"]
    assert errs and "t" in errs[0].message


def test_first_order_p_range():
    with pytest.raises(ValueError):
        DiffusionSystem(1, 0, 0, kind=Kind.FIRST_ORDER, p=2)


def test_galilei_bracket_with_time_translation():
    sys = _sys()
    P0 = make_basic(1)[0]
    assert lie_bracket(P0, make_G(sys, 1)) == make_basic(1)[1]


def test_exp_galilei_bracket_scales():
    g = sp.Symbol("gamma")
    sys = _sys()
    P0 = make_basic(1)[0]
    Gh = make_Ghat(sys, 1, g)
    assert lie_bracket(P0, Gh) == g * Gh


def test_parse_field_and_text_round_trip():
    sys = _sys(params=["lam"])
    X = parse_field("2*D + lam*v*d_v", sys)
    assert X == VectorField.from_components(2 * t, [x1], 0, sp.Symbol("lam") * v)
    assert parse_field(X.to_text(), sys) == X


def test_parse_field_rejects_nonlinear_tokens():
    with pytest.raises(ValueError):
        parse_field("d_t*d_u", _sys())
