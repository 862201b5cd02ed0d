import itertools

import numpy as np
import pytest
import sympy as sp

from rdsym.expr import JetOrderError, SymbolTable, jet, normalize, parse, split_jet
from rdsym.model import (DiffusionSystem, Kind, VectorField, make_basic, make_D, make_G, make_Ghat,
                         make_K, parse_field)
from rdsym.prolong import (check_symmetry, closure_check, lie_bracket, prolong2_apply,
                           total_derivative)

t, x1, u, v = sp.symbols("t x1 u v")


def _sys(f1, f2, a="1", m=1, params=(), opaques=(), **kw):
    tab = SymbolTable(m=m, params=params, opaques=opaques)
    return DiffusionSystem(m, parse(f1, tab), parse(f2, tab), a=parse(a, tab), table=tab, **kw)


def test_total_derivative_examples():
    tab = SymbolTable(m=1)
    assert total_derivative(u**2, x1, tab) == 2 * u * jet("u", "x1")
    assert total_derivative(jet("u", "x1"), t, tab) == jet("u", "t", "x1")
    assert sp.expand(total_derivative(t * u, t, tab) - (u + t * jet("u", "t"))) == 0


def test_total_derivative_overflow():
    tab = SymbolTable(m=1)
    with pytest.raises(JetOrderError):
        total_derivative(jet("u", "x1", "x1", "x1", "x1"), x1, tab)


def test_time_translation_trivial():
    sys = _sys("u^2*v", "F1(u/v)", opaques=["F1"])
    assert prolong2_apply(make_basic(1)[0], sys) == (0, 0)


def test_power_row_scaling_symbolic_a():
    sys = _sys("eps*u^(nu+1)*v^mu", "sigma*u^nu*v^(mu+1)", a="a",
               params=["a", "eps", "sigma", "mu", "nu"])
    X = parse_field("mu*D - v*d_v", sys)
    assert check_symmetry(X, sys).passed
    Y = parse_field("nu*D - u*d_u", sys)
    assert check_symmetry(Y, sys).passed


def test_non_symmetry_residual():
    sys = _sys("u^2", "0")
    r1, r2 = prolong2_apply(parse_field("u*d_u", sys), sys)
    assert normalize(r1 + u**2) == 0 and r2 == 0
    assert not check_symmetry(parse_field("u*d_u", sys), sys).passed


@pytest.mark.parametrize("field", ["2*D + v*d_v", "u*d_u + v*d_v"])
def test_first_order_power_row(field):
    sys = _sys("delta*u^3*v^(-2)", "mu*u^2*v^(-1)", a="0", params=["delta", "mu"],
               kind=Kind.FIRST_ORDER, p=1)
    assert check_symmetry(parse_field(field, sys), sys).passed


def test_predator_prey():
    sys = _sys("-u*v", "u*v", a="lam", params=["lam"])
    assert check_symmetry(parse_field("D - u*d_u - v*d_v", sys), sys).passed


def test_gl_rotation():
    sys = _sys("u + (u^2+v^2)*(alpha*v-u)", "v - (u^2+v^2)*(v+alpha*u)", params=["alpha"])
    assert check_symmetry(parse_field("u*d_v - v*d_u", sys), sys).passed
    assert not check_symmetry(parse_field("u*d_u", sys), sys).passed


def test_bracket_examples():
    sys = _sys("0", "0", a="1/2")
    P0 = make_basic(1)[0]
    assert lie_bracket(P0, make_D(1)) == P0
    g = sp.Symbol("gamma")
    Gh = make_Ghat(sys, 1, g)
    assert lie_bracket(P0, Gh) == g * Gh


def _library():
    sys = _sys("0", "0", a="1/3", m=2)
    lib = make_basic(2) + [make_D(2), make_K(sys), make_G(sys, 1), make_G(sys, 2),
                           make_Ghat(sys, 1, 2), parse_field("u*d_u + x1*v*d_v", sys),
                           parse_field("exp(t)*d_u + u*v*d_v", sys)]
    return sys, lib


def test_antisymmetry_and_jacobi():
    sys, lib = _library()
    tab = sys.symbols
    for X, Y in itertools.combinations(lib, 2):
        assert lie_bracket(X, Y, tab) == -lie_bracket(Y, X, tab)
    rng = np.random.default_rng(5)
    for _ in range(12):
        X, Y, Z = (lib[i] for i in rng.choice(len(lib), 3, replace=False))
        J = (lie_bracket(X, lie_bracket(Y, Z, tab), tab) + lie_bracket(Y, lie_bracket(Z, X, tab), tab)
             + lie_bracket(Z, lie_bracket(X, Y, tab), tab))
        assert J.is_zero_structurally()


def test_bracket_of_symmetries_is_symmetry():
    sys = _sys("-2*u^2*v", "2*u*v^2", a="-1")
    G, D = make_G(sys, 1), parse_field("D - u*d_u", sys)
    assert check_symmetry(G, sys).passed and check_symmetry(D, sys).passed
    assert check_symmetry(lie_bracket(G, D), sys).passed


def test_closure_basic_m2():
    res = closure_check(make_basic(2))
    assert res.closed
    # [P1, J12] = P2 with J12 = x1 d_x2 - x2 d_x1
    assert res.constants[(1, 3)] == (0, 0, 1, 0)


def test_closure_abelian_pair():
    sys = _sys("alpha*u^3*v^(-2)", "lam*u^2*v^(-1)", params=["alpha", "lam"])
    res = closure_check([parse_field("2*D + v*d_v", sys), parse_field("u*d_u + v*d_v", sys)])
    assert res.closed and all(c == 0 for c in res.constants[(0, 1)])


def test_closure_failure_witness():
    P0 = make_basic(1)[0]
    T2 = VectorField.from_components(t**2, [0], 0, 0)
    res = closure_check([P0, T2])
    assert not res.closed
    assert res.witness == (0, 1)
    assert res.witness_bracket == 2 * VectorField.from_components(t, [0], 0, 0)


# ---------------------------------------------------------------- oracle
# The residual of pr^(2)X on a solution equals d/de of Delta[u0 + e*Q_u, v0 + e*Q_v]
# at e=0, Q the characteristic. The oracle takes that derivative by central
# differences on closed-form solutions, never touching jet symbols.

EPS = sp.Symbol("e")
ORACLE_CASES = [
    # (f1, f2, a, u0, v0, field)
    ("u^2", "0", "1", -1 / t, sp.exp(-t) * sp.sin(x1) + 3, "u*d_u"),
    ("u^2", "0", "1", -1 / t, sp.exp(-t) * sp.sin(x1) + 3, "t^2*d_t + x1*u*d_v"),
    ("0", "0", "1/2", sp.exp(-4 * t) * sp.cos(2 * x1) + x1**2 + 2 * t,
     sp.exp(-t / 2) * sp.sin(x1), "u^2*d_u + x1*d_t"),
    ("0", "0", "1/2", sp.exp(-4 * t) * sp.cos(2 * x1) + x1**2 + 2 * t,
     sp.exp(-t / 2) * sp.sin(x1), "t*d_x1 + v*u*d_v - x1*d_u"),
    ("u^2", "0", "1", -1 / t, sp.exp(-t) * sp.sin(x1) + 3, "D - u*d_u"),
]


def _jet_value(sym, u0, v0):
    dep, idx = split_jet(sym.name)
    e = u0 if dep == "u" else v0
    for s in idx:
        e = sp.diff(e, sp.Symbol(s))
    return e


@pytest.mark.parametrize("f1,f2,a,u0,v0,field", ORACLE_CASES)
def test_prolongation_against_linearization_oracle(f1, f2, a, u0, v0, field):
    sys = _sys(f1, f2, a=a)
    X = parse_field(field, sys)
    r1, r2 = prolong2_apply(X, sys)
    ct, cx, cu, cv = X.eta, X.xi[0], X.phi1, X.phi2
    on = {u: u0, v: v0}
    qu = (cu - ct * sp.diff(u0, t) - cx * sp.diff(u0, x1)).subs(on)
    qv = (cv - ct * sp.diff(v0, t) - cx * sp.diff(v0, x1)).subs(on)
    U, V = u0 + EPS * qu, v0 + EPS * qv
    d1 = sp.diff(U, t) - sp.diff(U, x1, 2) - sys.f1.subs({u: U, v: V}, simultaneous=True)
    d2 = sp.diff(V, t) - sys.a * sp.diff(V, x1, 2) - sys.f2.subs({u: U, v: V}, simultaneous=True)
    fd = sp.lambdify((t, x1, EPS), [d1, d2], "mpmath")
    def at_solution(r):
        jets = {s: _jet_value(s, u0, v0) for s in r.free_symbols if split_jet(s.name)}
        return r.subs(jets).subs(on)

    res = sp.lambdify((t, x1), [at_solution(r1), at_solution(r2)], "mpmath")
    h = 1e-6
    for tv, xv in [(0.7, 0.3), (1.1, -0.4), (1.6, 1.2), (2.3, 0.05), (0.9, -1.3)]:
        plus, minus = fd(tv, xv, h), fd(tv, xv, -h)
        got = res(tv, xv)
        for k in range(2):
            oracle = float((plus[k] - minus[k]) / (2 * h))
            assert abs(float(got[k]) - oracle) <= 1e-6 * max(1.0, abs(oracle))
