import pytest
import sympy as sp

from rdsym.expr import (DeclaredFunction, JetOrderError, ParseError, SamplingDomain, SymbolTable,
                        UnknownSymbolError, UnsampleableDomain, ZeroStatus, diff, is_zero, jet,
                        normalize, parse, substitute, to_text)

u, v, t, x1, x2 = sp.symbols("u v t x1 x2")


@pytest.fixture
def table():
    psi = DeclaredFunction("psi", (1,), time="heat", rate=sp.Symbol("mu"))
    return SymbolTable(m=1).extend(params=["alpha", "eta", "mu", "nu"], opaques=["F1"],
                                   declared=[psi])


def test_parse_power_product(table):
    e = parse("u^3 * v^-2", table)
    assert e == u**3 / v**2


def test_parse_zero(table):
    assert parse("0", table) == 0


def test_parse_opaque_application(table):
    e = parse("exp(u)*F1(v - eta*u)", table)
    (app,) = [a for a in e.atoms(sp.Function) if a.func.__name__ == "F1"]
    assert normalize(app.args[0] - (v - sp.Symbol("eta") * u)) == 0


def test_decimal_literal_is_exact(table):
    e = parse("0.5*t", table)
    assert e == t / 2
    assert not e.atoms(sp.Float)


def test_unknown_symbol_names_identifier(table):
    with pytest.raises(UnknownSymbolError) as exc:
        parse("u + q", table)
    assert exc.value.name == "q"
    assert exc.value.offset == 4


def test_syntax_error_has_offset(table):
    with pytest.raises(ParseError) as exc:
        parse("u + (v", table)
    assert exc.value.offset is not None


def test_jet_symbols_are_symmetric():
    assert jet("u", "x2", "x1") == jet("u", "x1", "x2")
    tab = SymbolTable(m=2)
    assert parse("u_x2x1", tab) == parse("u_x1x2", tab)


def test_round_trip(table):
    for s in ["u^3*v^(-2)", "exp(u)*F1(v - eta*u)", "alpha*log(u) + sin(v)^2", "u_x1x1 + t/3"]:
        e = parse(s, table)
        assert parse(to_text(e), table) == e


def test_diff_product():
    assert diff(u**2 * v, u) == 2 * u * v


def test_diff_chain_rule_opaque(table):
    e = parse("F1(v/u)", table)
    d = diff(e, u, table)
    (app,) = [a for a in d.atoms(sp.Function) if a.func.__name__.startswith("F1")]
    assert app.func.__name__ == "F1_d1"
    assert normalize(d - app * (-v / u**2)) == 0


def test_diff_declared_heat_rewrite(table):
    psi = parse("psi", table)
    got = diff(psi, t, table)
    assert normalize(got - (jet("psi", "x1", "x1") + sp.Symbol("mu") * jet("psi"))) == 0


def test_declared_jet_overflow():
    d = DeclaredFunction("psi", (1,), time=None)
    with pytest.raises(JetOrderError):
        d.reduce({"x1": 4})


def test_harmonic_rule_eliminates_last_direction():
    d = DeclaredFunction("Psi", (1, 2), laplace_rate=sp.Integer(0))
    assert d.reduce({"x2": 2}) == -jet("Psi", "x1", "x1")


def test_substitute_is_simultaneous():
    assert substitute(u + v, {u: v, v: u}) == u + v
    assert substitute(u + v, {u: t**2}) == t**2 + v


def test_substitute_on_shell():
    ut, uxx = jet("u", "t"), jet("u", "x1", "x1")
    assert substitute(ut, {ut: uxx + u * v}) == uxx + u * v


def test_substitute_opaque_argument(table):
    w = sp.Symbol("w")
    F1 = [a for a in parse("F1(u)", table).atoms(sp.Function)][0].func
    got = substitute(F1(w), {w: v - sp.log(u)})
    assert got == F1(v - sp.log(u))


def test_normal_form_idempotent(table):
    e = parse("(u+v)^2*exp(u)*exp(v) + log(exp(u))", table)
    n = normalize(e)
    assert normalize(n) == n


def test_is_zero_proved():
    assert is_zero((u + v)**2 - u**2 - 2 * u * v - v**2).status is ZeroStatus.PROVED_ZERO


def test_is_zero_exp_product():
    r = is_zero(sp.exp(u + v) - sp.exp(u) * sp.exp(v))
    assert r.zero


def test_is_zero_probed_symbolic_exponent():
    nu = sp.Symbol("nu")
    e = sp.diff(u**nu, u) * u - nu * u**nu
    assert is_zero(e).zero


def test_is_zero_nonzero_with_witness():
    r = is_zero(u**2 - u * v, SamplingDomain(fixed={"u": 1, "v": 2}))
    assert r.status is ZeroStatus.NONZERO
    assert r.value == pytest.approx(-1)


def test_unsampleable_domain():
    with pytest.raises(UnsampleableDomain):
        is_zero(sp.sin(u) * v - v * sp.sin(u) + sp.exp(u) * sp.log(v) - 1,
                SamplingDomain(positive=(1.0, 1.0)))
