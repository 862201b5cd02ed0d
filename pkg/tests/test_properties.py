import random

import mpmath
import numpy as np
import sympy as sp
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from _corpus import TABLE, VARS, corpus, random_text
from rdsym.expr import ZeroStatus, diff, is_zero, normalize, parse, to_text

seeds = st.integers(min_value=0, max_value=2**32 - 1)
exprs = seeds.map(lambda s: parse(random_text(np.random.default_rng(s)), TABLE))
var = st.sampled_from(VARS)
rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)
PROFILE = settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@PROFILE
@given(exprs, exprs, var, rationals, rationals)
def test_diff_linear(e1, e2, s, a, b):
    a, b = sp.Rational(a.numerator, a.denominator), sp.Rational(b.numerator, b.denominator)
    lhs = diff(a * e1 + b * e2, s, TABLE)
    rhs = a * diff(e1, s, TABLE) + b * diff(e2, s, TABLE)
    assert normalize(lhs - rhs) == 0


@PROFILE
@given(exprs, exprs, var)
def test_product_rule(e1, e2, s):
    r = diff(e1 * e2, s, TABLE) - e1 * diff(e2, s, TABLE) - e2 * diff(e1, s, TABLE)
    assert is_zero(r).status is ZeroStatus.PROVED_ZERO


@PROFILE
@given(exprs, var, var)
def test_mixed_partials(e, s1, s2):
    assert normalize(diff(diff(e, s1, TABLE), s2, TABLE) - diff(diff(e, s2, TABLE), s1, TABLE)) == 0


@PROFILE
@given(exprs)
def test_round_trip(e):
    assert parse(to_text(e), TABLE) == e


@PROFILE
@given(exprs)
def test_normalize_idempotent(e):
    n = normalize(e)
    assert normalize(n) == n


def _numeric_agrees(e, rng) -> bool:
    e = e.replace(lambda a: isinstance(a, sp.Function) and a.func.__name__ == "F1",
                  lambda a: sp.sin(a.args[0]))
    syms = sorted(e.free_symbols, key=lambda s: s.name)
    pt = {s: sp.Rational(rng.randint(1, 9), rng.randint(1, 5)) for s in syms}
    exact = sp.N(e.subs(pt), 30)
    fn = sp.lambdify(syms, e, modules="mpmath")
    with mpmath.workdps(30):
        approx = fn(*[mpmath.mpf(p.p) / p.q for p in pt.values()])
    scale = max(1.0, abs(complex(exact)))
    return abs(complex(exact) - complex(approx)) <= 1e-12 * scale


def test_corpus_properties():
    rng = random.Random(0)
    es = corpus(200, seed=1)
    for i, e in enumerate(es):
        s1, s2 = VARS[i % 4], VARS[(i + 1) % 4]
        assert normalize(diff(diff(e, s1, TABLE), s2, TABLE) - diff(diff(e, s2, TABLE), s1, TABLE)) == 0
        assert parse(to_text(e), TABLE) == e
        assert _numeric_agrees(e, rng)
