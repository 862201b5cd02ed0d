"""Acceptance criteria 1-9; each records one PASS/FAIL line for the run summary."""
import random
import time

import numpy as np
import pytest
import sympy as sp

from _acceptance import record
from _corpus import TABLE, VARS, corpus
from rdsym.catalog.schema import load_catalog
from rdsym.catalog.verify import DISPUTED, verify_all, verify_aet_ref, _aet_enums
from rdsym.detgen import (MainSymmetry, classify_residual, compare_with_reference,
                          extension_flags, generate_determining, opaque_system,
                          reference_first_order_system)
from rdsym.equiv import PointTransformation, apply_to_system
from rdsym.expr import SymbolTable, ZeroStatus, diff, is_zero, normalize, parse, to_text
from rdsym.matrix_algebra import verify_appendix
from rdsym.model import DiffusionSystem, Kind, parse_field
from rdsym.prolong import check_symmetry

AET_TABLES = (1, 2, 4, 5, 9, 10)


def _sys(f1, f2, a="1", m=1, params=(), opaques=(), **kw):
    tab = SymbolTable(m=m, params=params, opaques=opaques)
    return DiffusionSystem(m, parse(f1, tab), parse(f2, tab), a=parse(a, tab), table=tab, **kw)


def _tight(verdict) -> bool:
    return verdict.status is ZeroStatus.PROVED_ZERO or (
        verdict.status is ZeroStatus.PROBED_ZERO and verdict.max_relative <= 1e-8)


@pytest.fixture(scope="module")
def catalog_run():
    entries = load_catalog()
    t0, c0 = time.perf_counter(), time.process_time()
    report = verify_all(entries, seed=0)
    return entries, report, time.perf_counter() - t0, time.process_time() - c0


def test_criterion_1_determining_system():
    t0 = time.perf_counter()
    gen = generate_determining(opaque_system(1, Kind.FIRST_ORDER, a=0, p=1))
    printed = compare_with_reference(gen, reference_first_order_system(-1))
    corrected = compare_with_reference(gen, reference_first_order_system(+1))
    secs = time.perf_counter() - t0
    ok = printed.equivalent and secs < 10
    record(1, ok, f"printed trace 2xi_x = -eta_t: generated implies it {printed.generated_in_reference}, "
                  f"implied by it {printed.reference_in_generated}; with 2xi_x = +eta_t equivalent "
                  f"{corrected.equivalent} ({corrected.generated_dim} dims); {secs:.1f}s")
    assert corrected.equivalent
    assert ok, "the printed trace condition is not equivalent to the generated system"


def test_criterion_2_full_catalog(catalog_run):
    entries, report, wall, cpu = catalog_run
    tables = [e for e in report.entries if e.table != "E"]
    bad = [e.id for e in tables if e.status == "FAIL"]
    quarantined = [e for e in tables if e.status == "QUARANTINED"]
    ok = not bad and len(quarantined) <= 5 and all(e.note for e in quarantined) and cpu < 300
    s = report.summary
    record(2, ok, f"{len(tables)} table rows, failing {bad or 'none'}, {len(quarantined)} quarantined, "
                  f"{s['checks']} checks, {s['disputed']} disputed printed claims; "
                  f"cpu {cpu:.0f}s, wall {wall:.0f}s")
    assert ok


def test_criterion_3_worked_example():
    sys = _sys("alpha*u^3*v^(-2)", "lam*u^2*v^(-1)", a="0", params=["alpha", "lam"],
               kind=Kind.FIRST_ORDER, p=1)
    results = []
    for text in ("2*D + v*d_v", "u*d_u + v*d_v"):
        X = parse_field(text, sys)
        r = check_symmetry(X, sys)
        c = classify_residual(sys, MainSymmetry.from_field(X))
        results.append(_tight(r.verdict1) and _tight(r.verdict2) and c.passed
                       and _tight(c.verdict1) and _tight(c.verdict2))
    u, v = sp.symbols("u v")
    scaling = [normalize(f - (u * sp.diff(f, u) + v * sp.diff(f, v))) for f in (sys.f1, sys.f2)]
    ok = all(results) and scaling == [0, 0]
    record(3, ok, f"check_symmetry and classify_residual {results}; f = (u d_u + v d_v) f exact")
    assert ok


def test_criterion_4_showcase():
    out = {}
    gl = _sys("u + (u^2+v^2)*(alpha*v-u)", "v - (u^2+v^2)*(v+alpha*u)", params=["alpha"])
    out["GL"] = check_symmetry(parse_field("u*d_v - v*d_u", gl), gl).passed
    pp = _sys("-u*v", "u*v", a="lam", params=["lam"])
    out["predator-prey"] = check_symmetry(parse_field("D - u*d_u - v*d_v", pp), pp).passed
    tab = SymbolTable(m=1, params=["nu", "w"])
    lo = DiffusionSystem(1, parse("(u - w*v)*(u^2+v^2)^(nu/2)", tab),
                         parse("(v + w*u)*(u^2+v^2)^(nu/2)", tab), table=tab)
    out["lambda-omega"] = check_symmetry(parse_field("nu*D - u*d_u - v*d_v", lo), lo).passed
    jt = _sys("-2*u^2*v", "2*u*v^2", a="-1", m=2)
    flags = extension_flags(jt)
    out["JT Galilei"] = flags.galilei.on and all(flags.galilei.generator_checks)
    out["JT conformal m=2"] = flags.conformal.on and all(flags.conformal.generator_checks)
    ok = all(out.values())
    record(4, ok, ", ".join(f"{k} {'ok' if v else 'FAIL'}" for k, v in out.items()))
    assert ok


def test_criterion_5_flag_grid():
    values = [sp.Integer(1), sp.Rational(1, 2), sp.Integer(2), sp.Integer(-1), sp.Rational(3, 2)]
    a, m = sp.Integer(-1), 2
    tab = SymbolTable(m=m)
    wrong = []
    for nu in values:
        for mu in values:
            f1 = parse(f"u^({nu}+1)*v^({mu})", tab)
            f2 = parse(f"(2/3)*u^({nu})*v^({mu}+1)", tab)
            flags = extension_flags(DiffusionSystem(m, f1, f2, a=a, table=tab))
            want_g = a * nu == -mu
            want_k = want_g and nu * m * (1 - a) == 4
            if flags.galilei.on != want_g or flags.conformal.on != want_k:
                wrong.append((str(nu), str(mu)))
            if not all(all(f.generator_checks) for f in (flags.galilei, flags.conformal)):
                wrong.append((str(nu), str(mu), "generator"))
    ok = not wrong
    record(5, ok, f"25 (nu, mu) points at a=-1, m=2; mismatches {wrong or 'none'}")
    assert ok


def test_criterion_6_aet_suite(catalog_run):
    entries, report, _, _ = catalog_run
    chosen = [e for e in report.entries if e.table in AET_TABLES]
    listed = [c for e in chosen for c in e.checks if c.check == "aet" and "(printed)" not in c.target]
    failed = [c for c in listed if c.failed]
    disputed = [(e.id, c.target) for e in chosen for c in e.checks
                if c.check == "aet" and c.verdict == DISPUTED]
    mutations = survived = 0
    for e in (x for x in entries if x.table in AET_TABLES):
        m = e.ms[0]
        for ref in e.aet:
            variants = [{"override": {k: f"({val}) + 1"}, "ref": ref}
                        for k, val in ref.get("bindings", {}).items()]
            variants += [{"override": None, "ref": {**ref, "when": {**ref["when"], k: f"({val}) + 1"}}}
                         for k, val in ref.get("when", {}).items()]
            for var in variants:
                runs = _aet_enums(e, var["ref"], m) or [{}]
                verdicts = [verify_aet_ref(e, var["ref"], m, 0, override=var["override"], enum=g)[0]
                            for g in runs]
                mutations += 1
                if all(v.status.value == "CLASS_PRESERVED" for v in verdicts):
                    survived += 1
    ok = not failed and not disputed and survived == 0
    record(6, ok, f"{len(listed) - len(failed)}/{len(listed)} encoded AET references preserve the class; "
                  f"{len(disputed)} printed references refuted {[d[0] for d in disputed]}; "
                  f"{mutations - survived}/{mutations} off-condition mutations rejected")
    assert ok


def test_criterion_7_appendix():
    rep = verify_appendix()
    off = [f"{r.key} {r.verdict.value}" for r in rep.algebras
           if r.verdict.value not in ("PASS", "QUARANTINED")]
    ok = rep.relations_ok and not rep.homomorphism_defects and rep.seconds < 5
    record(7, ok, f"{len(rep.algebras)} algebras, not matching as printed: {off or 'none'}; "
                  f"homomorphism defects {len(rep.homomorphism_defects)}; {rep.seconds:.1f}s")
    assert ok


def test_criterion_8_expression_corpus():
    es = corpus(1000, seed=7)
    rng = random.Random(7)
    bad = 0
    for i, e in enumerate(es):
        f = es[(i + 1) % len(es)]
        s1, s2 = rng.choice(VARS), rng.choice(VARS)
        a, b = sp.Rational(rng.randint(-5, 5), rng.randint(1, 4)), sp.Rational(rng.randint(-5, 5), 3)
        lin = normalize(diff(a * e + b * f, s1, TABLE) - a * diff(e, s1, TABLE) - b * diff(f, s1, TABLE))
        prod = is_zero(diff(e * f, s1, TABLE) - e * diff(f, s1, TABLE) - f * diff(e, s1, TABLE))
        mixed = normalize(diff(diff(e, s1, TABLE), s2, TABLE) - diff(diff(e, s2, TABLE), s1, TABLE))
        trip = parse(to_text(e), TABLE) == e
        if lin != 0 or prod.status is not ZeroStatus.PROVED_ZERO or mixed != 0 or not trip:
            bad += 1
    ok = bad == 0
    record(8, ok, f"1000 expressions, {bad} violating linearity, product rule, mixed partials or round trip")
    assert ok


def test_criterion_9_equivalence_group():
    rng = np.random.default_rng(9)
    sys = _sys("u^2*v - v^3 + u", "u*v + 1")

    def same(s1, s2):
        return (normalize(s1.a - s2.a) == 0 and normalize(s1.f1 - s2.f1) == 0
                and normalize(s1.f2 - s2.f2) == 0)

    def rand_mix():
        while True:
            K = [[int(c) for c in row] for row in rng.integers(-3, 4, (2, 2))]
            if K[0][0] * K[1][1] - K[0][1] * K[1][0] != 0:
                return PointTransformation.linear_mix(K, [int(c) for c in rng.integers(-2, 3, 2)],
                                                      int(rng.choice([1, 2, 3])))

    composed = 0
    for _ in range(10):
        T1, T2 = rand_mix(), rand_mix()
        composed += same(apply_to_system(T2, apply_to_system(T1, sys)), apply_to_system(T1.compose(T2), sys))
    base = _sys("u^3 + v", "u*v^2", a="-1/2")
    S1 = PointTransformation.mix_tilde([[0, 2], [1, 0]])
    S2 = PointTransformation.mix_tilde([[0, 1], [3, 0]])
    twice = apply_to_system(S2, apply_to_system(S1, base))
    back = twice.a == base.a and same(twice, apply_to_system(S1.compose(S2), base))
    ok = composed == 10 and back
    record(9, ok, f"{composed}/10 random compositions exact; a -> 1/a twice returns a={twice.a} "
                  f"and a LINEAR_MIX image {back}")
    assert ok
