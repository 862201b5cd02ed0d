"""Batch verification of catalog entries and report assembly."""
from __future__ import annotations

import json
import random
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Mapping

import sympy as sp

from .. import __version__
from ..detgen import MainSymmetry, classify_residual, extension_flags
from ..equiv import ClassTemplate, PointTransformation, aet_parameters, verify_aet
from ..expr import SamplingDomain, normalize, to_text
from ..model import DiffusionSystem, Kind, VectorField, make_basic
from ..prolong import check_symmetry, closure_check
from .schema import CatalogEntry, catalog_hash

PASS, FAIL, WARN, QUARANTINED = "PASS", "FAIL", "WARN", "QUARANTINED"
# a printed claim the engine refutes, recorded with the reason in the catalog
DISPUTED = "DISPUTED"

_POOL = [sp.Rational(n, d) for n, d in
         ((2, 3), (-1, 2), (3, 2), (5, 4), (-4, 3), (1, 3), (-3, 5), (7, 4), (-5, 2), (4, 5),
          (5, 3), (-2, 7), (9, 4), (-7, 3))]


@dataclass
class CheckResult:
    check: str
    target: str
    m: int
    instance: str
    verdict: str
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.verdict.startswith(FAIL)


@dataclass
class EntryReport:
    id: str
    table: int | str
    row: int | str
    anchor: str
    status: str
    checks: list[CheckResult] = field(default_factory=list)
    note: str = ""

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if c.failed]


@dataclass
class VerificationReport:
    entries: list[EntryReport]
    seed: int
    catalog_hash: str
    engine_version: str = __version__

    @property
    def summary(self) -> dict[str, int]:
        out = {PASS: 0, FAIL: 0, QUARANTINED: 0}
        for e in self.entries:
            out[e.status] += 1
        out["checks"] = sum(len(e.checks) for e in self.entries)
        out["warnings"] = sum(c.verdict == WARN for e in self.entries for c in e.checks)
        out["disputed"] = sum(c.verdict == DISPUTED for e in self.entries for c in e.checks)
        return out

    @property
    def exit_code(self) -> int:
        return 1 if any(e.status == FAIL for e in self.entries) else 0

    def to_dict(self) -> dict:
        return {"provenance": {"catalog_hash": self.catalog_hash,
                               "engine_version": self.engine_version, "seed": self.seed},
                "summary": self.summary,
                "entries": [asdict(e) for e in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_text(self, verbose: bool = False) -> str:
        lines = [f"rdsym {self.engine_version}  seed={self.seed}  catalog={self.catalog_hash[:16]}"]
        for e in self.entries:
            lines.append(f"{e.id:<10} {e.status:<12} {len(e.checks)} checks")
            for c in e.checks:
                if verbose or c.verdict in (WARN, DISPUTED) or c.failed:
                    inst = f" [{c.instance}]" if c.instance else ""
                    lines.append(f"    {c.check:<9} m={c.m} {c.target}{inst}: {c.verdict}"
                                 + (f"  {c.detail}" if c.detail else ""))
        s = self.summary
        lines.append(f"summary: {s[PASS]} PASS, {s[FAIL]} FAIL, {s[QUARANTINED]} QUARANTINED, "
                     f"{s['checks']} checks, {s['warnings']} warnings, {s['disputed']} disputed")
        return "\n".join(lines) + "\n"


# ------------------------------------------------------------- instances

def _label(values: Mapping[str, str]) -> str:
    return ", ".join(f"{k}={v}" for k, v in sorted(values.items()))


def _finite(e) -> bool:
    return not (e.has(sp.zoo) or e.has(sp.nan) or e.has(sp.oo) or e.has(-sp.oo))


def concrete_instance(entry: CatalogEntry, m: int, extra: Mapping[str, str], seed: int,
                      exclude: Iterable[Mapping[str, str]] = (),
                      avoid_when: Iterable[Mapping[str, str]] = ()) -> dict[str, str]:
    """Rational values for the free parameters satisfying the entry conditions.

    Instances meeting any condition in ``avoid_when`` are skipped while an
    alternative exists, so a generic instance does not land on a special case.
    """
    rng = random.Random(f"{seed}|{entry.id}|{m}|{_label(extra)}")
    free = entry.free_params(m, extra)
    exclude = [dict(x) for x in exclude]
    avoid_when = [dict(w) for w in avoid_when]
    for attempt in range(400):
        vals = {p: str(rng.choice(_POOL)) for p in free}
        merged = {**extra, **vals}
        if merged in exclude:
            continue
        if attempt < 200 and any(_holds(entry, m, merged, w) for w in avoid_when):
            continue
        b = entry.bindings(m, merged)
        if "a" in free and b[sp.Symbol("a")] in (0, 1):
            continue
        if any(normalize(c) == 0 or not _finite(c) for c in entry.condition_exprs(m, merged)):
            continue
        sys = entry.system(m, merged)
        if not (_finite(sys.f1) and _finite(sys.f2) and _finite(sys.a)):
            continue
        return merged
    raise ValueError(f"{entry.id}: no admissible parameter instance")


def _domain(entry: CatalogEntry, m: int, extra: Mapping[str, str], seed: int) -> SamplingDomain:
    return SamplingDomain(param_names=frozenset(entry.free_params(m, extra)),
                          avoid=tuple(entry.condition_exprs(m, extra)), seed=seed)


def _short(e, n: int = 240) -> str:
    s = to_text(e)
    return s if len(s) <= n else s[:n] + "..."


def basic_symmetries(sys: DiffusionSystem) -> list[VectorField]:
    """Translations plus the rotations that respect the system's distinguished direction."""
    basics = make_basic(sys.m)
    if sys.kind is Kind.FIRST_ORDER and sys.p != 0:
        basics = [X for X in basics if X.xi[-1] == 0 or X.xi[-1] == 1]
    return basics


def _tokens(texts: Iterable[str]) -> dict[str, bool]:
    texts = list(texts)
    return {"galilei": any(re.search(r"\bG(_alpha|\d+)\b", t) for t in texts),
            "exp_galilei": any(re.search(r"\bGhat(_alpha|\d+)\b", t) for t in texts),
            "conformal": any(re.search(r"\bK\b", t) for t in texts)}


# ---------------------------------------------------------------- checks

def _symmetry_checks(entry, sys, texts, extra, m, seed, out: list[CheckResult]):
    domain = _domain(entry, m, extra, seed)
    inst = _label(extra)
    for label, X in entry.fields(texts, sys, extra):
        rep = check_symmetry(X, sys, domain)
        detail = "" if rep.passed else (
            f"residual1={_short(rep.residual1)}; residual2={_short(rep.residual2)}")
        out.append(CheckResult("symmetry", label, m, inst, rep.status, detail))
        if entry.uses_declared(X):
            continue
        try:
            data = MainSymmetry.from_field(X)
            cres = classify_residual(sys, data, domain)
        except ValueError:
            continue
        agree = cres.passed == rep.passed
        out.append(CheckResult("classify", label, m, inst, PASS if agree else FAIL,
                               "" if agree else f"classifying route gives {cres.passed}"))


def _closure_check(entry, sys, texts, extra, m, seed, out: list[CheckResult], rounds: int = 4):
    listed = [X for _, X in entry.fields(texts, sys, extra) if not entry.uses_declared(X)]
    fields = basic_symmetries(sys) + listed
    target = f"{len(fields)} fields"
    inst = _label(extra)
    missing = []
    for _ in range(rounds):
        res = closure_check(fields, sys.symbols, seed=seed)
        if res.closed:
            break
        B = res.witness_bracket
        if not check_symmetry(B, sys, SamplingDomain(seed=seed)).passed:
            i, j = res.witness
            out.append(CheckResult("closure", target, m, inst, FAIL,
                                   f"bracket of fields {i},{j} = {B.to_text()} is not a symmetry"))
            return
        # a symmetry outside the listed span: record it and keep closing
        missing.append(B.to_text())
        fields = fields + [B]
    if missing:
        out.append(CheckResult("closure", target, m, inst, WARN,
                               "INCOMPLETE_LISTING: brackets outside the listed span that are "
                               "symmetries: " + "; ".join(missing)))
    else:
        out.append(CheckResult("closure", target, m, inst, PASS))


def _flag_check(entry, sys, expected: Mapping[str, bool | None], extra, m, seed,
                out: list[CheckResult]):
    gamma = entry.gamma_expr(m, extra)
    flags = extension_flags(sys, gamma_hints=(gamma,) if gamma is not None else (),
                            domain=SamplingDomain(seed=seed))
    got = {"galilei": flags.galilei.on, "exp_galilei": flags.exp_galilei.on,
           "conformal": flags.conformal.on}
    gens_ok = all(all(f.generator_checks) for f in (flags.galilei, flags.exp_galilei, flags.conformal))
    bad = [k for k, want in expected.items() if want is not None and got[k] != want]
    verdict = PASS if not bad and gens_ok else FAIL
    detail = ", ".join(f"{k}={'on' if v else 'off'}" for k, v in got.items())
    if bad:
        detail += f"; expected {', '.join(f'{k}={expected[k]}' for k in bad)}"
    if not gens_ok:
        detail += "; a constructed generator failed check_symmetry"
    out.append(CheckResult("flags", "extension", m, _label(extra), verdict, detail))


def _aet_bindings(entry, ref, m, values) -> dict[str, sp.Expr]:
    """Concrete values for every parameter of the referenced transformation."""
    b = entry.bindings(m, values)
    table = entry.base_table(m).extend(params=aet_parameters(ref["id"]))
    rng = random.Random(f"aet|{entry.id}|{ref['id']}")
    out: dict[str, sp.Expr] = {}
    explicit = ref.get("bindings", {})
    for name in aet_parameters(ref["id"]):
        if name in explicit:
            continue
        sym = sp.Symbol(name)
        if name in entry.params:
            out[name] = b.get(sym, sym)
        else:
            out[name] = rng.choice(_POOL)
    for name, text in explicit.items():
        e = entry._expr(text, table, m).subs(b).subs({sp.Symbol(k): w for k, w in out.items()})
        out[name] = normalize(e)
    return out


def verify_aet_ref(entry: CatalogEntry, ref: Mapping, m: int, seed: int,
                   override: Mapping[str, str] | None = None, enum: Mapping[str, str] | None = None):
    """Run verify_aet for one AET reference; ``override`` replaces bindings (mutation tests)."""
    enum = dict(enum or {})
    if "f1" in ref or "f2" in ref:
        entry = replace(entry, f1=ref.get("f1", entry.f1), f2=ref.get("f2", entry.f2))
    extra = {**enum, **ref.get("when", {})}
    values = concrete_instance(entry, m, extra, seed)
    ref = dict(ref)
    if override:
        ref["bindings"] = {**ref.get("bindings", {}), **override}
    bindings = _aet_bindings(entry, ref, m, values)
    generic = entry.system(m, enum)
    tmpl = ClassTemplate(generic.f1, generic.f2, tuple(entry.free_params(m, enum)))
    b = entry.bindings(m, values)
    params = {p: b[sp.Symbol(p)] for p in entry.params if sp.Symbol(p) in b}
    T = PointTransformation.additional(ref["id"], bindings)
    return verify_aet(T, generic, tmpl, params, listed_as_symmetry=ref.get("symmetry", False),
                      seed=seed), values, bindings


# ------------------------------------------------------------ entry driver

def verify_entry(entry: CatalogEntry, seed: int = 0, m: int | None = None) -> EntryReport:
    """Run every check attached to a catalog entry; failures become report lines."""
    checks: list[CheckResult] = []
    ms = (m,) if m is not None else entry.ms
    try:
        for mm in ms:
            _verify_at(entry, mm, seed, checks)
            _disputed_checks(entry, mm, seed, checks)
    except Exception as exc:  # any engine error is a failed check, not a crash
        checks.append(CheckResult("error", type(exc).__name__, ms[0], "", FAIL, str(exc)[:300]))
    if entry.quarantine:
        status = QUARANTINED
    else:
        status = FAIL if any(c.failed for c in checks) else PASS
    note = entry.quarantine or entry.erratum
    return EntryReport(entry.id, entry.table, entry.row, entry.anchor, status, checks, note)


def _admissible(entry: CatalogEntry, m: int, extra: Mapping[str, str]) -> bool:
    """False when a condition of the entry is violated identically by ``extra``."""
    return all(normalize(c) != 0 for c in entry.condition_exprs(m, extra))


def _holds(entry: CatalogEntry, m: int, values: Mapping[str, str], when: Mapping[str, str]) -> bool:
    here = entry.bindings(m, values)
    there = entry.bindings(m, {**values, **when})
    return all(normalize(here.get(k, k) - there[k]) == 0 for k in map(sp.Symbol, when))


def _verify_at(entry: CatalogEntry, m: int, seed: int, checks: list[CheckResult]):
    diagonal = entry.kind is Kind.DIAGONAL
    base_tokens = _tokens(entry.symmetries)
    ran_blocks: set[int] = set()
    for enum in entry.enumerations():
        if not _admissible(entry, m, enum):
            continue
        sys = entry.system(m, enum)
        _symmetry_checks(entry, sys, entry.symmetries, enum, m, seed, checks)
        inst = concrete_instance(entry, m, enum, seed,
                                 avoid_when=[b["when"] for b in entry.conditional
                                             if not set(b["when"]) <= set(enum)])
        sys_i = entry.system(m, inst)
        _closure_check(entry, sys_i, entry.symmetries, inst, m, seed, checks)
        flags_apply = diagonal and normalize(sys_i.a) != 0
        if flags_apply:
            expected = dict(base_tokens)
            if entry.flags:
                expected.update(entry.flags)
            for block in entry.conditional:
                if m not in block.get("m", entry.ms):
                    # the row makes no claim at this dimension
                    for k, on in _tokens(block["symmetries"]).items():
                        if on and not base_tokens[k]:
                            expected[k] = None
                    continue
                if _holds(entry, m, inst, block["when"]):
                    for k, on in _tokens(block["symmetries"]).items():
                        expected[k] = expected[k] or on
                    continue
                # a conditional generator must be absent off its condition
                for k, on in _tokens(block["symmetries"]).items():
                    if on and not base_tokens[k] and not (entry.flags or {}).get(k):
                        expected[k] = False
            _flag_check(entry, sys_i, expected, inst, m, seed, checks)
        for i, block in enumerate(entry.conditional):
            if m not in block.get("m", entry.ms):
                continue
            extra = {**enum, **block["when"]}
            if not _admissible(entry, m, extra):
                continue
            ran_blocks.add(i)
            sys_c = entry.system(m, extra)
            texts = list(entry.symmetries) + list(block["symmetries"])
            _symmetry_checks(entry, sys_c, block["symmetries"], extra, m, seed, checks)
            inst_c = concrete_instance(entry, m, extra, seed)
            sys_ci = entry.system(m, inst_c)
            _closure_check(entry, sys_ci, texts, inst_c, m, seed, checks)
            if diagonal and normalize(sys_ci.a) != 0:
                want = {k: (True if on else None) for k, on in _tokens(texts).items()}
                _flag_check(entry, sys_ci, want, inst_c, m, seed, checks)
    for i, block in enumerate(entry.conditional):
        if m in block.get("m", entry.ms) and i not in ran_blocks:
            checks.append(CheckResult("symmetry", f"conditional block {i}", m, "", FAIL,
                                      "condition is never admissible"))
    if m == entry.ms[0]:
        for ref in entry.aet:
            runs = _aet_enums(entry, ref, m)
            if not runs:
                checks.append(CheckResult("aet", f"AET {ref['id']}", m, "", FAIL,
                                          "condition is never admissible"))
            for generic in runs:
                verdict, values, bindings = verify_aet_ref(entry, ref, m, seed, enum=generic)
                bl = ", ".join(f"{k}={to_text(w)}" for k, w in sorted(bindings.items()))
                detail = f"{verdict.status}; bindings {bl}"
                if not verdict.passed:
                    detail += "; " + (verdict.details[-1] if verdict.details else "")
                checks.append(CheckResult("aet", f"AET {ref['id']}", m, _label(values),
                                          PASS if verdict.passed else FAIL, detail))


def _aet_enums(entry: CatalogEntry, ref: Mapping, m: int) -> list[dict[str, str]]:
    """Enumeration instances compatible with an AET reference's condition."""
    when = ref.get("when", {})
    out = []
    for enum in entry.enumerations():
        if any(k in when and when[k] != w for k, w in enum.items()):
            continue
        if not _admissible(entry, m, {**enum, **when}):
            continue
        generic = {k: w for k, w in enum.items() if k not in when}
        if generic not in out:
            out.append(generic)
    return out


def _disputed_checks(entry: CatalogEntry, m: int, seed: int, checks: list[CheckResult]):
    """Printed claims recorded as refuted: they must still fail, otherwise FAIL."""
    for item in entry.disputed:
        if m not in item.get("m", entry.ms):
            continue
        reason = item["reason"]
        if "aet" in item:
            if m != entry.ms[0]:
                continue
            ref = item["aet"]
            runs = _aet_enums(entry, ref, m) or [{}]
            results = [verify_aet_ref(entry, ref, m, seed, enum=g) for g in runs]
            failed = [r for r in results if not r[0].passed]
            refuted = bool(failed)
            values = (failed or results)[0][1]
            checks.append(CheckResult("aet", f"AET {ref['id']} (printed)", m, _label(values),
                                      DISPUTED if refuted else FAIL,
                                      reason if refuted else "printed claim now verifies"))
            continue
        printed = entry.as_printed(item)
        refuted_at = None
        for enum in entry.enumerations():
            extra = {**enum, **item.get("when", {})}
            sys = printed.system(m, extra)
            domain = _domain(printed, m, extra, seed)
            if any(not check_symmetry(X, sys, domain).passed
                   for _, X in printed.fields([item["symmetry"]], sys, extra)):
                refuted_at = extra
                break
        checks.append(CheckResult(
            "symmetry", f"{item['symmetry']} (printed)", m, _label(refuted_at or {}),
            DISPUTED if refuted_at is not None else FAIL,
            reason if refuted_at is not None else "printed claim now verifies"))


# ------------------------------------------------------------- batch driver

def _work(args):
    entry, seed, m = args
    return verify_entry(entry, seed, m)


def verify_all(entries: list[CatalogEntry], seed: int = 0, jobs: int = 1, m: int | None = None,
               path=None) -> VerificationReport:
    """Verify entries in order; with ``jobs > 1`` entries are spread over processes."""
    tasks = [(e, seed, m) for e in entries]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_work, tasks))
    else:
        reports = [_work(t) for t in tasks]
    return VerificationReport(reports, seed, catalog_hash(path))
