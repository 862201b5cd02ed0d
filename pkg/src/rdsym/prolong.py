"""Second prolongation, on-shell invariance checks and Lie brackets."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
import sympy as sp

from .expr import (MAX_JET_ORDER, Expr, JetOrderError, SamplingDomain, SymbolTable,
                   ZeroVerdict, diff, is_zero, jet, normalize, opaque_applications)
from .model import DiffusionSystem, Kind, VectorField, t, u, v


def _table(sys: DiffusionSystem | None, table: SymbolTable | None, m: int) -> SymbolTable:
    if table is not None:
        return table
    if sys is not None:
        return sys.symbols
    return SymbolTable(m=m)


def total_derivative(e: Expr, s, table: SymbolTable) -> Expr:
    """D_s e: explicit dependence plus the chain through every u, v jet in e."""
    e = sp.sympify(e)
    s = sp.sympify(s)
    if s.name not in {x.name for x in table.independents}:
        raise ValueError(f"{s} is not an independent variable")
    out = diff(e, s, table)
    for sym in e.free_symbols:
        dj = table.is_dependent_jet(sym)
        if dj is None:
            continue
        dep, idx = dj
        if len(idx) + 1 > MAX_JET_ORDER:
            raise JetOrderError(f"D_{s} of {sym} exceeds the tracked jet order {MAX_JET_ORDER}")
        out += sp.diff(e, sym) * jet(dep, *idx, s.name)
    return out


def total_derivative_multi(e: Expr, index, table: SymbolTable) -> Expr:
    for s in index:
        e = total_derivative(e, sp.Symbol(s) if isinstance(s, str) else s, table)
    return e


def prolongation_coefficient(X: VectorField, dep: str, index, table: SymbolTable) -> Expr:
    """phi^dep_J = D_J(Q) + eta u_{J t} + xi^mu u_{J x_mu}, Q the characteristic."""
    phi = X.phi1 if dep == "u" else X.phi2
    q = phi - X.eta * jet(dep, "t") - sum(c * jet(dep, f"x{i + 1}") for i, c in enumerate(X.xi))
    index = tuple(index)
    out = total_derivative_multi(q, index, table)
    out += X.eta * jet(dep, *index, "t")
    out += sum(c * jet(dep, *index, f"x{i + 1}") for i, c in enumerate(X.xi))
    return out


def equations(sys: DiffusionSystem) -> tuple[Expr, Expr]:
    """The two equations written as expressions that vanish on solutions."""
    m = sys.m
    lap_u = sum(jet("u", f"x{i}", f"x{i}") for i in range(1, m + 1))
    lap_v = sum(jet("v", f"x{i}", f"x{i}") for i in range(1, m + 1))
    d1 = jet("u", "t") - lap_u - sys.f1
    if sys.kind is Kind.DIAGONAL:
        d2 = jet("v", "t") - sys.a * lap_v - sys.f2
    else:
        d2 = jet("v", "t") - sys.p * jet("u", f"x{m}") - sys.f2
    return d1, d2


def evolution_rhs(sys: DiffusionSystem) -> dict[str, Expr]:
    d1, d2 = equations(sys)
    return {"u": jet("u", "t") - d1, "v": jet("v", "t") - d2}


def on_shell(e: Expr, sys: DiffusionSystem, table: SymbolTable | None = None) -> Expr:
    """Eliminate every jet containing a t-derivative using the system."""
    table = _table(sys, table, sys.m)
    rhs = evolution_rhs(sys)
    cache: dict[sp.Symbol, Expr] = {}
    for _ in range(32):
        targets = []
        for sym in e.free_symbols:
            dj = table.is_dependent_jet(sym)
            if dj and "t" in dj[1]:
                targets.append((sym, dj))
        if not targets:
            return e
        repl = {}
        for sym, (dep, idx) in targets:
            if sym not in cache:
                rest = list(idx)
                rest.remove("t")
                cache[sym] = total_derivative_multi(rhs[dep], rest, table)
            repl[sym] = cache[sym]
        e = e.xreplace(repl)
    raise RuntimeError("on-shell reduction did not terminate")


def prolong2_apply(X: VectorField, sys: DiffusionSystem,
                   table: SymbolTable | None = None) -> tuple[Expr, Expr]:
    """pr^(2) X applied to both equations and reduced on-shell (normalized)."""
    table = _table(sys, table, sys.m)
    out = []
    indep = table.independents
    coeffs: dict[sp.Symbol, Expr] = {}
    for d in equations(sys):
        res = sum(c * sp.diff(d, s) for c, s in zip((X.eta, *X.xi), indep))
        for sym in sorted(d.free_symbols, key=lambda s: s.name):
            dj = table.is_dependent_jet(sym)
            if dj is None:
                continue
            if sym not in coeffs:
                coeffs[sym] = prolongation_coefficient(X, dj[0], dj[1], table)
            res += coeffs[sym] * sp.diff(d, sym)
        res = normalize(res)
        out.append(normalize(on_shell(res, sys, table)))
    return out[0], out[1]


@dataclass
class SymmetryReport:
    field: VectorField
    system: DiffusionSystem
    residual1: Expr
    residual2: Expr
    verdict1: ZeroVerdict
    verdict2: ZeroVerdict
    log: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict1.zero and self.verdict2.zero

    @property
    def status(self) -> str:
        if not self.passed:
            return "FAIL"
        if self.verdict1.status.value == "PROVED_ZERO" and self.verdict2.status.value == "PROVED_ZERO":
            return "PASS(PROVED)"
        return "PASS(PROBED)"


def check_symmetry(X: VectorField, sys: DiffusionSystem, domain: SamplingDomain | None = None,
                   table: SymbolTable | None = None) -> SymmetryReport:
    r1, r2 = prolong2_apply(X, sys, table)
    domain = domain or SamplingDomain()
    v1 = is_zero(r1, domain, normal=False)
    v2 = is_zero(r2, domain, normal=False)
    log = [f"residual1: {v1.status} (max rel {v1.max_relative:.2e}, probes {v1.probes})",
           f"residual2: {v2.status} (max rel {v2.max_relative:.2e}, probes {v2.probes})"]
    return SymmetryReport(X, sys, r1, r2, v1, v2, log)


# --------------------------------------------------------------- brackets

def apply_field(X: VectorField, g: Expr, table: SymbolTable) -> Expr:
    """X(g) for g a function of (t, x, u, v)."""
    coords = (*table.independents, u, v)
    return sum(c * diff(g, s, table) for c, s in zip(X.components, coords))


def lie_bracket(X: VectorField, Y: VectorField, table: SymbolTable | None = None) -> VectorField:
    if X.m != Y.m:
        raise ValueError("fields live in different dimensions")
    table = _table(None, table, X.m)
    comps = [normalize(apply_field(X, b, table) - apply_field(Y, a, table))
             for a, b in zip(X.components, Y.components)]
    return VectorField.from_components(comps[0], comps[1:-2], comps[-2], comps[-1])


@dataclass
class ClosureResult:
    closed: bool
    constants: dict[tuple[int, int], tuple] = field(default_factory=dict)
    witness: tuple[int, int] | None = None
    witness_bracket: VectorField | None = None
    symbolic_only: list[tuple[int, int]] = field(default_factory=list)

    def __bool__(self):
        return self.closed


def _numeric_components(fields, table: SymbolTable, rng, n_points: int):
    """Evaluate every component of every field at shared random points."""
    exprs = [c for X in fields for c in X.components]
    apps = set()
    for e in exprs:
        apps |= opaque_applications(e)
    repl = {a: sp.Dummy() for a in apps}
    exprs = [sp.sympify(e).xreplace(repl) for e in exprs]
    syms = sorted(set().union(*(e.free_symbols for e in exprs)), key=lambda s: s.name)
    fn = sp.lambdify(syms, exprs, modules="numpy")
    rows = []
    for _ in range(n_points):
        pt = [rng.uniform(0.3, 1.7) if s.name in ("u", "v") else rng.uniform(-1.2, 1.2) for s in syms]
        vals = np.array([complex(x) for x in fn(*pt)] if syms else [complex(sp.N(e)) for e in exprs])
        rows.append(vals.reshape(len(fields), -1))
    return np.stack(rows)  # (points, fields, components)


def _snap(x: float, max_den: int = 1000, tol: float = 1e-9):
    f = Fraction(x).limit_denominator(max_den)
    if abs(float(f) - x) <= tol * max(1.0, abs(x)):
        return sp.Rational(f.numerator, f.denominator)
    return None


def closure_check(fields: list[VectorField], table: SymbolTable | None = None,
                  seed: int = 0, n_points: int = 12) -> ClosureResult:
    """Check all pairwise brackets lie in the span with constant coefficients."""
    if not fields:
        raise ValueError("empty field list")
    table = _table(None, table, fields[0].m)
    rng = np.random.default_rng(seed)
    n = len(fields)
    result = ClosureResult(True)
    for i, j in combinations(range(n), 2):
        B = lie_bracket(fields[i], fields[j], table)
        data = _numeric_components(list(fields) + [B], table, rng, n_points)
        A = data[:, :n, :].transpose(0, 2, 1).reshape(-1, n)
        b = data[:, n, :].reshape(-1)
        coef, *_ = np.linalg.lstsq(A, b, rcond=None)
        resid = np.linalg.norm(A @ coef - b) / max(1.0, np.linalg.norm(b))
        snapped = None
        if resid < 1e-7 and np.all(np.abs(coef.imag) < 1e-9):
            snapped = [_snap(float(c.real)) for c in coef]
        if snapped is not None and all(s is not None for s in snapped):
            combo = VectorField.zero(B.m)
            for c, X in zip(snapped, fields):
                combo = combo + c * X
            if all(is_zero(p - q).zero for p, q in zip(B.components, combo.components)):
                result.constants[(i, j)] = tuple(snapped)
                continue
        if resid < 1e-7:
            # in the span numerically but not reconstructible as small rationals
            result.symbolic_only.append((i, j))
            result.constants[(i, j)] = tuple(complex(c) for c in coef)
            continue
        return ClosureResult(False, result.constants, (i, j), B)
    return result
