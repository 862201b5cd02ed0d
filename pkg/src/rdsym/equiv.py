"""Equivalence transformations, class templates and additional-transformation checks."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from .expr import (Expr, SamplingDomain, SymbolTable, is_opaque, is_zero, normalize,
                   opaque_applications)
from .model import DiffusionSystem, Kind, VectorField, t, u, v
from .prolong import total_derivative


class NonClassPreserving(ValueError):
    """The transformed equations are not autonomous equations of the same kind."""

    def __init__(self, message: str, offending: Expr | None = None):
        super().__init__(message)
        self.offending = offending


class TransformKind(enum.Enum):
    LINEAR_MIX = "LINEAR_MIX"
    AET = "AET"
    EUCLIDEAN = "EUCLIDEAN"


# Each additional transformation: parameter names and the replacements for u and v.
# "xm" stands for the last spatial coordinate.
_AET_SOURCE: dict[int, tuple[str, str]] = {
    1: ("exp(rho*t)*u", "exp(rho*t)*v"),
    2: ("u + omega*t", "v"),
    3: ("u", "v + rho*t"),
    4: ("u + mu*rho*t", "exp(-rho*t)*v"),
    5: ("exp(rho*t)*u", "v - kappa*rho*t"),
    6: ("u", "v + rho*t*u"),
    7: ("exp(2*omega*t)*u", "v + omega*t^2"),
    8: ("u + omega*t^2", "v*exp(2*omega*t)"),
    9: ("u", "v - 2*rho*t*u + rho*delta*t^2"),
    10: ("exp(2*rho*t)*u", "exp(2*rho*t)*(v + omega*t*u + rho*t^2*u)"),
    11: ("u + eta*rho*t", "v - rho*t"),
    12: ("exp(kappa*t)*u", "exp(kappa*t)*(v - nu*kappa*t*u)"),
    13: ("u + 2*rho*t", "v + 2*rho*t*u + 2*rho^2*t^2"),
    14: ("exp(omega*t)*u", "exp(rho*t)*v"),
    15: ("exp(nu*omega*t)*(u*cos(omega*sigma*t) + v*sin(omega*sigma*t))",
         "exp(nu*omega*t)*(v*cos(omega*sigma*t) - u*sin(omega*sigma*t))"),
    16: ("exp(2*omega*t)*(u*cos(sigma*omega*t^2) - v*sin(sigma*omega*t^2))",
         "exp(2*omega*t)*(v*cos(sigma*omega*t^2) + u*sin(sigma*omega*t^2))"),
    17: ("exp(lam*omega*t^2)*(u*cos(2*omega*t) + v*sin(2*omega*t))",
         "exp(lam*omega*t^2)*(v*cos(2*omega*t) - u*sin(2*omega*t))"),
    18: ("exp(nu*omega*t)*u", "exp(nu*omega*t)*(v - sigma*omega*t*u)"),
    19: ("exp(lam*omega*t^2)*u", "exp(lam*omega*t^2)*(v + 2*omega*t*u)"),
    20: ("exp(2*omega*t)*u", "exp(eps*omega*t^2)*v"),
    21: ("u + 3*omega*t", "v + 3*omega*t^2*u + 3*omega^2*t^3 + rho*t*u + 3*omega*rho*t^2"),
    22: ("u + rho*xm", "v"),
}

AET_PARAMETERS = ("rho", "omega", "mu", "kappa", "nu", "sigma", "lam", "delta", "eta", "eps")


def aet_map(aet_id: int, m: int) -> tuple[Expr, Expr]:
    """(U, V): the expressions replacing u and v for additional transformation ``aet_id``."""
    if aet_id not in _AET_SOURCE:
        raise KeyError(f"no additional transformation number {aet_id}")
    from .expr import parse
    table = SymbolTable(m=m, params=AET_PARAMETERS)
    out = []
    for src in _AET_SOURCE[aet_id]:
        out.append(parse(src.replace("xm", f"x{m}"), table, normal=False))
    return out[0], out[1]


def aet_parameters(aet_id: int) -> tuple[str, ...]:
    U, V = aet_map(aet_id, 1)
    names = {s.name for s in (U.free_symbols | V.free_symbols)} & set(AET_PARAMETERS)
    return tuple(sorted(names))


# ------------------------------------------------------------ transformations

@dataclass(frozen=True)
class PointTransformation:
    """An equivalence transformation acting on systems and vector fields.

    LINEAR_MIX: new dependents K w + b with t -> t / lam^2, x -> x / lam; with
    ``tilde`` set, new dependents K w, t -> a t, x unchanged and a -> 1/a.
    AET: old (u, v) replaced by the affine expressions of transformation ``aet``
    in the new variables, t and x unchanged.
    EUCLIDEAN: t -> t + shift_t, x -> R x + shift_x.
    """

    kind: TransformKind
    K: tuple = ((1, 0), (0, 1))
    b: tuple = (0, 0)
    lam: Expr = sp.Integer(1)
    tilde: bool = False
    aet: int | None = None
    bindings: tuple = ()
    R: tuple | None = None
    shift_t: Expr = sp.Integer(0)
    shift_x: tuple = ()

    # constructors
    @classmethod
    def linear_mix(cls, K, b=(0, 0), lam=1) -> "PointTransformation":
        K = tuple(tuple(sp.sympify(c) for c in row) for row in K)
        return cls(TransformKind.LINEAR_MIX, K, tuple(sp.sympify(c) for c in b), sp.sympify(lam))

    @classmethod
    def mix_tilde(cls, K) -> "PointTransformation":
        K = tuple(tuple(sp.sympify(c) for c in row) for row in K)
        return cls(TransformKind.LINEAR_MIX, K, (sp.Integer(0), sp.Integer(0)), sp.Integer(1), True)

    @classmethod
    def additional(cls, aet_id: int, bindings: Mapping | None = None) -> "PointTransformation":
        aet_map(aet_id, 1)
        items = tuple(sorted((str(k), sp.sympify(v)) for k, v in (bindings or {}).items()))
        return cls(TransformKind.AET, aet=aet_id, bindings=items)

    @classmethod
    def euclidean(cls, R, shift_t=0, shift_x=()) -> "PointTransformation":
        R = tuple(tuple(sp.sympify(c) for c in row) for row in R)
        return cls(TransformKind.EUCLIDEAN, R=R, shift_t=sp.sympify(shift_t),
                   shift_x=tuple(sp.sympify(c) for c in shift_x))

    @property
    def matrix(self) -> sp.Matrix:
        return sp.Matrix(self.K)

    def binding_map(self) -> dict[sp.Symbol, Expr]:
        """Bindings with references between them resolved (e.g. rho = mu*omega)."""
        out = {sp.Symbol(k): val for k, val in self.bindings}
        for _ in range(len(out) + 1):
            new = {k: val.xreplace(out) for k, val in out.items()}
            if new == out:
                break
            out = new
        return out

    def with_bindings(self, bindings: Mapping) -> "PointTransformation":
        merged = dict(self.bindings)
        merged.update({str(k): sp.sympify(v) for k, v in bindings.items()})
        return PointTransformation.additional(self.aet, merged)

    def compose(self, other: "PointTransformation") -> "PointTransformation":
        """The transformation applying ``self`` first, then ``other``."""
        if self.kind is not TransformKind.LINEAR_MIX or other.kind is not TransformKind.LINEAR_MIX:
            raise ValueError("composition is implemented for LINEAR_MIX only")
        K1, K2 = self.matrix, other.matrix
        if not self.tilde and not other.tilde:
            K = K2 * K1
            b = K2 * sp.Matrix(self.b) + sp.Matrix(other.b)
            return PointTransformation.linear_mix(K.tolist(), list(b), self.lam * other.lam)
        if self.tilde and other.tilde:
            return PointTransformation.linear_mix((K2 * K1).tolist(), (0, 0), 1)
        raise ValueError("mixed composition of the two LINEAR_MIX families is not closed in this form")


def _require(cond: bool, message: str):
    if not cond:
        raise ValueError(message)


def _check_mix(T: PointTransformation, sys: DiffusionSystem):
    K = T.matrix
    _require(K.shape == (2, 2) and normalize(K.det()) != 0, "mixing matrix must be invertible")
    _require(sys.kind is Kind.DIAGONAL, "LINEAR_MIX is defined for the diagonal kind")
    a = sys.a
    A = sp.diag(1, a)
    if T.tilde:
        _require(normalize(a) != 0, "the a -> 1/a move requires a != 0")
        lhs = K * A * K.inv()
        rhs = a * sp.diag(1, 1 / a)
        _require(all(normalize(x) == 0 for x in lhs - rhs), "K~ A(a) K~^-1 must equal a A(1/a)")
    else:
        _require(normalize(T.lam) != 0, "lambda must be nonzero")
        _require(all(normalize(x) == 0 for x in K * A - A * K), "K must commute with diag(1, a)")


def _mix_system(T: PointTransformation, sys: DiffusionSystem) -> DiffusionSystem:
    _check_mix(T, sys)
    K = T.matrix
    Kinv = K.inv()
    w = sp.Matrix([u, v])
    if T.tilde:
        old = Kinv * w
        scale = 1 / sys.a
        new_a = normalize(1 / sys.a)
    else:
        old = Kinv * (w - sp.Matrix(T.b))
        scale = T.lam ** 2
        new_a = sys.a
    sub = {u: old[0], v: old[1]}
    fold = sp.Matrix([sys.f1.xreplace(sub), sys.f2.xreplace(sub)])
    fnew = scale * K * fold
    return DiffusionSystem(sys.m, normalize(fnew[0]), normalize(fnew[1]), kind=sys.kind,
                           a=new_a, p=sys.p, constraints=sys.constraints, table=sys.table)


def _aet_table(sys: DiffusionSystem) -> SymbolTable:
    return sys.symbols.extend(params=AET_PARAMETERS)


def substitution(T: PointTransformation, m: int) -> tuple[Expr, Expr]:
    """Old (u, v) as functions of (t, x) and the new dependents for an AET."""
    U, V = aet_map(T.aet, m)
    bind = T.binding_map()
    return U.xreplace(bind), V.xreplace(bind)


def inverse_substitution(T: PointTransformation, m: int) -> tuple[Expr, Expr]:
    """New dependents as functions of (t, x) and the old (u, v)."""
    U, V = substitution(T, m)
    uo, vo = sp.symbols("u_old v_old")
    sol = sp.solve([U - uo, V - vo], [u, v], dict=True)
    if len(sol) != 1:
        raise ValueError("substitution is not invertible")
    back = {uo: u, vo: v}
    return (normalize(sp.simplify(sol[0][u]).xreplace(back)),
            normalize(sp.simplify(sol[0][v]).xreplace(back)))


def _lap(e: Expr, table: SymbolTable) -> Expr:
    out = sp.Integer(0)
    for x in table.xs:
        out += total_derivative(total_derivative(e, x, table), x, table)
    return out


def substitute_dependents(sys: DiffusionSystem, U: Expr, V: Expr,
                          table: SymbolTable | None = None) -> DiffusionSystem:
    """Rewrite the system for new dependents defined by u = U, v = V (t, x fixed)."""
    table = table or _aet_table(sys)
    from .expr import jet
    ut, vt = jet("u", "t"), jet("v", "t")
    sub = {u: U, v: V}
    old_f1 = sys.f1.xreplace(sub)
    old_f2 = sys.f2.xreplace(sub)
    m = sys.m
    e1 = total_derivative(U, t, table) - _lap(U, table) - old_f1
    if sys.kind is Kind.DIAGONAL:
        e2 = total_derivative(V, t, table) - sys.a * _lap(V, table) - old_f2
    else:
        e2 = total_derivative(V, t, table) - sys.p * total_derivative(U, table.xs[-1], table) - old_f2
    sol = sp.solve([e1, e2], [ut, vt], dict=True)
    if len(sol) != 1:
        raise NonClassPreserving("substitution does not determine the evolution equations")
    lap_u = sum(jet("u", f"x{i}", f"x{i}") for i in range(1, m + 1))
    lap_v = sum(jet("v", f"x{i}", f"x{i}") for i in range(1, m + 1))
    f1 = _positive_normal(sol[0][ut] - lap_u)
    if sys.kind is Kind.DIAGONAL:
        f2 = _positive_normal(sol[0][vt] - sys.a * lap_v)
    else:
        f2 = _positive_normal(sol[0][vt] - sys.p * jet("u", f"x{m}"))
    clean = []
    for name, f in (("f1", f1), ("f2", f2)):
        f, bad = _drop_spurious(f, table)
        if bad is not None:
            raise NonClassPreserving(f"transformed {name} depends on {bad}", bad)
        clean.append(f)
    f1, f2 = clean
    return DiffusionSystem(m, f1, f2, kind=sys.kind, a=sys.a, p=sys.p,
                           constraints=sys.constraints, table=table)


def _positive_normal(e: Expr) -> Expr:
    """Normal form assuming positive dependents, so (u e^{rt})^q = u^q e^{qrt}."""
    e = sp.expand(e)
    # factor bases of fractional powers so e^{ct} factors can be pulled out
    e = e.replace(lambda x: x.is_Pow and not x.exp.is_Integer and x.base.is_Add,
                  lambda x: sp.factor(x.base) ** x.exp)
    e = sp.expand_power_base(sp.powdenest(e, force=True), force=True)
    if e.has(sp.sin, sp.cos):
        # rotations leave u^2 + v^2 inside logarithms as a trigonometric sum
        e = e.replace(lambda x: isinstance(x, sp.log) and x.args[0].has(sp.sin, sp.cos),
                      lambda x: sp.log(sp.factor(sp.trigsimp(x.args[0]))))
    e = sp.expand_log(e, force=True)
    return normalize(sp.powsimp(e, combine="exp"))


def _offending(f: Expr, table: SymbolTable) -> Expr | None:
    """Terms of f that involve t, x or derivatives of u, v."""
    forbidden = set(table.independents)
    for s in f.free_symbols:
        dj = table.is_dependent_jet(s)
        if dj and dj[1]:
            forbidden.add(s)
    bad = [term for term in sp.Add.make_args(f) if term.free_symbols & forbidden]
    if not bad:
        return None
    total = normalize(sp.Add(*bad))
    return None if total == 0 else total


def _drop_spurious(f: Expr, table: SymbolTable) -> tuple[Expr, Expr | None]:
    """Remove apparent dependence on t, x or jets that vanishes under differentiation.

    Inverse trigonometric functions can hide an identity such as
    atan((v cos s - u sin s)/(u cos s + v sin s)) = atan(v/u) - s; the
    derivative test is branch free, and f is then locally equal to its value
    at the origin of the offending symbols.
    """
    bad = _offending(f, table)
    if bad is None:
        return f, None
    if not bad.has(sp.atan, sp.acos, sp.asin, sp.atan2):
        return f, bad
    syms = [s for s in bad.free_symbols
            if s in table.independents or (table.is_dependent_jet(s) or (None, None))[1]]
    if not all(is_zero(sp.diff(f, s)).zero for s in syms):
        return f, bad
    return _positive_normal(f.subs({s: 0 for s in syms})), None


def apply_to_system(T: PointTransformation, sys: DiffusionSystem) -> DiffusionSystem:
    """Push a system forward through an equivalence transformation."""
    if T.kind is TransformKind.LINEAR_MIX:
        return _mix_system(T, sys)
    if T.kind is TransformKind.EUCLIDEAN:
        R = sp.Matrix(T.R)
        _require(R.shape == (sys.m, sys.m), "rotation has the wrong size")
        _require(all(normalize(x) == 0 for x in R.T * R - sp.eye(sys.m)), "R must be orthogonal")
        if sys.kind is Kind.FIRST_ORDER:
            em = sp.zeros(sys.m, 1)
            em[-1] = 1
            col = R * em
            _require(all(normalize(col[i]) == 0 for i in range(sys.m - 1)),
                     "R must preserve the x_m axis for the first-order coupled kind")
            _require(normalize(col[-1] - 1) == 0, "R must preserve the orientation of x_m")
        return sys
    U, V = substitution(T, sys.m)
    return substitute_dependents(sys, U, V)


def pushforward(T: PointTransformation, X: VectorField, sys: DiffusionSystem) -> VectorField:
    """T_* X for an AET or LINEAR_MIX transformation."""
    m = sys.m
    table = _aet_table(sys)
    if T.kind is TransformKind.AET:
        U, V = substitution(T, m)
        Wu, Wv = inverse_substitution(T, m)
        sub = {u: U, v: V}
        comps = [c.xreplace(sub) for c in X.components]
        eta, xi = comps[0], comps[1:m + 1]
        coords = (*table.independents, u, v)
        new = []
        for W in (Wu, Wv):
            val = sum(c * sp.diff(W, s) for c, s in zip(X.components, coords))
            new.append(normalize(val.xreplace(sub)))
        return VectorField.from_components(normalize(eta), [normalize(c) for c in xi], *new)
    if T.kind is TransformKind.LINEAR_MIX:
        K = T.matrix
        w = sp.Matrix([u, v])
        if T.tilde:
            old = K.inv() * w
            st, sx = sys.a, sp.Integer(1)
        else:
            old = K.inv() * (w - sp.Matrix(T.b))
            st, sx = T.lam ** -2, T.lam ** -1
        xs = table.xs
        sub = {u: old[0], v: old[1], t: t / st, **{x: x / sx for x in xs}}
        comps = [c.xreplace(sub) for c in X.components]
        phi = K * sp.Matrix(comps[m + 1:])
        return VectorField.from_components(normalize(st * comps[0]),
                                           [normalize(sx * c) for c in comps[1:m + 1]],
                                           normalize(phi[0]), normalize(phi[1]))
    return X


# --------------------------------------------------------------- templates

@dataclass(frozen=True)
class ClassTemplate:
    """Nonlinearity templates with parameter slots and arbitrary-function slots.

    ``free`` lists the parameters that may be re-solved when matching; the
    remaining parameters must keep the values in ``fixed``.
    """

    f1: Expr
    f2: Expr
    free: tuple[str, ...] = ()
    fixed: tuple = ()

    def slots(self) -> list:
        apps = opaque_applications(self.f1) | opaque_applications(self.f2)
        return sorted(apps, key=sp.default_sort_key)


@dataclass
class MatchResult:
    ok: bool
    params: dict = field(default_factory=dict)
    slots: dict = field(default_factory=dict)
    reason: str = ""

    def __bool__(self):
        return self.ok


def _linear_split(T: Expr, app) -> tuple[Expr, Expr] | None:
    d = sp.Dummy("s")
    Td = T.xreplace({app: d})
    A = sp.diff(Td, d)
    if sp.diff(A, d) != 0:
        return None
    B = normalize(Td.xreplace({d: 0}))
    return normalize(A), B


def _function_of(c: Expr, w: Expr) -> Expr:
    """Jacobian obstruction to c(u, v) being a function of w(u, v)."""
    return normalize(sp.diff(c, u) * sp.diff(w, v) - sp.diff(c, v) * sp.diff(w, u))


def _match_residuals(sys: DiffusionSystem, tmpl: ClassTemplate, values: Mapping):
    """Residual expressions (must all vanish) and slot candidates for given parameters."""
    sub = {sp.Symbol(k): v_ for k, v_ in values.items()}
    T = [tmpl.f1.xreplace(sub), tmpl.f2.xreplace(sub)]
    f = [sys.f1, sys.f2]
    residuals: list[Expr] = []
    slots: dict = {}
    for c in (0, 1):
        apps = sorted(opaque_applications(T[c]), key=sp.default_sort_key)
        if not apps:
            residuals.append(normalize(f[c] - T[c]))
            continue
        if len(apps) > 1:
            raise ValueError("templates with several slots in one component are not supported")
        app = apps[0]
        split = _linear_split(T[c], app)
        if split is None:
            raise ValueError("template is not linear in its arbitrary function")
        A, B = split
        if A == 0:
            residuals.append(normalize(f[c] - B))
            continue
        cand = normalize(sp.cancel((f[c] - B) / A))
        w = app.args[0]
        residuals.append(_function_of(cand, w))
        key = app.func
        if key in slots:
            residuals.append(normalize(cand - slots[key][1]))
        else:
            slots[key] = (w, cand)
    return residuals, slots


def _snap(x: float, max_den: int = 1000, tol: float = 1e-9):
    fr = Fraction(x).limit_denominator(max_den)
    if abs(float(fr) - x) <= tol * max(1.0, abs(x)):
        return sp.Rational(fr.numerator, fr.denominator)
    return None


def matches_class(sys: DiffusionSystem, tmpl: ClassTemplate, hint: Mapping | None = None,
                  domain: SamplingDomain | None = None, seed: int = 0) -> MatchResult:
    """Find parameter values and arbitrary-function redefinitions that reproduce sys."""
    table = sys.symbols
    for name, f in (("f1", sys.f1), ("f2", sys.f2)):
        bad = _offending(f, table)
        if bad is not None:
            return MatchResult(False, reason=f"{name} is not autonomous: {bad}")
    fixed = {k: sp.sympify(v_) for k, v_ in tmpl.fixed}
    hint = dict(hint or {})
    free = list(tmpl.free)
    domain = domain or SamplingDomain(seed=seed)

    def verify(values) -> MatchResult | None:
        allv = {**fixed, **values}
        try:
            residuals, slots = _match_residuals(sys, tmpl, allv)
        except ValueError as exc:
            return MatchResult(False, reason=str(exc))
        if all(is_zero(r, domain).zero for r in residuals):
            return MatchResult(True, allv, {str(k): v_ for k, v_ in slots.items()})
        return None

    if not free:
        res = verify({})
        return res or MatchResult(False, reason="template residual does not vanish")
    start = {k: sp.sympify(hint[k]) for k in free if k in hint}
    if len(start) == len(free):
        res = verify(start)
        if res is not None:
            return res
    res = _numeric_match(sys, tmpl, fixed, free, start, seed, verify)
    return res or MatchResult(False, reason="no parameter values reproduce the system")


def _numeric_match(sys, tmpl, fixed, free, start, seed, verify):
    from scipy.optimize import least_squares

    syms = [sp.Symbol(k) for k in free]
    probe = {k: sp.Dummy(k) for k in free}
    try:
        residuals, _ = _match_residuals(sys, tmpl, {**fixed, **probe})
    except ValueError:
        return None
    exprs = [r for r in residuals if r != 0]
    if not exprs:
        return verify({k: sp.Integer(0) for k in free})
    apps = set()
    for e in exprs:
        apps |= opaque_applications(e)
    others = sorted(set().union(*(e.free_symbols for e in exprs)) - set(probe.values()),
                    key=lambda s: s.name)
    variables = list(probe.values()) + others
    fn = sp.lambdify(variables, exprs, modules=["numpy"])
    rng = np.random.default_rng(seed)
    pts = [[rng.uniform(0.4, 1.6) for _ in others] for _ in range(10)]

    def resid(p):
        out = []
        for pt in pts:
            with np.errstate(all="ignore"):
                vals = fn(*p, *pt)
            out.extend(np.real_if_close(np.asarray(vals, dtype=complex)).real.ravel())
        r = np.asarray(out, dtype=float)
        return np.where(np.isfinite(r), r, 1e6)

    starts = [np.array([float(start.get(k, 0)) for k in free])]
    starts += [rng.uniform(-2, 2, len(free)) for _ in range(6)]
    for x0 in starts:
        try:
            sol = least_squares(resid, x0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
        except Exception:
            continue
        if not np.all(np.isfinite(sol.x)):
            continue
        snapped = [_snap(float(x)) for x in sol.x]
        if any(s is None for s in snapped):
            continue
        res = verify(dict(zip(free, snapped)))
        if res is not None:
            return res
    return None


# --------------------------------------------------------------- AET checks

PROBE_FAMILY = ("w^2", "exp(w)", "log(w)", "w")


class AETStatus(enum.Enum):
    CLASS_PRESERVED = "CLASS_PRESERVED"
    EQUIVALENT = "EQUIVALENT"
    NON_CLASS_PRESERVING = "NON_CLASS_PRESERVING"
    NO_EFFECT = "NO_EFFECT"

    def __str__(self):
        return self.value


@dataclass
class AETVerdict:
    aet: int
    status: AETStatus
    details: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status in (AETStatus.CLASS_PRESERVED, AETStatus.EQUIVALENT)


def probe_instances(tmpl_f: Sequence[Expr]) -> list[dict]:
    """All assignments of probe functions to the arbitrary-function slots."""
    apps = set()
    for f in tmpl_f:
        apps |= opaque_applications(f)
    funcs = sorted({a.func for a in apps}, key=lambda f: f.__name__)
    from .expr import parse
    w = sp.Symbol("w")
    probes = [parse(p, SymbolTable(extra=("w",))) for p in PROBE_FAMILY]
    out = []
    for combo in itertools.product(probes, repeat=len(funcs)):
        out.append({f: sp.Lambda(w, p) for f, p in zip(funcs, combo)})
    return out or [{}]


def instantiate(e: Expr, assignment: Mapping) -> Expr:
    """Replace arbitrary-function applications by concrete probe functions."""
    if not assignment:
        return e
    repl = {}
    for app in opaque_applications(e):
        if app.func in assignment:
            repl[app] = assignment[app.func](*app.args)
    return normalize(e.xreplace(repl))


def verify_aet(T: PointTransformation, sys: DiffusionSystem, tmpl: ClassTemplate,
               params: Mapping | None = None, listed_as_symmetry: bool = False,
               seed: int = 0) -> AETVerdict:
    """Apply an AET to every probe instance of a class and classify the outcome.

    ``sys`` is the class representative (arbitrary functions still as slots);
    ``params`` are the concrete row-parameter values used for the probes.
    """
    assert T.kind is TransformKind.AET
    params = {str(k): sp.sympify(v_) for k, v_ in (params or {}).items()}
    psub = {sp.Symbol(k): v_ for k, v_ in params.items()}
    Tp = PointTransformation.additional(T.aet, {k: v_.xreplace(psub) if hasattr(v_, "xreplace") else v_
                                                for k, v_ in T.bindings})
    base = sys.subs(psub)
    U, V = substitution(Tp, sys.m)
    if normalize(U - u) == 0 and normalize(V - v) == 0:
        return AETVerdict(T.aet, AETStatus.CLASS_PRESERVED, ["identity map under these bindings"])
    statuses = []
    details = []
    changed = False
    for assignment in probe_instances([base.f1, base.f2]):
        inst = base.with_rhs(instantiate(base.f1, assignment), instantiate(base.f2, assignment))
        try:
            new = apply_to_system(Tp, inst)
        except NonClassPreserving as exc:
            details.append(f"probe {_probe_label(assignment)}: {exc}")
            return AETVerdict(T.aet, AETStatus.NON_CLASS_PRESERVING, details)
        diff = [normalize(new.f1 - inst.f1), normalize(new.f2 - inst.f2)]
        if any(not is_zero(d).zero for d in diff):
            changed = True
        tmpl_fixed = ClassTemplate(tmpl.f1, tmpl.f2, tmpl.free,
                                   tuple((k, v_) for k, v_ in params.items() if k not in tmpl.free))
        res = matches_class(new, tmpl_fixed, hint=params, seed=seed)
        statuses.append(res.ok)
        details.append(f"probe {_probe_label(assignment)}: "
                       + ("matches template" if res.ok else f"autonomous, outside template ({res.reason})"))
    if not changed and not listed_as_symmetry:
        return AETVerdict(T.aet, AETStatus.NO_EFFECT, details + ["transformation leaves f unchanged"])
    status = AETStatus.CLASS_PRESERVED if all(statuses) else AETStatus.EQUIVALENT
    return AETVerdict(T.aet, status, details)


def _probe_label(assignment: Mapping) -> str:
    if not assignment:
        return "-"
    w = sp.Symbol("w")
    return ", ".join(f"{f.__name__}={lam(w)}" for f, lam in assignment.items())
