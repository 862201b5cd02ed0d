"""Determining equations, classifying-equation residuals and extension conditions."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import sympy as sp
from sympy.polys.matrices import DomainMatrix

from .expr import Expr, SamplingDomain, SymbolTable, ZeroVerdict, is_zero, normalize
from .model import (DiffusionSystem, Kind, VectorField, make_D, make_G, make_Ghat, make_K, t, u, v)
from .prolong import check_symmetry, prolong2_apply


# ----------------------------------------------------------- determining system

@dataclass
class DeterminingSystem:
    """Unknown coefficient functions and the equations they must satisfy identically."""

    unknowns: dict[str, tuple[sp.Symbol, ...]]
    equations: list[Expr]
    ansatz: VectorField | None = None

    def functions(self) -> dict[str, sp.Function]:
        return {name: sp.Function(name) for name in self.unknowns}

    def involves(self, e: Expr, names: Iterable[str]) -> bool:
        names = set(names)
        return any(f.func.__name__ in names for f in e.atoms(sp.core.function.AppliedUndef))

    def free_of(self, names: Iterable[str]) -> list[Expr]:
        """Equations that do not involve the named functions (e.g. the nonlinearities)."""
        return [e for e in self.equations if not self.involves(e, names)]

    def to_text(self) -> list[str]:
        return [f"{compact(e)} = 0" for e in self.equations]


def compact(e: Expr) -> str:
    """Print eta(t, x1, u, v) as eta and Derivative(eta, t, u) as eta_tu."""
    repl = {}
    for d in e.atoms(sp.Derivative):
        name = d.expr.func.__name__
        suffix = "".join(str(s) * n for s, n in d.variable_count)
        repl[d] = sp.Symbol(f"{name}_{suffix}")
    e = e.xreplace(repl)
    repl = {f: sp.Symbol(f.func.__name__) for f in e.atoms(sp.core.function.AppliedUndef)}
    return sp.sstr(e.xreplace(repl))


def general_ansatz(m: int, dependents: Sequence[str] = ("u", "v")) -> tuple[VectorField, dict]:
    """eta, xi^mu, pi^1, pi^2 as unknown functions of (t, x, u, v)."""
    xs = tuple(sp.Symbol(f"x{i}") for i in range(1, m + 1))
    args = (t, *xs, *(sp.Symbol(d) for d in dependents))
    names = ["eta", *(f"xi{i}" for i in range(1, m + 1)), "pi1", "pi2"]
    fns = {n: sp.Function(n)(*args) for n in names}
    if "v" not in dependents:
        fns["pi2"] = sp.Integer(0)
    X = VectorField(fns["eta"], tuple(fns[f"xi{i}"] for i in range(1, m + 1)), fns["pi1"], fns["pi2"])
    unknowns = {n: args for n in names if not (n == "pi2" and "v" not in dependents)}
    return X, unknowns


def opaque_system(m: int, kind: Kind = Kind.DIAGONAL, a=1, p=1) -> DiffusionSystem:
    """System whose nonlinearities are unspecified functions f1(u, v), f2(u, v)."""
    f1 = sp.Function("f1")(u, v)
    f2 = sp.Function("f2")(u, v)
    return DiffusionSystem(m, f1, f2, kind=kind, a=a, p=p)


def _jet_generators(e: Expr, table: SymbolTable) -> list[sp.Symbol]:
    gens = []
    for s in e.free_symbols:
        dj = table.is_dependent_jet(s)
        if dj and dj[1]:
            gens.append(s)
    return sorted(gens, key=lambda s: s.name)


def _canonical(e: Expr) -> Expr | None:
    """Scale an equation so its first term has coefficient one."""
    e = normalize(e)
    if e == 0:
        return None
    first = min(sp.Add.make_args(e), key=sp.default_sort_key)
    c = first.as_coeff_Mul()[0]
    return normalize(e / c) if c not in (0, 1) else e


def generate_determining(sys: DiffusionSystem, ansatz: VectorField | None = None,
                         unknowns: Mapping | None = None, which: Sequence[int] = (1, 2)
                         ) -> DeterminingSystem:
    """Collect coefficients of every jet monomial of the on-shell prolonged criterion.

    ``which`` selects the equations of the system (1 for u, 2 for v) to use, which
    allows the scalar heat block to be treated by passing ``which=(1,)``.
    """
    if ansatz is None:
        deps = ("u", "v") if 2 in which else ("u",)
        ansatz, unknowns = general_ansatz(sys.m, deps)
    unknowns = dict(unknowns or {})
    table = sys.symbols
    residuals = prolong2_apply(ansatz, sys, table)
    eqs: list[Expr] = []
    seen = set()
    for k in which:
        r = residuals[k - 1]
        if r == 0:
            continue
        gens = _jet_generators(r, table)
        if gens:
            coeffs = sp.Poly(r, *gens).coeffs()
        else:
            coeffs = [r]
        for c in coeffs:
            c = _canonical(c)
            if c is None or c in seen or -c in seen:
                continue
            seen.add(c)
            eqs.append(c)
    return DeterminingSystem(unknowns, eqs, ansatz)


def polynomial_solutions(dsys: DeterminingSystem, degree: int,
                         extra_generators: Sequence[Expr] = ()) -> list[dict[str, Expr]]:
    """Basis of solutions whose unknowns are polynomials of bounded total degree.

    Each equation must hold identically in the independent and dependent variables
    and in ``extra_generators`` (e.g. applications of opaque nonlinearities).
    """
    coeff_syms: list[sp.Symbol] = []
    polys: dict[str, Expr] = {}
    for name, args in dsys.unknowns.items():
        terms = []
        for powers in itertools.product(range(degree + 1), repeat=len(args)):
            if sum(powers) > degree:
                continue
            c = sp.Symbol(f"c_{name}_{'_'.join(map(str, powers))}")
            coeff_syms.append(c)
            terms.append(c * sp.Mul(*(a ** k for a, k in zip(args, powers))))
        polys[name] = sp.Add(*terms)
    fns = dsys.functions()
    all_args = sorted({a for args in dsys.unknowns.values() for a in args}, key=lambda s: s.name)
    rows: list[dict] = []
    for e in dsys.equations:
        e = e.subs({f: sp.Lambda(dsys.unknowns[n], polys[n]) for n, f in fns.items()}).doit()
        e = sp.expand(e)
        if e == 0:
            continue
        extra = list(extra_generators)
        for d in e.atoms(sp.Derivative) | e.atoms(sp.core.function.AppliedUndef):
            if d.free_symbols & set(coeff_syms):
                continue
            extra.append(d)
        gens = list(all_args) + extra
        num = sp.numer(sp.together(e))
        for c in sp.Poly(num, *gens).coeffs():
            rows.append(sp.Poly(c, *coeff_syms).as_dict())
    n = len(coeff_syms)
    if not rows:
        null = [[sp.Integer(int(i == j)) for i in range(n)] for j in range(n)]
    else:
        mat = [[sp.Integer(0)] * n for _ in rows]
        for i, r in enumerate(rows):
            for monom, val in r.items():
                if sum(monom) == 0:
                    raise ValueError("inhomogeneous determining equation")
                mat[i][monom.index(1)] = val
        dm = DomainMatrix.from_Matrix(sp.Matrix(mat)).to_field()
        null = [list(vec) for vec in dm.nullspace().to_Matrix().tolist()]
    out = []
    for vec in null:
        sub = dict(zip(coeff_syms, vec))
        out.append({name: sp.expand(p.xreplace(sub)) for name, p in polys.items()})
    return out


def _span_vectors(sols: Sequence[Mapping[str, Expr]], names: Sequence[str],
                  variables: Sequence[sp.Symbol]) -> tuple[list, list[dict]]:
    """Coefficient vectors of polynomial solutions over a shared monomial basis."""
    rows = []
    keys: list = []
    for sol in sols:
        row = {}
        for n in names:
            p = sp.Poly(sol.get(n, 0), *variables)
            for monom, c in p.as_dict().items():
                row[(n, monom)] = c
        rows.append(row)
        for k in row:
            if k not in keys:
                keys.append(k)
    return keys, rows


def _restrict(basis: list[dict], eq: Expr, fns: Mapping, unknowns: Mapping,
              variables: Sequence[sp.Symbol], opaque_names: Iterable[str]) -> list[dict] | None:
    """Impose eq on span(basis); None when eq still involves an opaque function."""
    ks = sp.symbols(f"k0:{len(basis)}")
    general = {n: sum(k * b[n] for k, b in zip(ks, basis)) for n in unknowns}
    e = eq.subs({f: sp.Lambda(unknowns[n], general[n]) for n, f in fns.items()}).doit()
    e = sp.expand(e)
    names = set(opaque_names)
    if any(f.func.__name__ in names for f in e.atoms(sp.core.function.AppliedUndef)):
        return None
    if e == 0:
        return basis
    rows = [[sp.Poly(c, *ks).coeff_monomial(k) for k in ks]
            for c in sp.Poly(e, *variables).coeffs()]
    dm = DomainMatrix.from_Matrix(sp.Matrix(rows)).to_field()
    null = dm.nullspace().to_Matrix().tolist()
    return [{n: sp.expand(sum(c * b[n] for c, b in zip(vec, basis))) for n in unknowns}
            for vec in null]


def reduced_solution_space(dsys: DeterminingSystem, degree: int,
                           opaque_names: Iterable[str] = ("f1", "f2")) -> list[dict]:
    """Polynomial solutions of the equations that become free of the nonlinearities.

    Starts from the equations that never involve the opaque functions and keeps
    adding every other equation that, restricted to the current solution space,
    no longer involves them. Equations that keep the nonlinearities (the
    classifying equations) are left out.
    """
    opaque_names = tuple(opaque_names)
    free = DeterminingSystem(dsys.unknowns, dsys.free_of(opaque_names))
    basis = polynomial_solutions(free, degree)
    fns = dsys.functions()
    variables = sorted({a for args in dsys.unknowns.values() for a in args}, key=lambda s: s.name)
    pending = [e for e in dsys.equations if dsys.involves(e, opaque_names)]
    changed = True
    while changed and pending and basis:
        changed = False
        for eq in list(pending):
            new = _restrict(basis, eq, fns, dsys.unknowns, variables, opaque_names)
            if new is not None:
                pending.remove(eq)
                changed = changed or len(new) != len(basis)
                basis = new
    return basis


def same_span(a: Sequence[Mapping], b: Sequence[Mapping], names: Sequence[str],
              variables: Sequence[sp.Symbol]) -> tuple[bool, bool]:
    """(span a contains span b, span b contains span a)."""
    keys, ra = _span_vectors(a, names, variables)
    keys_b, rb = _span_vectors(b, names, variables)
    for k in keys_b:
        if k not in keys:
            keys.append(k)

    def mat(rows):
        return sp.Matrix([[r.get(k, 0) for k in keys] for r in rows]) if rows else sp.zeros(0, len(keys))

    ma, mb = mat(ra), mat(rb)
    rank = lambda m: DomainMatrix.from_Matrix(m).to_field().rank() if m.rows else 0
    both = rank(ma.col_join(mb))
    return both == rank(ma), both == rank(mb)


def reference_first_order_system(trace_sign: int = -1) -> DeterminingSystem:
    """Hand-derived determining system for the first-order kind with p = 1, m = 1.

    ``trace_sign`` selects the trace condition 2 xi_x = trace_sign * eta_t.
    The condition pi_xu + pi_xv = 0 is kept as a single sum for each pi.
    """
    x1 = sp.Symbol("x1")
    args = (t, x1, u, v)
    F = {n: sp.Function(n)(*args) for n in ("eta", "xi1", "pi1", "pi2")}
    d = lambda n, *vs: sp.diff(F[n], *vs)
    eqs = [d("eta", t, t), d("eta", x1), d("eta", u), d("eta", v),
           d("xi1", t), d("xi1", u), d("xi1", v),
           d("pi1", v), d("pi2", u), d("pi1", u, u), d("pi2", v, v),
           d("pi1", x1, u) + d("pi1", x1, v), d("pi2", x1, u) + d("pi2", x1, v),
           d("pi1", u) - d("pi2", v) - d("eta", t) / 2,
           2 * d("xi1", x1) - trace_sign * d("eta", t)]
    return DeterminingSystem({n: args for n in F}, eqs)


@dataclass
class Equivalence:
    generated_dim: int
    reference_dim: int
    generated_in_reference: bool
    reference_in_generated: bool

    @property
    def equivalent(self) -> bool:
        return self.generated_in_reference and self.reference_in_generated


def compare_with_reference(generated: DeterminingSystem, reference: DeterminingSystem,
                           degree: int = 2) -> Equivalence:
    """Mutual implication on polynomial solutions of bounded degree.

    The generated side keeps only the equations free of the nonlinearities
    (after restriction, see :func:`reduced_solution_space`).
    """
    names = list(reference.unknowns)
    variables = sorted({a for args in reference.unknowns.values() for a in args}, key=lambda s: s.name)
    gen = reduced_solution_space(generated, degree)
    ref = polynomial_solutions(reference, degree)
    a_in_b, b_in_a = same_span(ref, gen, names, variables)
    return Equivalence(len(gen), len(ref), a_in_b, b_in_a)


def solution_field(sol: Mapping[str, Expr], m: int) -> VectorField:
    return VectorField(sol.get("eta", 0), tuple(sol.get(f"xi{i}", 0) for i in range(1, m + 1)),
                       sol.get("pi1", 0), sol.get("pi2", 0))


# ------------------------------------------------------- classifying equations

@dataclass(frozen=True)
class MainSymmetry:
    """X = -mu D + C1 u d_u + C2 v d_v + C3 u d_v + C4 v d_u + B1 d_u + B2 d_v.

    C1..C4 depend on t only, B1 and B2 on (t, x).
    """

    mu: Expr = sp.Integer(0)
    C1: Expr = sp.Integer(0)
    C2: Expr = sp.Integer(0)
    C3: Expr = sp.Integer(0)
    C4: Expr = sp.Integer(0)
    B1: Expr = sp.Integer(0)
    B2: Expr = sp.Integer(0)

    def __post_init__(self):
        for k in ("mu", "C1", "C2", "C3", "C4", "B1", "B2"):
            object.__setattr__(self, k, sp.sympify(getattr(self, k)))

    def field(self, m: int) -> VectorField:
        D = make_D(m)
        X = (-self.mu) * D
        cu = self.C1 * u + self.C4 * v + self.B1
        cv = self.C2 * v + self.C3 * u + self.B2
        return X + VectorField.from_components(0, (0,) * m, cu, cv)

    @classmethod
    def from_field(cls, X: VectorField) -> "MainSymmetry":
        """Read the data back off a main symmetry; raises if X is not of that form."""
        m = X.m
        xs = [sp.Symbol(f"x{i}") for i in range(1, m + 1)]
        mu = -sp.diff(X.eta, t)
        if normalize(X.eta + mu * t) != 0 or any(
                normalize(c + mu * x / 2) != 0 for c, x in zip(X.xi, xs)):
            raise ValueError("field is not a main symmetry")
        cu, cv = -X.pi1, -X.pi2
        C1, C4 = sp.diff(cu, u), sp.diff(cu, v)
        C3, C2 = sp.diff(cv, u), sp.diff(cv, v)
        for c in (C1, C2, C3, C4):
            if c.free_symbols & {u, v, *xs}:
                raise ValueError("field is not a main symmetry")
        B1 = normalize(cu - C1 * u - C4 * v)
        B2 = normalize(cv - C3 * u - C2 * v)
        if (B1.free_symbols | B2.free_symbols) & {u, v}:
            raise ValueError("field is not a main symmetry")
        return cls(mu, C1, C2, C3, C4, B1, B2)


def _laplacian(e: Expr, m: int) -> Expr:
    return sum(sp.diff(e, sp.Symbol(f"x{i}"), 2) for i in range(1, m + 1))


def _apply_main(d: MainSymmetry, f: Expr) -> Expr:
    return ((d.C1 * u + d.C4 * v + d.B1) * sp.diff(f, u)
            + (d.C2 * v + d.C3 * u + d.B2) * sp.diff(f, v))


@dataclass
class ClassifyResult:
    residual1: Expr
    residual2: Expr
    verdict1: ZeroVerdict
    verdict2: ZeroVerdict
    constraint: Expr = sp.Integer(0)

    @property
    def passed(self) -> bool:
        return self.verdict1.zero and self.verdict2.zero and normalize(self.constraint) == 0


def classify_residual(sys: DiffusionSystem, data: MainSymmetry,
                      domain: SamplingDomain | None = None) -> ClassifyResult:
    """LHS - RHS of the classifying equations for a main symmetry.

    Diagonal systems use the equations written for -mu D + C u d_u + ... ; the
    first-order coupled kind uses the reduced form with F = -C1, G = -C2,
    mu' = -mu and the constraint mu' = 2(F - G).
    """
    f1, f2 = sys.f1, sys.f2
    m = sys.m
    if sys.kind is Kind.DIAGONAL:
        if normalize(sys.a - 1) != 0 and (data.C3 != 0 or data.C4 != 0):
            raise ValueError("C3 and C4 must vanish when a != 1")
        r1 = ((data.mu + data.C1) * f1 + data.C4 * f2 + sp.diff(data.C1, t) * u
              + sp.diff(data.C4, t) * v + sp.diff(data.B1, t) - _laplacian(data.B1, m)
              - _apply_main(data, f1))
        r2 = ((data.mu + data.C2) * f2 + data.C3 * f1 + sp.diff(data.C2, t) * v
              + sp.diff(data.C3, t) * u + sp.diff(data.B2, t) - sys.a * _laplacian(data.B2, m)
              - _apply_main(data, f2))
        constraint = sp.Integer(0)
    else:
        if data.C3 != 0 or data.C4 != 0:
            raise ValueError("C3 and C4 must vanish for the first-order coupled kind")
        mu_p, F, G = -data.mu, -data.C1, -data.C2
        B1, B2 = -data.B1, -data.B2
        xm = sp.Symbol(f"x{m}")
        op = lambda f: (B1 * sp.diff(f, u) + B2 * sp.diff(f, v)
                        + F * u * sp.diff(f, u) + G * v * sp.diff(f, v))
        r1 = (mu_p + F) * f1 + sp.diff(F, t) * u + sp.diff(B1, t) - _laplacian(B1, m) - op(f1)
        r2 = (mu_p + G) * f2 + sp.diff(G, t) * v + sp.diff(B2, t) - sys.p * sp.diff(B1, xm) - op(f2)
        constraint = mu_p - 2 * (F - G) if sys.p != 0 else sp.Integer(0)
    r1, r2 = normalize(r1), normalize(r2)
    domain = domain or SamplingDomain()
    return ClassifyResult(r1, r2, is_zero(r1, domain, normal=False),
                          is_zero(r2, domain, normal=False), constraint)


# ------------------------------------------------------------ extension flags

@dataclass
class Flag:
    on: bool
    residuals: tuple[Expr, ...] = ()
    generators: list[VectorField] = field(default_factory=list)
    generator_checks: list[bool] = field(default_factory=list)
    note: str = ""

    def __bool__(self):
        return self.on


@dataclass
class ExtensionFlags:
    galilei: Flag
    exp_galilei: Flag
    conformal: Flag
    gamma: Expr | None = None
    mu_cb: dict | None = None
    nu_cb: dict | None = None

    def as_dict(self) -> dict:
        return {"galilei": self.galilei.on, "exp_galilei": self.exp_galilei.on,
                "conformal": self.conformal.on,
                "gamma": None if self.gamma is None else str(self.gamma)}


def _weighted(sys: DiffusionSystem, f: Expr) -> Expr:
    return sys.a * u * sp.diff(f, u) + v * sp.diff(f, v)


def _all_zero(exprs, domain) -> bool:
    return all(is_zero(e, domain).zero for e in exprs)


def _is_constant(e: Expr, table: SymbolTable) -> bool:
    variables = {u, v, *table.independents}
    return not (e.free_symbols & variables) and not e.has(sp.core.function.AppliedUndef)


def galilei_residuals(sys: DiffusionSystem) -> tuple[Expr, Expr]:
    return (normalize(sys.a * sys.f1 - _weighted(sys, sys.f1)),
            normalize(sys.f2 - _weighted(sys, sys.f2)))


def exp_galilei_residuals(sys: DiffusionSystem, gamma: Expr) -> tuple[Expr, Expr]:
    return (normalize(sys.a * (sys.f1 + gamma * u) - _weighted(sys, sys.f1)),
            normalize(sys.f2 + gamma * v - _weighted(sys, sys.f2)))


def _gamma_candidates(sys: DiffusionSystem, hints: Sequence[Expr]) -> list[Expr]:
    table = sys.symbols
    out: list[Expr] = []
    r1 = normalize(sp.cancel((_weighted(sys, sys.f1) - sys.a * sys.f1) / (sys.a * u)))
    r2 = normalize(sp.cancel((_weighted(sys, sys.f2) - sys.f2) / v))
    for r in (r1, r2):
        if _is_constant(r, table):
            out.append(r)
    out.extend(sp.sympify(h) for h in hints)
    params = [table.resolve(p) for p in table.params]
    pmap = {str(p): p for p in params if p is not None}
    out.extend([sp.Integer(1), sp.Integer(-1), sys.a, -sys.a])
    if "mu" in pmap and "nu" in pmap:
        out.extend([pmap["mu"] + pmap["nu"], pmap["mu"] - pmap["nu"]])
    uniq = []
    for g in out:
        g = normalize(g)
        if g != 0 and g not in uniq:
            uniq.append(g)
    return uniq


def conformal_constants(sys: DiffusionSystem, domain: SamplingDomain | None = None
                        ) -> tuple[dict, dict] | None:
    """Solve the conformal conditions for the constant matrices mu^{cb}, nu^{cb}."""
    m = sys.m
    a_is_one = normalize(sys.a - 1) == 0
    mus = {(c, b): sp.Symbol(f"mu{c}{b}") for c in (1, 2) for b in (1, 2)}
    nus = {(c, b): sp.Symbol(f"nu{c}{b}") for c in (1, 2) for b in (1, 2)}
    f = {1: sys.f1, 2: sys.f2}
    eqs = []
    for c in (1, 2):
        op_mu = ((mus[1, 1] * u + mus[1, 2] * v + m * u) * sp.diff(f[c], u)
                 + (mus[2, 1] * u + mus[2, 2] * v + m * v) * sp.diff(f[c], v))
        eqs.append((m + 4) * f[c] + mus[c, 1] * f[1] + mus[c, 2] * f[2] - op_mu)
        op_nu = ((nus[1, 1] * u + nus[1, 2] * v) * sp.diff(f[c], u)
                 + (nus[2, 1] * u + nus[2, 2] * v) * sp.diff(f[c], v))
        eqs.append(nus[c, 1] * f[1] + nus[c, 2] * f[2] + mus[c, 1] * u + mus[c, 2] * v - op_nu)
    unknowns = list(mus.values()) + list(nus.values())
    if not a_is_one:
        zero = {s: 0 for s in unknowns}
        eqs = [normalize(e.xreplace(zero)) for e in eqs]
        if _all_zero(eqs, domain):
            return ({k: sp.Integer(0) for k in mus}, {k: sp.Integer(0) for k in nus})
        return None
    sol = _solve_linear_identity(eqs, unknowns, sys.symbols)
    if sol is None:
        return None
    eqs = [normalize(e.xreplace(sol)) for e in eqs]
    if not _all_zero(eqs, domain):
        return None
    return ({k: sol[s] for k, s in mus.items()}, {k: sol[s] for k, s in nus.items()})


def _solve_linear_identity(eqs: list[Expr], unknowns: list[sp.Symbol], table: SymbolTable,
                           n_points: int = 6) -> dict | None:
    """Unknown constants making each expression vanish identically in (u, v).

    Uses exact evaluation at rational sample points; the caller verifies the
    candidate on the full expressions.
    """
    pts = [(sp.Rational(3 + 2 * k, 4 + k), sp.Rational(5 + k, 3 + 2 * k)) for k in range(n_points)]
    lin = []
    for e in eqs:
        e = sp.expand(e)
        for pu, pv in pts:
            lin.append(sp.expand(e.xreplace({u: pu, v: pv})))
    try:
        sols = sp.linsolve(lin, unknowns)
    except Exception:
        return None
    if not sols:
        return None
    sol = next(iter(sols))
    free = set().union(*(s.free_symbols for s in sol)) & set(unknowns)
    zero = {s: 0 for s in free}
    return {k: sp.simplify(val.xreplace(zero)) for k, val in zip(unknowns, sol)}


def conformal_generator(sys: DiffusionSystem, mu_cb: dict, nu_cb: dict) -> VectorField:
    K = make_K(sys)
    cu = -((t * mu_cb[1, 1] + nu_cb[1, 1]) * u + (t * mu_cb[1, 2] + nu_cb[1, 2]) * v)
    cv = -((t * mu_cb[2, 1] + nu_cb[2, 1]) * u + (t * mu_cb[2, 2] + nu_cb[2, 2]) * v)
    return K + VectorField.from_components(0, (0,) * sys.m, cu, cv)


def extension_flags(sys: DiffusionSystem, gamma_hints: Sequence[Expr] = (),
                    domain: SamplingDomain | None = None, verify: bool = True) -> ExtensionFlags:
    """Evaluate the Galilei, exponential-Galilei and conformal extension conditions."""
    if sys.kind is not Kind.DIAGONAL:
        raise ValueError("extension conditions apply to the diagonal kind only")
    if normalize(sys.a) == 0:
        raise ValueError("Galilei-type generators require a != 0")
    m = sys.m

    def check(fields):
        return [check_symmetry(X, sys, domain).passed for X in fields] if verify else []

    gres = galilei_residuals(sys)
    gal_on = _all_zero(gres, domain)
    gal = Flag(gal_on, gres)
    if gal_on:
        gal.generators = [make_G(sys, i) for i in range(1, m + 1)]
        gal.generator_checks = check(gal.generators)

    exp = Flag(False, note="not found")
    gamma = None
    for g in _gamma_candidates(sys, gamma_hints):
        res = exp_galilei_residuals(sys, g)
        if _all_zero(res, domain):
            gamma = g
            exp = Flag(True, res, note=f"gamma = {g}")
            exp.generators = [make_Ghat(sys, i, g) for i in range(1, m + 1)]
            exp.generator_checks = check(exp.generators)
            break

    conf = Flag(False, note="requires the Galilei condition")
    mu_cb = nu_cb = None
    if gal_on:
        solved = conformal_constants(sys, domain)
        if solved is None:
            conf = Flag(False, note="no constant matrices satisfy the conformal conditions")
        else:
            mu_cb, nu_cb = solved
            conf = Flag(True, note="conformal conditions hold")
            conf.generators = [conformal_generator(sys, mu_cb, nu_cb)]
            conf.generator_checks = check(conf.generators)
    return ExtensionFlags(gal, exp, conf, gamma, mu_cb, nu_cb)
