"""Reaction-diffusion systems, point vector fields and the named generators."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import sympy as sp

from .expr import Expr, SymbolTable, normalize, parse, to_text

t = sp.Symbol("t")
u, v = sp.symbols("u v")
half = sp.Rational(1, 2)


def xs(m: int) -> tuple[sp.Symbol, ...]:
    return tuple(sp.Symbol(f"x{i}") for i in range(1, m + 1))


class Kind(enum.Enum):
    DIAGONAL = "diagonal"          # u_t - Lap u = f1, v_t - a Lap v = f2
    FIRST_ORDER = "first_order"    # u_t - Lap u = f1, v_t - p u_{x_m} = f2


@dataclass(frozen=True)
class DiffusionSystem:
    m: int
    f1: Expr
    f2: Expr
    kind: Kind = Kind.DIAGONAL
    a: Expr = sp.Integer(1)
    p: int = 1
    constraints: tuple[str, ...] = ()
    table: SymbolTable | None = None

    def __post_init__(self):
        object.__setattr__(self, "f1", sp.sympify(self.f1))
        object.__setattr__(self, "f2", sp.sympify(self.f2))
        object.__setattr__(self, "a", sp.sympify(self.a))
        if self.m < 1:
            raise ValueError("spatial dimension must be positive")
        if self.kind is Kind.FIRST_ORDER and self.p not in (0, 1):
            raise ValueError("p must be 0 or 1")

    @property
    def symbols(self) -> SymbolTable:
        return self.table if self.table is not None else SymbolTable(m=self.m)

    def with_rhs(self, f1: Expr, f2: Expr) -> "DiffusionSystem":
        return replace(self, f1=normalize(f1), f2=normalize(f2))

    def subs(self, bindings: Mapping) -> "DiffusionSystem":
        b = {sp.sympify(k): sp.sympify(w) for k, w in bindings.items()}
        return replace(self,
                       f1=normalize(self.f1.subs(b, simultaneous=True)),
                       f2=normalize(self.f2.subs(b, simultaneous=True)),
                       a=normalize(self.a.subs(b, simultaneous=True)))

    def describe(self) -> str:
        if self.kind is Kind.DIAGONAL:
            head = f"u_t - Lap u = {to_text(self.f1)}; v_t - ({to_text(self.a)}) Lap v = {to_text(self.f2)}"
        else:
            head = f"u_t - Lap u = {to_text(self.f1)}; v_t - {self.p}*u_x{self.m} = {to_text(self.f2)}"
        return f"{head}  (m={self.m})"


@dataclass(frozen=True)
class Violation:
    level: str  # "error" | "warning"
    message: str


def validate(sys: DiffusionSystem) -> list[Violation]:
    """Autonomy errors and canonical-range warnings for the diffusion coefficient."""
    out: list[Violation] = []
    table = sys.symbols
    forbidden = {s.name for s in table.independents}
    for name, f in (("f1", sys.f1), ("f2", sys.f2)):
        for s in f.free_symbols:
            if s.name in forbidden:
                out.append(Violation("error", f"{name} depends on {s.name}: system is not autonomous"))
            elif "_" in s.name and (table.is_dependent_jet(s) or table.declared_jet(s)):
                out.append(Violation("error", f"{name} contains jet symbol {s.name}"))
            elif table.declared_jet(s):
                out.append(Violation("error", f"{name} contains declared function {s.name}"))
    if sys.kind is Kind.DIAGONAL:
        a = sys.a
        if a.is_number:
            a = sp.nsimplify(a)
            canonical = a == 0 or a == 1 or (-1 <= a < 0) or (0 < a < 1)
            if not canonical:
                out.append(Violation("warning", f"non-canonical a={a}, apply a->1/a"))
    return out


@dataclass(frozen=True)
class VectorField:
    """X = eta d_t + xi^mu d_{x_mu} - pi1 d_u - pi2 d_v.

    pi1, pi2 carry the minus sign convention of the symmetry ansatz; use
    :meth:`from_components` / :attr:`components` for plain coefficients.
    """

    eta: Expr
    xi: tuple[Expr, ...]
    pi1: Expr
    pi2: Expr

    def __post_init__(self):
        object.__setattr__(self, "eta", sp.sympify(self.eta))
        object.__setattr__(self, "xi", tuple(sp.sympify(c) for c in self.xi))
        object.__setattr__(self, "pi1", sp.sympify(self.pi1))
        object.__setattr__(self, "pi2", sp.sympify(self.pi2))

    @classmethod
    def from_components(cls, ct, cx: Sequence, cu, cv) -> "VectorField":
        return cls(ct, tuple(cx), -sp.sympify(cu), -sp.sympify(cv))

    @classmethod
    def zero(cls, m: int) -> "VectorField":
        return cls(0, (0,) * m, 0, 0)

    @property
    def m(self) -> int:
        return len(self.xi)

    @property
    def components(self) -> tuple[Expr, ...]:
        """(c_t, c_x1, ..., c_xm, c_u, c_v) as in X = sum c_k d_k."""
        return (self.eta, *self.xi, -self.pi1, -self.pi2)

    @property
    def phi1(self) -> Expr:
        return -self.pi1

    @property
    def phi2(self) -> Expr:
        return -self.pi2

    def map(self, fn) -> "VectorField":
        c = [fn(x) for x in self.components]
        return VectorField.from_components(c[0], c[1:-2], c[-2], c[-1])

    def normalized(self) -> "VectorField":
        return self.map(normalize)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField.from_components(*_split([p + q for p, q in zip(self.components, other.components)]))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-1) * other

    def __rmul__(self, c) -> "VectorField":
        c = sp.sympify(c)
        return self.map(lambda x: c * x)

    def __neg__(self):
        return (-1) * self

    def is_zero_structurally(self) -> bool:
        return all(normalize(c) == 0 for c in self.components)

    def __eq__(self, other):
        if not isinstance(other, VectorField) or other.m != self.m:
            return NotImplemented
        return all(normalize(p - q) == 0 for p, q in zip(self.components, other.components))

    def __hash__(self):
        return hash(tuple(normalize(c) for c in self.components))

    def basis_expr(self) -> Expr:
        """The field as a linear form in the basis tokens d_t, d_x1, ..., d_u, d_v."""
        return sum((c * b for c, b in zip(self.components, basis_tokens(self.m))), sp.Integer(0))

    def to_text(self) -> str:
        parts = []
        for c, b in zip(self.components, basis_tokens(self.m)):
            c = normalize(c)
            if c == 0:
                continue
            if c == 1:
                parts.append(b.name)
            elif c == -1:
                parts.append(f"-{b.name}")
            else:
                txt = to_text(c)
                if isinstance(c, sp.Add):
                    txt = f"({txt})"
                parts.append(f"{txt}*{b.name}")
        if not parts:
            return "0"
        return " + ".join(parts).replace("+ -", "- ")

    def __str__(self):
        return f"{self.to_text()}   [X = eta d_t + xi d_x - pi1 d_u - pi2 d_v]"


def _split(c):
    return c[0], c[1:-2], c[-2], c[-1]


def basis_tokens(m: int) -> tuple[sp.Symbol, ...]:
    return (sp.Symbol("d_t"), *(sp.Symbol(f"d_x{i}") for i in range(1, m + 1)),
            sp.Symbol("d_u"), sp.Symbol("d_v"))


def field_from_basis_expr(e: Expr, m: int) -> VectorField:
    """Inverse of :meth:`VectorField.basis_expr`; e must be linear in the tokens."""
    e = normalize(e)
    toks = basis_tokens(m)
    coeffs = [normalize(sp.diff(e, b)) for b in toks]
    rest = normalize(e - sum(c * b for c, b in zip(coeffs, toks)))
    if rest != 0 or any(c.free_symbols & set(toks) for c in coeffs):
        raise ValueError(f"not a vector field in d_t, d_x, d_u, d_v: {to_text(e)}")
    return VectorField.from_components(*_split(coeffs))


# ------------------------------------------------------ named generators

class GeneratorError(ValueError):
    pass


def _scaling(sys_a: Expr) -> tuple[Expr, Expr]:
    return u, v / sys_a


def _require_diagonal(sys: DiffusionSystem, name: str):
    if sys.kind is not Kind.DIAGONAL:
        raise GeneratorError(f"{name} requires a diagonal system")
    if sys.a == 0:
        raise GeneratorError(f"{name} is undefined for a=0")


def make_basic(m: int) -> list[VectorField]:
    """P0, P_mu and J^{mu nu} (mu < nu)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    X = xs(m)
    zero = [0] * m
    out = [VectorField.from_components(1, zero, 0, 0)]
    for i in range(m):
        c = list(zero)
        c[i] = 1
        out.append(VectorField.from_components(0, c, 0, 0))
    for i in range(m):
        for j in range(i + 1, m):
            c = list(zero)
            c[j] = X[i]
            c[i] = -X[j]
            out.append(VectorField.from_components(0, c, 0, 0))
    return out


def make_D(m: int) -> VectorField:
    return VectorField.from_components(t, [half * x for x in xs(m)], 0, 0)


def make_K(sys: DiffusionSystem) -> VectorField:
    _require_diagonal(sys, "K")
    m = sys.m
    X = xs(m)
    r2 = sum(x**2 for x in X)
    su, sv = _scaling(sys.a)
    return VectorField.from_components(
        2 * t**2, [2 * t * x for x in X],
        -r2 / 2 * su - t * m * u,
        -r2 / 2 * sv - t * m * v)


def make_G(sys: DiffusionSystem, mu: int) -> VectorField:
    _require_diagonal(sys, "G")
    X = xs(sys.m)
    c = [0] * sys.m
    c[mu - 1] = t
    su, sv = _scaling(sys.a)
    return VectorField.from_components(0, c, -half * X[mu - 1] * su, -half * X[mu - 1] * sv)


def make_Ghat(sys: DiffusionSystem, mu: int, gamma: Expr) -> VectorField:
    _require_diagonal(sys, "Ghat")
    gamma = sp.sympify(gamma)
    X = xs(sys.m)
    w = sp.exp(gamma * t)
    c = [0] * sys.m
    c[mu - 1] = w
    su, sv = _scaling(sys.a)
    return VectorField.from_components(0, c, -half * gamma * X[mu - 1] * su * w,
                                       -half * gamma * X[mu - 1] * sv * w)


class GeneratorName(enum.Enum):
    P0 = "P0"
    P = "P"
    J = "J"
    D = "D"
    K = "K"
    G = "G"
    GHAT = "Ghat"


def make_named(name: GeneratorName | str, sys: DiffusionSystem, params: Mapping | None = None) -> VectorField:
    """Construct a named generator; ``params`` may hold ``mu``/``nu`` indices and ``gamma``."""
    params = dict(params or {})
    name = GeneratorName(name) if not isinstance(name, GeneratorName) else name
    m = sys.m
    if name is GeneratorName.P0:
        return make_basic(m)[0]
    if name is GeneratorName.P:
        return make_basic(m)[params.get("mu", 1)]
    if name is GeneratorName.J:
        i, j = params.get("mu", 1), params.get("nu", 2)
        X = xs(m)
        c = [0] * m
        c[j - 1] = X[i - 1]
        c[i - 1] = -X[j - 1]
        return VectorField.from_components(0, c, 0, 0)
    if name is GeneratorName.D:
        return make_D(m)
    if name is GeneratorName.K:
        return make_K(sys)
    if name is GeneratorName.G:
        return make_G(sys, params.get("mu", 1))
    return make_Ghat(sys, params.get("mu", 1), params.get("gamma", 0))


def named_generator_exprs(sys: DiffusionSystem, gamma: Expr | None = None) -> dict[str, Expr]:
    """Basis-token expansions of every generator name usable inside field text."""
    m = sys.m
    out: dict[str, Expr] = {"D": make_D(m).basis_expr(), "P0": sp.Symbol("d_t")}
    for i in range(1, m + 1):
        out[f"P{i}"] = sp.Symbol(f"d_x{i}")
        for j in range(i + 1, m + 1):
            out[f"J{i}{j}"] = make_named(GeneratorName.J, sys, {"mu": i, "nu": j}).basis_expr()
    if sys.kind is Kind.DIAGONAL and sys.a != 0:
        out["K"] = make_K(sys).basis_expr()
        for i in range(1, m + 1):
            out[f"G{i}"] = make_G(sys, i).basis_expr()
            if gamma is not None:
                out[f"Ghat{i}"] = make_Ghat(sys, i, gamma).basis_expr()
    return out


def parse_field(text: str, sys: DiffusionSystem, table: SymbolTable | None = None,
                gamma: Expr | None = None, macros: Mapping[str, Expr] | None = None) -> VectorField:
    """Parse ``"2*D + v*d_v"`` style text into a VectorField for ``sys``.

    ``macros`` maps extra names (e.g. ``R``) to the expressions they abbreviate.
    """
    table = table or sys.symbols
    macros = dict(macros or {})
    m = sys.m
    named = named_generator_exprs(sys, gamma)
    extra = ([b.name for b in basis_tokens(m)] + list(named) + ["K"]
             + [f"G{i}" for i in range(1, m + 1)] + list(macros))
    tab = table.extend(extra=extra)
    e = parse(text, tab, normal=False)
    bad = {s.name for s in e.free_symbols} & ({"K"} | {f"G{i}" for i in range(1, m + 1)})
    if bad and (sys.kind is not Kind.DIAGONAL or sys.a == 0):
        raise GeneratorError(f"{sorted(bad)} undefined for this system")
    subs = {sp.Symbol(k): w for k, w in named.items()}
    subs.update({sp.Symbol(k): w for k, w in macros.items()})
    e = e.subs(subs, simultaneous=True)
    return field_from_basis_expr(e, m)
