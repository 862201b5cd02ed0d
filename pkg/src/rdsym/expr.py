"""Symbolic expression kernel.

Expressions are plain sympy trees. This module adds what the symmetry
machinery needs on top of sympy: a small infix grammar with a matching
printer, jet symbols (``u_x1``, ``v_tx1x2``), opaque single-argument
functions with numbered derivatives (``F1``, ``F1_d1``, ...), declared
functions of (t, x) carrying rewrite rules (heat/Laplace solutions), an
idempotent normal form, and a zero test that falls back to random probing.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import mpmath
import numpy as np
import sympy as sp
from sympy.printing.str import StrPrinter

Expr = sp.Expr

MAX_DECLARED_ORDER = 3
MAX_JET_ORDER = 4

RESERVED_FUNCTIONS: dict[str, Callable] = {
    "exp": sp.exp,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "atan": sp.atan,
    "sqrt": sp.sqrt,
}

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_JET_NAME = re.compile(r"^([A-Za-z][A-Za-z0-9]*)_((?:t|x\d+)+)$")
_OPAQUE_DERIV = re.compile(r"^([A-Za-z][A-Za-z0-9]*)_d(\d+)$")


class ParseError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} at offset {offset}"
        super().__init__(message)


class UnknownSymbolError(ParseError):
    def __init__(self, name: str, offset: int | None = None):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", offset)


class JetOrderError(ValueError):
    """Raised when a derivative beyond the tracked jet is requested."""


# ---------------------------------------------------------------- opaque

_OPAQUE_CACHE: dict[tuple[str, int], type] = {}


def opaque(name: str, order: int = 0) -> type:
    """Function class for the ``order``-th derivative of arbitrary ``name``."""
    key = (name, order)
    cls = _OPAQUE_CACHE.get(key)
    if cls is None:
        cls_name = name if order == 0 else f"{name}_d{order}"

        def fdiff(self, argindex=1):
            if argindex != 1:
                raise sp.ArgumentIndexError(self, argindex)
            return opaque(name, order + 1)(self.args[0])

        cls = type(cls_name, (sp.Function,), {
            "nargs": 1,
            "fdiff": fdiff,
            "_opaque": (name, order),
        })
        _OPAQUE_CACHE[key] = cls
    return cls


def is_opaque(e) -> bool:
    return isinstance(e, sp.Function) and hasattr(type(e), "_opaque")


def opaque_applications(e: Expr) -> set:
    return {a for a in e.atoms(sp.Function) if is_opaque(a)}


# ------------------------------------------------------------------ jets

def jet_name(dep: str, index: Iterable[str]) -> str:
    """Canonical jet name: t derivatives first, then x's by ascending index."""
    idx = list(index)
    if not idx:
        return dep
    ts = [i for i in idx if i == "t"]
    xs = sorted((i for i in idx if i != "t"), key=lambda s: int(s[1:]))
    return f"{dep}_{''.join(ts + xs)}"


def split_jet(name: str) -> tuple[str, tuple[str, ...]] | None:
    """``'u_tx1x1'`` -> ``('u', ('t', 'x1', 'x1'))``; None for non-jets."""
    m = _JET_NAME.match(name)
    if not m:
        return None
    parts = re.findall(r"t|x\d+", m.group(2))
    return m.group(1), tuple(parts)


def jet(dep: str, *index: str) -> sp.Symbol:
    return sp.Symbol(jet_name(dep, index))


# ---------------------------------------------------- declared functions

@dataclass(frozen=True)
class DeclaredFunction:
    """A function of (t, x) known only through a linear PDE it satisfies.

    ``time`` selects the t-rule: ``"heat"`` rewrites psi_t as
    ``diffusion * Lap(psi) + rate * psi`` over ``space``; ``"travel"``
    rewrites psi_t as ``-speed * psi_{x_last}``; ``None`` means no t
    dependence. ``laplace_rate`` (if set) imposes
    ``Lap(psi) + laplace_drift * psi_{x_last} = laplace_rate * psi`` by
    eliminating second derivatives in the last spatial direction.
    """

    name: str
    space: tuple[int, ...]
    time: str | None = None
    diffusion: Expr = sp.Integer(1)
    rate: Expr = sp.Integer(0)
    speed: Expr = sp.Integer(0)
    laplace_rate: Expr | None = None
    laplace_drift: Expr = sp.Integer(0)

    def __post_init__(self):
        if self.time not in (None, "heat", "travel"):
            raise ValueError(f"unknown time rule {self.time!r}")

    def reduce(self, counts: Mapping[str, int]) -> Expr:
        """Express the derivative with multi-index ``counts`` in canonical jets."""
        counts = {k: v for k, v in counts.items() if v}
        for k in counts:
            if k != "t" and int(k[1:]) not in self.space:
                return sp.Integer(0)
        nt = counts.get("t", 0)
        if nt:
            if self.time is None:
                return sp.Integer(0)
            rest = dict(counts)
            rest["t"] = nt - 1
            if self.time == "heat":
                out = self.rate * self.reduce(rest)
                for mu in self.space:
                    c = dict(rest)
                    c[f"x{mu}"] = c.get(f"x{mu}", 0) + 2
                    out += self.diffusion * self.reduce(c)
                return out
            c = dict(rest)
            last = f"x{self.space[-1]}"
            c[last] = c.get(last, 0) + 1
            return -self.speed * self.reduce(c)
        if self.laplace_rate is not None and self.space:
            last = f"x{self.space[-1]}"
            if counts.get(last, 0) >= 2:
                rest = dict(counts)
                rest[last] -= 2
                out = self.laplace_rate * self.reduce(rest)
                if self.laplace_drift != 0:
                    c = dict(rest)
                    c[last] += 1
                    out -= self.laplace_drift * self.reduce(c)
                for mu in self.space[:-1]:
                    c = dict(rest)
                    c[f"x{mu}"] = c.get(f"x{mu}", 0) + 2
                    out -= self.reduce(c)
                return out
        order = sum(counts.values())
        if order > MAX_DECLARED_ORDER:
            raise JetOrderError(
                f"derivative of order {order} of {self.name} exceeds the tracked jet")
        index = [k for k, n in counts.items() for _ in range(n)]
        return jet(self.name, *index)

    def jets(self) -> list[sp.Symbol]:
        """All canonical jet symbols up to the tracked order (used for sampling)."""
        out = []
        names = [f"x{mu}" for mu in self.space]

        def rec(start, idx):
            out.append(jet(self.name, *idx))
            if len(idx) == MAX_DECLARED_ORDER:
                return
            for i in range(start, len(names)):
                rec(i, idx + [names[i]])
        rec(0, [])
        return out


# ---------------------------------------------------------- symbol table

@dataclass(frozen=True)
class SymbolTable:
    """Names admitted by the parser and the rules attached to them."""

    m: int = 1
    dependents: tuple[str, ...] = ("u", "v")
    params: frozenset[str] = frozenset()
    opaques: frozenset[str] = frozenset()
    declared: Mapping[str, DeclaredFunction] = field(default_factory=dict)
    extra: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("params", "opaques", "extra"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if not isinstance(self.declared, dict):
            object.__setattr__(self, "declared", {d.name: d for d in self.declared})

    def __hash__(self):
        return hash((self.m, self.dependents, self.params, self.opaques,
                     tuple(sorted(self.declared)), self.extra))

    @property
    def t(self) -> sp.Symbol:
        return sp.Symbol("t")

    @property
    def xs(self) -> tuple[sp.Symbol, ...]:
        return tuple(sp.Symbol(f"x{i}") for i in range(1, self.m + 1))

    @property
    def independents(self) -> tuple[sp.Symbol, ...]:
        return (self.t, *self.xs)

    def extend(self, *, params: Iterable[str] = (), opaques: Iterable[str] = (),
               declared: Iterable[DeclaredFunction] = (), extra: Iterable[str] = (),
               m: int | None = None) -> "SymbolTable":
        decl = dict(self.declared)
        for d in declared:
            decl[d.name] = d
        return SymbolTable(
            m=self.m if m is None else m,
            dependents=self.dependents,
            params=self.params | frozenset(params),
            opaques=self.opaques | frozenset(opaques),
            declared=decl,
            extra=self.extra | frozenset(extra),
        )

    def declared_jet(self, sym: sp.Symbol) -> tuple[DeclaredFunction, tuple[str, ...]] | None:
        name = sym.name
        if name in self.declared:
            return self.declared[name], ()
        sj = split_jet(name)
        if sj and sj[0] in self.declared:
            return self.declared[sj[0]], sj[1]
        return None

    def is_dependent_jet(self, sym: sp.Symbol) -> tuple[str, tuple[str, ...]] | None:
        name = sym.name
        if name in self.dependents:
            return name, ()
        sj = split_jet(name)
        if sj and sj[0] in self.dependents:
            return sj
        return None

    def resolve(self, name: str) -> Expr | None:
        if name == "t":
            return self.t
        if re.fullmatch(r"x\d+", name):
            i = int(name[1:])
            return sp.Symbol(name) if 1 <= i <= self.m else None
        if name in self.params or name in self.extra or name == "m":
            return sp.Symbol(name)
        if name in self.dependents or name in self.declared:
            return sp.Symbol(name)
        sj = split_jet(name)
        if sj and (sj[0] in self.dependents or sj[0] in self.declared):
            for k in sj[1]:
                if k != "t" and not 1 <= int(k[1:]) <= self.m:
                    return None
            return sp.Symbol(jet_name(*sj))
        return None

    def resolve_function(self, name: str):
        if name in RESERVED_FUNCTIONS:
            return RESERVED_FUNCTIONS[name]
        if name in self.opaques:
            return opaque(name)
        m = _OPAQUE_DERIV.match(name)
        if m and m.group(1) in self.opaques:
            return opaque(m.group(1), int(m.group(2)))
        return None


# ---------------------------------------------------------------- parser

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z][A-Za-z0-9_]*)|(.))")


def _tokenize(src: str):
    pos = 0
    toks = []
    while pos < len(src) and not src[pos:].isspace():
        m = _TOKEN.match(src, pos)
        if m is None:
            break
        if m.end() == pos:
            break
        num, ident, op = m.groups()
        start = m.start(m.lastindex) if m.lastindex else pos
        if num is not None:
            toks.append(("num", num, start))
        elif ident is not None:
            toks.append(("id", ident, start))
        elif op is not None:
            if op not in "+-*/^(),":
                raise ParseError(f"unexpected character {op!r}", start)
            toks.append(("op", op, start))
        pos = m.end()
    toks.append(("end", None, len(src.encode("utf-8"))))
    return toks


class _Parser:
    def __init__(self, src: str, table: SymbolTable):
        self.src = src
        self.table = table
        self.toks = _tokenize(src)
        self.i = 0

    def offset(self, tok) -> int:
        # Token positions are character indices; report byte offsets.
        return len(self.src[: tok[2]].encode("utf-8")) if tok[0] != "end" else tok[2]

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            raise ParseError(f"expected {op!r}", self.offset(tok))

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", self.offset(tok))
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            r = self.unary()
            e = e * r if op == "*" else e / r
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            e = self.unary()
            return -e if tok[1] == "-" else e
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return base ** self.unary()
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return sp.Rational(Fraction(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "id":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                fn = self.table.resolve_function(val)
                if fn is None:
                    raise UnknownSymbolError(val, self.offset(tok))
                self.take()
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != 1:
                    raise ParseError(f"{val} takes one argument", self.offset(tok))
                return fn(args[0])
            sym = self.table.resolve(val)
            if sym is None:
                raise UnknownSymbolError(val, self.offset(tok))
            return sym
        if kind == "end":
            raise ParseError("unexpected end of input", self.offset(tok))
        raise ParseError(f"unexpected token {val!r}", self.offset(tok))


def parse(source: str, table: SymbolTable, *, normal: bool = True) -> Expr:
    """Parse ``source`` against ``table``; the result is normalized by default."""
    e = _Parser(source, table).parse()
    return normalize(e) if normal else e


# --------------------------------------------------------------- printer

class _GrammarPrinter(StrPrinter):
    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Pow(self, expr, rational=False):
        return super()._print_Pow(expr, rational).replace("**", "^")

    def _print_Rational(self, expr):
        return super()._print_Rational(expr)


def to_text(e: Expr) -> str:
    """Print in the parser's grammar (``^`` for powers, exact rationals)."""
    return _GrammarPrinter({"order": None}).doprint(sp.sympify(e)).replace("**", "^")


# --------------------------------------------------------- normalization

def _contract_log_exp(e: Expr) -> Expr:
    return e.replace(
        lambda a: isinstance(a, sp.log) and isinstance(a.args[0], sp.exp),
        lambda a: a.args[0].args[0],
    )


def normalize(e: Expr) -> Expr:
    """Expanded sum of products; exp(a)*exp(b) -> exp(a+b), log(exp(a)) -> a."""
    e = sp.sympify(e)
    e = sp.expand(e, power_exp=False, power_base=False, log=False)
    e = sp.powsimp(e, combine="exp")
    e = _contract_log_exp(e)
    return sp.expand(e, power_exp=False, power_base=False, log=False)


# ---------------------------------------------------- calculus / rewrite

def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneous substitution followed by normalization."""
    b = {sp.sympify(k): sp.sympify(v) for k, v in bindings.items()}
    return normalize(sp.sympify(e).subs(b, simultaneous=True))


def declared_derivative(table: SymbolTable, sym: sp.Symbol, var: str) -> Expr:
    """d(sym)/d(var) for a declared-function jet symbol, rewritten canonically."""
    dj = table.declared_jet(sym)
    if dj is None:
        raise KeyError(sym)
    fn, idx = dj
    counts: dict[str, int] = {}
    for k in (*idx, var):
        counts[k] = counts.get(k, 0) + 1
    return fn.reduce(counts)


def diff(e: Expr, s, table: SymbolTable | None = None) -> Expr:
    """Partial derivative; declared functions of (t, x) are differentiated through
    their rules. Jet symbols of u, v are treated as independent coordinates."""
    e = sp.sympify(e)
    s = sp.sympify(s)
    out = sp.diff(e, s)
    if table is not None and table.declared and s.name in {x.name for x in table.independents}:
        for sym in e.free_symbols:
            if table.declared_jet(sym) is not None:
                d = declared_derivative(table, sym, s.name)
                if d != 0:
                    out += sp.diff(e, sym) * d
    return out


# ----------------------------------------------------------- zero tests

class ZeroStatus(enum.Enum):
    PROVED_ZERO = "PROVED_ZERO"
    PROBED_ZERO = "PROBED_ZERO"
    NONZERO = "NONZERO"

    def __str__(self):
        return self.value


@dataclass
class ZeroVerdict:
    status: ZeroStatus
    witness: dict[str, float] | None = None
    value: complex | None = None
    max_relative: float = 0.0
    probes: int = 0

    @property
    def zero(self) -> bool:
        return self.status is not ZeroStatus.NONZERO

    def __bool__(self):
        return self.zero


class UnsampleableDomain(ValueError):
    pass


@dataclass
class SamplingDomain:
    """Numeric ranges for probing.

    ``ranges`` overrides by symbol name; otherwise dependent variables
    (u, v) use ``positive``, everything else ``default``. ``avoid`` lists
    expressions that must be nonzero at a sample (e.g. ``nu`` for "nu != 0").
    ``fixed`` pins symbols to exact values.
    """

    ranges: dict[str, tuple[float, float]] = field(default_factory=dict)
    positive: tuple[float, float] = (0.3, 1.7)
    default: tuple[float, float] = (-1.5, 1.5)
    params: tuple[float, float] = (-3.0, 3.0)
    param_names: frozenset[str] = frozenset()
    avoid: tuple[Expr, ...] = ()
    fixed: dict[str, float] = field(default_factory=dict)
    probes: int = 8
    rtol: float = 1e-8
    seed: int = 0

    def range_for(self, name: str) -> tuple[float, float]:
        if name in self.ranges:
            lo, hi = self.ranges[name]
        elif name in ("u", "v"):
            lo, hi = self.positive
        elif name in self.param_names:
            lo, hi = self.params
        else:
            lo, hi = self.default
        if not hi > lo:
            raise UnsampleableDomain(f"empty range for {name}: [{lo}, {hi}]")
        return lo, hi

    def draw(self, rng: np.random.Generator, name: str):
        if name in self.fixed:
            return self.fixed[name]
        lo, hi = self.range_for(name)
        if name in self.param_names and name not in self.ranges:
            # rationals with small denominators keep exponents tame
            q = int(rng.integers(1, 7))
            k = int(rng.integers(int(np.ceil(lo * q)), int(np.floor(hi * q)) + 1))
            return Fraction(k, q)
        return lo + (hi - lo) * rng.random()


_MP = mpmath.mp.clone() if hasattr(mpmath.mp, "clone") else mpmath.mp


def _terms(e: Expr) -> tuple[Expr, ...]:
    return e.args if isinstance(e, sp.Add) else (e,)


def _to_mp(val):
    if isinstance(val, Fraction):
        return mpmath.mpf(val.numerator) / val.denominator
    return mpmath.mpf(val)


def lambdify_probe(e: Expr, symbols: list[sp.Symbol]):
    terms = _terms(e)
    return sp.lambdify(symbols, list(terms), modules="mpmath")


def is_zero(e: Expr, domain: SamplingDomain | None = None, *, normal: bool = True) -> ZeroVerdict:
    """Decide e == 0: normal form first, then random probing.

    Opaque applications are replaced by independent indeterminates, one per
    (function, derivative order, argument) triple.
    """
    domain = domain or SamplingDomain()
    e = sp.sympify(e)
    n = normalize(e) if normal else e
    if n == 0:
        return ZeroVerdict(ZeroStatus.PROVED_ZERO)
    apps = sorted(opaque_applications(n), key=sp.default_sort_key)
    repl = {a: sp.Dummy(f"op{i}") for i, a in enumerate(apps)}
    n2 = n.xreplace(repl) if repl else n
    syms = sorted(n2.free_symbols, key=lambda s: s.name)
    fn = lambdify_probe(n2, syms)
    # constraints on symbols absent from the expression cannot bind a probe
    avoid = [sp.lambdify(syms, a, modules="mpmath") for a in map(sp.sympify, domain.avoid)
             if a.free_symbols <= set(syms)]
    rng = np.random.default_rng(domain.seed)
    worst = 0.0
    done = 0
    attempts = 0
    with mpmath.workdps(40):
        while done < domain.probes:
            attempts += 1
            if attempts > 50 * domain.probes:
                raise UnsampleableDomain("could not find admissible probe points")
            point = {}
            for s in syms:
                nm = s.name if not isinstance(s, sp.Dummy) else "__opaque__"
                point[s] = domain.draw(rng, nm)
            args = [_to_mp(point[s]) for s in syms]
            try:
                if any(abs(a(*args)) < 1e-12 for a in avoid):
                    continue
                vals = fn(*args)
            except (ZeroDivisionError, ValueError, OverflowError, TypeError):
                continue
            total = mpmath.fsum(vals)
            scale = mpmath.fsum(abs(v) for v in vals)
            if not (mpmath.isfinite(abs(total)) and mpmath.isfinite(scale)):
                continue
            rel = float(abs(total) / scale) if scale != 0 else 0.0
            done += 1
            worst = max(worst, rel)
            if rel > domain.rtol:
                witness = {(s.name if not isinstance(s, sp.Dummy) else str(apps[int(s.name[2:])])):
                           float(point[s]) for s in syms}
                return ZeroVerdict(ZeroStatus.NONZERO, witness, complex(total), rel, done)
    return ZeroVerdict(ZeroStatus.PROBED_ZERO, None, None, worst, done)


def evaluate(e: Expr, point: Mapping) -> Expr:
    """Exact evaluation at a point (symbols or names as keys)."""
    sub = {(sp.Symbol(k) if isinstance(k, str) else k): sp.sympify(v) for k, v in point.items()}
    return sp.simplify(sp.sympify(e).subs(sub))
