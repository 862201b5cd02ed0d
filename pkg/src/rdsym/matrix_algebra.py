"""3x3 matrix realizations of main symmetries and the algebras they span.

A main symmetry acting on the column (1, u, v) is encoded as a matrix whose
first row vanishes; the lower rows hold the inhomogeneous part (first column)
and the linear part. Equivalence transformations act by conjugation.
"""
from __future__ import annotations

import enum
import itertools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import jsonschema
import numpy as np
import sympy as sp

from . import _kernels
from .expr import ParseError, SymbolTable, normalize, parse
from .model import VectorField, make_D

Expr = sp.Expr
U_SYM, V_SYM, T_SYM = sp.symbols("u v t")


class ShapeError(ValueError):
    """A matrix that does not have the 3x3, zero-first-row shape."""


class SingularTransformError(ValueError):
    pass


@dataclass(frozen=True)
class MatrixRealization:
    name: str
    matrix: sp.ImmutableMatrix

    def __post_init__(self):
        M = sp.ImmutableMatrix(self.matrix)
        if M.shape != (3, 3):
            raise ShapeError(f"{self.name}: expected a 3x3 matrix, got {M.shape}")
        if any(normalize(c) != 0 for c in M.row(0)):
            raise ShapeError(f"{self.name}: first row must vanish")
        object.__setattr__(self, "matrix", M.applyfunc(normalize))

    @classmethod
    def of(cls, name: str, rows) -> "MatrixRealization":
        return cls(name, sp.ImmutableMatrix(rows))

    @property
    def params(self) -> set[sp.Symbol]:
        return set(self.matrix.free_symbols)

    def subs(self, values: Mapping) -> "MatrixRealization":
        return MatrixRealization(self.name, self.matrix.subs(dict(values)))

    def __eq__(self, other):
        if not isinstance(other, MatrixRealization):
            return NotImplemented
        return all(normalize(c) == 0 for c in (self.matrix - other.matrix))

    def __hash__(self):
        return hash(self.matrix)


def commutator(g: MatrixRealization, h: MatrixRealization) -> MatrixRealization:
    """gh - hg, exact."""
    M = g.matrix * h.matrix - h.matrix * g.matrix
    return MatrixRealization(f"[{g.name},{h.name}]", M)


def conjugate(g: MatrixRealization, U, a=None) -> MatrixRealization:
    """U g U^-1 for U = [[1,0,0],[b1,K11,K12],[b2,K21,K22]].

    When the diffusion ratio ``a`` is given and differs from 0 and 1 the K
    block must be diagonal, since only scalings of u and v are admitted then.
    """
    U = sp.Matrix(U)
    if U.shape != (3, 3) or list(U.row(0)) != [1, 0, 0]:
        raise ShapeError("transformation must be 3x3 with first row (1, 0, 0)")
    det = normalize(U.det())
    if det == 0:
        raise SingularTransformError("transformation matrix is singular")
    if a is not None:
        a = sp.sympify(a)
        if normalize(a) != 0 and normalize(a - 1) != 0 and (
                normalize(U[1, 2]) != 0 or normalize(U[2, 1]) != 0):
            raise ValueError("for a not in {0, 1} the K block must be diagonal")
    return MatrixRealization(g.name, U * g.matrix * U.inv())


# ----------------------------------------------------------- as fields
class FieldForm(enum.Enum):
    HAT = "hat"    # (g)_{bc} u~_c d_{u~_b}
    X1 = "X1"      # mu D - 2 hat
    X2 = "X2"      # exp(lam t) hat


def _hat(g: MatrixRealization, m: int) -> VectorField:
    col = sp.Matrix([1, U_SYM, V_SYM])
    lin = g.matrix * col
    return VectorField.from_components(0, (0,) * m, lin[1], lin[2])


def realize_as_field(g: MatrixRealization, form: FieldForm | str = FieldForm.HAT,
                     *, mu=0, lam=0, m: int = 1) -> VectorField:
    """The operator attached to ``g`` over the column (1, u, v)."""
    form = FieldForm(form)
    hat = _hat(g, m)
    if form is FieldForm.HAT:
        return hat
    if form is FieldForm.X1:
        return sp.sympify(mu) * make_D(m) + (-2) * hat
    return sp.exp(sp.sympify(lam) * T_SYM) * hat


def homomorphism_defects(realizations: Sequence[MatrixRealization], m: int = 1):
    """Pairs violating hat([g, h]) == [hat(h), hat(g)].

    g -> hat(g) reverses brackets (the usual sign for linear vector fields),
    so g -> -hat(g) is a Lie algebra homomorphism.
    """
    from .prolong import lie_bracket

    bad = []
    hats = [_hat(g, m) for g in realizations]
    for (i, g), (j, h) in itertools.combinations(enumerate(realizations), 2):
        lhs = _hat(commutator(g, h), m)
        rhs = lie_bracket(hats[j], hats[i])
        if lhs != rhs:
            bad.append((g.name, h.name))
    return bad


# ------------------------------------------------------------ algebras
@dataclass(frozen=True)
class Relation:
    """[e_i, e_j] = sum_k coeffs[k] e_k with 0-based indices."""
    i: int
    j: int
    coeffs: tuple[Expr, ...]

    def text(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            c = normalize(c)
            if c == 0:
                continue
            head = "" if c == 1 else "-" if c == -1 else f"({c})*"
            terms.append(f"{head}e{k + 1}")
        rhs = " + ".join(terms).replace("+ -", "- ") if terms else "0"
        return f"[e{self.i + 1},e{self.j + 1}] = {rhs}"


def parse_relation(text: str, n: int) -> Relation:
    """Read ``[e1,e2] = e2 + e3`` (coefficients may be rational numbers)."""
    lhs, _, rhs = text.partition("=")
    inner = lhs.strip()
    if not (inner.startswith("[") and inner.endswith("]")):
        raise ParseError(f"relation must start with a bracket: {text!r}")
    names = [s.strip() for s in inner[1:-1].split(",")]
    if len(names) != 2:
        raise ParseError(f"bracket needs two elements: {text!r}")
    es = [sp.Symbol(f"e{k}") for k in range(1, n + 1)]
    idx = []
    for s in names:
        if s not in {e.name for e in es}:
            raise ParseError(f"unknown basis element {s!r} in {text!r}")
        idx.append(int(s[1:]) - 1)
    table = SymbolTable(params={e.name for e in es})
    expr = parse(rhs.strip(), table)
    coeffs = tuple(normalize(sp.diff(expr, e)) for e in es)
    if normalize(expr - sum(c * e for c, e in zip(coeffs, es))) != 0:
        raise ParseError(f"right-hand side must be linear in the basis: {text!r}")
    i, j = idx
    if i > j:
        i, j, coeffs = j, i, tuple(-c for c in coeffs)
    return Relation(i, j, coeffs)


@dataclass(frozen=True)
class MatrixAlgebra:
    name: str
    basis: tuple[MatrixRealization, ...]
    relations: tuple[Relation, ...] | None = None  # None: nothing declared
    case: str = ""
    conditions: tuple[Expr, ...] = ()             # expressions required nonzero
    quarantine: str | None = None
    anchor: str = ""

    @property
    def key(self) -> str:
        return f"{self.name} [{self.case}]" if self.case else self.name

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def params(self) -> list[sp.Symbol]:
        return sorted(set().union(*(g.params for g in self.basis)), key=lambda s: s.name)

    def subs(self, values: Mapping) -> "MatrixAlgebra":
        return MatrixAlgebra(self.name, tuple(g.subs(values) for g in self.basis),
                             self.relations, self.case, self.conditions, self.quarantine, self.anchor)


class AlgebraVerdict(enum.Enum):
    PASS = "PASS"
    CONDITIONAL = "CONDITIONAL"
    FAIL = "FAIL"
    NOT_CLOSED = "NOT_CLOSED"
    QUARANTINED = "QUARANTINED"


@dataclass
class AlgebraReport:
    key: str
    verdict: AlgebraVerdict
    computed: list[str] = field(default_factory=list)
    mismatches: list[str] = field(default_factory=list)
    holds_when: list[dict] = field(default_factory=list)
    relabeling: tuple[int, ...] | None = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict is AlgebraVerdict.PASS


def _flat(A: MatrixAlgebra) -> sp.Matrix:
    return sp.Matrix.hstack(*[g.matrix.reshape(9, 1) for g in A.basis])


def bracket_coordinates(A: MatrixAlgebra, i: int, j: int):
    """Coordinates of [e_i, e_j] in the basis, or None when outside the span.

    Parameters are treated generically; when the bracket leaves the span the
    parameter values at which it closes are returned as the second item.
    """
    B = _flat(A)
    c = commutator(A.basis[i], A.basis[j]).matrix.reshape(9, 1)
    cs = sp.symbols(f"c0:{A.dim}")
    eqs = [normalize(e) for e in (B * sp.Matrix(cs) - c)]
    eqs = [e for e in eqs if e != 0]
    sol = sp.solve(eqs, cs, dict=True) if eqs else [{}]
    if sol:
        return tuple(normalize(sp.sympify(s).subs(sol[0])) for s in cs), []
    params = A.params
    special = sp.solve(eqs, list(cs) + params, dict=True) if params else []
    return None, [{p: s[p] for p in params if p in s} for s in special]


def structure_constants(A: MatrixAlgebra) -> list[list[tuple[Expr, ...] | None]]:
    n = A.dim
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        out[i][i] = (sp.Integer(0),) * n
        for j in range(i + 1, n):
            c, _ = bracket_coordinates(A, i, j)
            out[i][j] = c
            out[j][i] = None if c is None else tuple(-x for x in c)
    return out


def _numeric_constants(A: MatrixAlgebra) -> np.ndarray:
    sc = structure_constants(A)
    n = A.dim
    C = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            if sc[i][j] is None:
                raise ValueError(f"{A.key} is not closed")
            C[i, j] = [float(x) for x in sc[i][j]]
    return C


def _solve_params(eqs, params):
    """Parameter values making every equation vanish ([] when none exist)."""
    eqs = [e for e in (normalize(sp.numer(sp.together(e))) for e in eqs) if e != 0]
    if not eqs:
        return [{}]
    if not params:
        return []
    return sp.solve(eqs, params, dict=True)


def verify_algebra(A: MatrixAlgebra) -> AlgebraReport:
    """Closure of the basis and agreement with the declared relations.

    Brackets not listed among the relations are declared zero. When the
    outcome depends on parameters the report lists the values where it holds.
    """
    if A.quarantine:
        return AlgebraReport(A.key, AlgebraVerdict.QUARANTINED, detail=A.quarantine)
    n, params = A.dim, A.params
    B = _flat(A)
    if B.rank(simplify=True) < n:
        return AlgebraReport(A.key, AlgebraVerdict.FAIL, detail="basis is linearly dependent")
    declared = {}
    for r in A.relations or ():
        declared[(r.i, r.j)] = r.coeffs
    report = AlgebraReport(A.key, AlgebraVerdict.PASS)
    mismatch_eqs, closing = [], []
    for i in range(n):
        for j in range(i + 1, n):
            coords, special = bracket_coordinates(A, i, j)
            if coords is None:
                closing.append(special)
                report.computed.append(f"[e{i + 1},e{j + 1}] outside the span")
                continue
            rel = Relation(i, j, coords)
            if any(c != 0 for c in coords):
                report.computed.append(rel.text())
            if A.relations is None:
                continue
            want = declared.get((i, j), (sp.Integer(0),) * n)
            diff = [normalize(c - w) for c, w in zip(coords, want)]
            if any(d != 0 for d in diff):
                report.mismatches.append(f"declared {Relation(i, j, want).text()}, computed {rel.text()}")
                mismatch_eqs.extend(diff)
    if not closing and not mismatch_eqs:
        return report
    candidates = ([s for group in closing for s in group if s] if closing
                  else _solve_params(mismatch_eqs, params))
    when = []
    for s in candidates:
        if any(normalize(c.subs(s)) == 0 for c in A.conditions) or s in when:
            continue
        if s and verify_algebra(A.subs(s)).verdict is AlgebraVerdict.PASS:
            when.append(s)
    if when:
        report.verdict = AlgebraVerdict.CONDITIONAL
        report.holds_when = [{str(k): str(v) for k, v in s.items()} for s in when]
    elif closing:
        report.verdict = AlgebraVerdict.NOT_CLOSED
    else:
        report.verdict = AlgebraVerdict.FAIL
        if not params and A.relations:
            report.relabeling = _relabeling(A)
    return report


def _relabeling(A: MatrixAlgebra) -> tuple[int, ...] | None:
    """A basis permutation under which the declared relations hold."""
    n = A.dim
    C = _numeric_constants(A)
    want = np.zeros((n, n, n))
    for r in A.relations:
        want[r.i, r.j] = [float(c) for c in r.coeffs]
        want[r.j, r.i] = -want[r.i, r.j]
    perms = _kernels.permutations_preserving(want, C)
    return tuple(perms[0]) if perms else None


# ------------------------------------------------------------ isomorphism
class IsoVerdict(enum.Enum):
    ISOMORPHIC = "ISOMORPHIC"
    NOT_ISOMORPHIC = "NOT_ISOMORPHIC"
    UNDECIDED = "UNDECIDED"


@dataclass
class IsoResult:
    verdict: IsoVerdict
    basis_change: sp.Matrix | None = None
    detail: str = ""


def invariants(A: MatrixAlgebra) -> dict:
    """Basis-independent data used to refute an isomorphism cheaply."""
    sc = structure_constants(A)
    n = A.dim
    if any(sc[i][j] is None for i in range(n) for j in range(n)):
        raise ValueError(f"{A.key} is not closed")
    brackets = [sp.Matrix(sc[i][j]) for i in range(n) for j in range(i + 1, n)]
    D = sp.Matrix.hstack(*brackets) if brackets else sp.zeros(n, 0)
    derived = D.rank() if D.shape[1] else 0
    ad = [sp.Matrix(n, n, lambda k, j: sc[i][j][k]) for i in range(n)]
    center = n - sp.Matrix.vstack(*ad).rank() if n else 0
    # action of each element on the derived algebra, in a basis of it
    scalar = None
    if 0 < derived < n:
        Dbasis = D.columnspace()
        Q = sp.Matrix.hstack(*Dbasis)
        scalar = True
        for X in ad:
            R = (Q.T * Q).inv() * Q.T * X * Q
            if R != R[0, 0] * sp.eye(R.shape[0]):
                scalar = False
    return {"dim": n, "derived": derived, "center": center, "scalar_action": scalar}


def find_isomorphism(A: MatrixAlgebra, B: MatrixAlgebra, *, max_height: int = 3,
                     use_numba: bool | None = None) -> IsoResult:
    """Search an explicit basis change A -> B with integer entries |p| <= max_height.

    Differing invariants refute the isomorphism; an exhausted search is
    reported as UNDECIDED.
    """
    if A.params or B.params:
        raise ValueError("substitute parameters before searching for an isomorphism")
    ia, ib = invariants(A), invariants(B)
    if ia != ib:
        diff = ", ".join(f"{k}: {ia[k]} vs {ib[k]}" for k in ia if ia[k] != ib[k])
        return IsoResult(IsoVerdict.NOT_ISOMORPHIC, detail=f"invariants differ ({diff})")
    ca, cb = _numeric_constants(A), _numeric_constants(B)
    for h in range(1, max_height + 1):
        P = _kernels.find_basis_change(ca, cb, _kernels.integer_values(h), use_numba=use_numba)
        if P is not None:
            Pm = sp.Matrix(P.shape[0], P.shape[1], [sp.Integer(int(round(x))) for x in P.ravel()])
            if _check_basis_change(A, B, Pm):
                return IsoResult(IsoVerdict.ISOMORPHIC, Pm, f"found at height {h}")
    return IsoResult(IsoVerdict.UNDECIDED, detail=f"no basis change with entries of height <= {max_height}")


def _check_basis_change(A: MatrixAlgebra, B: MatrixAlgebra, P: sp.Matrix) -> bool:
    """Exact check that e_i -> sum_a P[a, i] f_a preserves every bracket."""
    if P.det() == 0:
        return False
    sa, sb = structure_constants(A), structure_constants(B)
    n = A.dim
    for i in range(n):
        for j in range(i + 1, n):
            lhs = P * sp.Matrix(sa[i][j])
            rhs = sp.zeros(n, 1)
            for a in range(n):
                for b in range(n):
                    rhs += P[a, i] * P[b, j] * sp.Matrix(sb[a][b])
            if lhs != rhs:
                return False
    return True


# ------------------------------------------------------------ catalog
_EXPR = {"type": "string", "minLength": 1}
APPENDIX_SCHEMA = {
    "type": "object",
    "required": ["table", "matrices", "algebras"],
    "additionalProperties": False,
    "properties": {
        "table": {"const": "appendix"},
        "title": {"type": "string"},
        "matrices": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["rows"],
                "additionalProperties": False,
                "properties": {
                    "rows": {"type": "array", "minItems": 3, "maxItems": 3,
                             "items": {"type": "array", "minItems": 3, "maxItems": 3, "items": _EXPR}},
                    "params": {"type": "array", "items": {"type": "string"}},
                    "conditions": {"type": "array", "items": _EXPR},
                    "anchor": {"type": "string"},
                },
            },
        },
        "algebras": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "basis", "anchor"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "case": {"type": "string"},
                    "anchor": {"type": "string"},
                    "basis": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                    "relations": {"type": "array", "items": {"type": "string"}},
                    "quarantine": {"type": "string", "minLength": 1},
                    "note": {"type": "string"},
                },
            },
        },
        "isomorphisms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["algebra", "target"],
                "additionalProperties": False,
                "properties": {
                    "algebra": {"type": "string"}, "case": {"type": "string"},
                    "target": {"type": "string"}, "target_case": {"type": "string"},
                    "at": {"type": "object", "additionalProperties": _EXPR},
                },
            },
        },
    },
}


class AppendixError(ValueError):
    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"appendix.json:{pointer}: {message}")


@dataclass
class Appendix:
    matrices: dict[str, MatrixRealization]
    algebras: list[MatrixAlgebra]
    isomorphisms: list[dict]

    def algebra(self, name: str, case: str = "") -> MatrixAlgebra:
        for A in self.algebras:
            if A.name == name and (not case or A.case == case):
                return A
        raise KeyError(f"{name} [{case}]")


def appendix_path() -> Path:
    return Path(__file__).parent / "catalog" / "appendix.json"


def load_appendix(path: str | Path | None = None) -> Appendix:
    path = Path(path) if path is not None else appendix_path()
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise AppendixError("", "empty file")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AppendixError("", f"invalid JSON: {exc}") from exc
    errors = sorted(jsonschema.Draft202012Validator(APPENDIX_SCHEMA).iter_errors(data),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise AppendixError("/" + "/".join(map(str, e.absolute_path)), e.message)
    mats, conds = {}, {}
    for name, spec in data["matrices"].items():
        table = SymbolTable(params=set(spec.get("params", ())))
        ptr = f"/matrices/{name}"
        try:
            rows = [[parse(c, table) for c in row] for row in spec["rows"]]
            mats[name] = MatrixRealization.of(name, rows)
            conds[name] = tuple(parse(c.split("!=")[0], table) - parse(c.split("!=")[1], table)
                                for c in spec.get("conditions", ()))
        except (ParseError, ShapeError, IndexError) as exc:
            raise AppendixError(ptr, str(exc)) from exc
    algebras = []
    for k, spec in enumerate(data["algebras"]):
        ptr = f"/algebras/{k}"
        quarantine = spec.get("quarantine")
        missing = [b for b in spec["basis"] if b not in mats]
        if missing and not quarantine:
            raise AppendixError(ptr + "/basis", f"unknown matrix {missing[0]!r}")
        basis = tuple(mats[b] for b in spec["basis"] if b in mats) if not missing else ()
        rels = None
        if "relations" in spec:
            try:
                rels = tuple(parse_relation(r, len(spec["basis"])) for r in spec["relations"])
            except ParseError as exc:
                raise AppendixError(ptr + "/relations", str(exc)) from exc
        cond = tuple(c for b in spec["basis"] for c in conds.get(b, ()))
        algebras.append(MatrixAlgebra(spec["name"], basis, rels, spec.get("case", ""), cond,
                                      quarantine, spec["anchor"]))
    return Appendix(mats, algebras, data.get("isomorphisms", []))


@dataclass
class AppendixReport:
    algebras: list[AlgebraReport]
    isomorphisms: list[tuple[dict, IsoResult]]
    homomorphism_defects: list[tuple[str, str]]
    seconds: float

    @property
    def relations_ok(self) -> bool:
        return all(r.verdict in (AlgebraVerdict.PASS, AlgebraVerdict.QUARANTINED) for r in self.algebras)

    def lines(self) -> list[str]:
        out = []
        for r in self.algebras:
            extra = ""
            if r.holds_when:
                extra = f" holds when {r.holds_when}"
            if r.mismatches:
                extra += "; " + "; ".join(r.mismatches)
            if r.relabeling:
                extra += f"; declared relations hold for the basis order {[i + 1 for i in r.relabeling]}"
            if r.detail:
                extra += f" ({r.detail})"
            out.append(f"{r.key}: {r.verdict.value}{extra}")
        for claim, res in self.isomorphisms:
            at = f" at {claim['at']}" if claim.get("at") else ""
            out.append(f"{claim['algebra']} ~ {claim['target']}{at}: {res.verdict.value} {res.detail}")
        out.append("homomorphism: " + ("exact on the full realization set" if not self.homomorphism_defects
                                       else f"defects {self.homomorphism_defects}"))
        return out


_GENERIC = {"lam": sp.Rational(7, 3), "mu": sp.Rational(5, 2)}


def verify_appendix(app: Appendix | None = None, *, max_height: int = 3,
                    use_numba: bool | None = None) -> AppendixReport:
    app = app or load_appendix()
    t0 = time.perf_counter()
    reports = [verify_algebra(A) for A in app.algebras]
    isos = []
    for claim in app.isomorphisms:
        A = app.algebra(claim["algebra"], claim.get("case", ""))
        B = app.algebra(claim["target"], claim.get("target_case", ""))
        at = {sp.Symbol(k): sp.Rational(v) for k, v in claim.get("at", {}).items()}
        vals = {s: at.get(s, _GENERIC.get(s.name, sp.Rational(3, 2))) for s in A.params + B.params}
        isos.append((claim, find_isomorphism(A.subs(vals), B.subs(vals), max_height=max_height,
                                             use_numba=use_numba)))
    hom = homomorphism_defects(list(app.matrices.values()))
    return AppendixReport(reports, isos, hom, time.perf_counter() - t0)
