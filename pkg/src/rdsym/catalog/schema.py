"""Catalog data model: JSON schema, loading and symbol resolution."""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Any, Iterable, Mapping

import jsonschema
import sympy as sp

from ..equiv import AET_PARAMETERS
from ..expr import DeclaredFunction, ParseError, SymbolTable, normalize, parse
from ..model import DiffusionSystem, GeneratorError, Kind, VectorField, parse_field

_EXPR = {"type": "string", "minLength": 1}
_SUBS = {"type": "object", "additionalProperties": _EXPR}

_DECLARED = {
    "type": "object",
    "required": ["name", "space"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z][A-Za-z0-9]*$"},
        "space": {"enum": ["all", "tilde", "last", "none"]},
        "time": {"enum": ["heat", "travel", None]},
        "diffusion": _EXPR,
        "rate": _EXPR,
        "speed": _EXPR,
        "laplace_rate": _EXPR,
        "laplace_drift": _EXPR,
        "meaning": {"type": "string"},
    },
}

_SYSTEM_KEYS = {
    "kind": {"enum": ["diagonal", "first_order"]},
    "a": _EXPR,
    "p": {"enum": [0, 1]},
    "m": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
    "params": {"type": "array", "items": {"type": "string"}},
    "opaques": {"type": "array", "items": {"type": "string"}},
    "declared": {"type": "array", "items": _DECLARED},
    "conditions": {"type": "array", "items": _EXPR},
    "enumerate": {"type": "object", "additionalProperties": {"type": "array", "items": _EXPR}},
    "macros": _SUBS,
}

_CONDITIONAL = {
    "type": "object",
    "required": ["when", "symmetries"],
    "additionalProperties": False,
    "properties": {
        "when": _SUBS,
        "symmetries": {"type": "array", "items": _EXPR},
        "m": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "note": {"type": "string"},
    },
}

_AET = {
    "type": "object",
    "required": ["id"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "integer", "minimum": 1, "maximum": 22},
        "bindings": _SUBS,
        "when": _SUBS,
        "symmetry": {"type": "boolean"},
        "f1": _EXPR,
        "f2": _EXPR,
        "note": {"type": "string"},
    },
}

_DISPUTED = {
    "type": "object",
    "required": ["reason"],
    "additionalProperties": False,
    "properties": {
        "symmetry": _EXPR,
        "aet": _AET,
        "when": _SUBS,
        "declared": {"type": "array", "items": _DECLARED},
        "m": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "f1": _EXPR,
        "f2": _EXPR,
        "reason": {"type": "string", "minLength": 1},
    },
    "oneOf": [{"required": ["symmetry"]}, {"required": ["aet"]}],
}

_ENTRY = {
    "type": "object",
    "required": ["row", "anchor", "f1", "f2", "symmetries"],
    "additionalProperties": False,
    "properties": {
        **_SYSTEM_KEYS,
        "row": {"type": ["integer", "string"]},
        "anchor": {"type": "string"},
        "f1": _EXPR,
        "f2": _EXPR,
        "substitute": _SUBS,
        "gamma": _EXPR,
        "symmetries": {"type": "array", "items": _EXPR},
        "conditional": {"type": "array", "items": _CONDITIONAL},
        "aet": {"type": "array", "items": _AET},
        "disputed": {"type": "array", "items": _DISPUTED},
        "flags": {"type": "object", "additionalProperties": False,
                  "properties": {k: {"type": "boolean"}
                                 for k in ("galilei", "exp_galilei", "conformal")}},
        "erratum": {"type": "string"},
        "quarantine": {"type": "string"},
        "note": {"type": "string"},
    },
}

SCHEMA = {
    "type": "object",
    "required": ["table", "entries"],
    "additionalProperties": False,
    "properties": {
        **_SYSTEM_KEYS,
        "table": {"type": ["integer", "string"]},
        "title": {"type": "string"},
        "entries": {"type": "array", "items": _ENTRY},
    },
}

_DEFAULTS = {"kind": "diagonal", "a": "1", "p": 1, "m": [1], "params": [], "opaques": [],
             "declared": [], "conditions": [], "enumerate": {}, "macros": {}}


class CatalogError(ValueError):
    """Schema or resolution failure, located by file and JSON pointer."""

    def __init__(self, source: str, pointer: str, message: str):
        self.source, self.pointer = source, pointer
        super().__init__(f"{source}:{pointer or '/'}: {message}")


def _pointer(parts: Iterable) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def expand_xsq(text: str, m: int) -> str:
    """Replace the token ``xsq`` by the squared norm x1^2 + ... + xm^2."""
    return re.sub(r"\bxsq\b", "(" + " + ".join(f"x{i}^2" for i in range(1, m + 1)) + ")", text)


def expand_alpha(text: str, m: int) -> list[str]:
    """Replace the ``_alpha`` index in generator text by 1..m (and ``xsq`` by the norm)."""
    text = expand_xsq(text, m)
    if "_alpha" not in text:
        return [text]
    return [text.replace("Ghat_alpha", f"Ghat{i}").replace("G_alpha", f"G{i}")
            .replace("x_alpha", f"x{i}") for i in range(1, m + 1)]


@dataclass
class CatalogEntry:
    table: int | str
    row: int | str
    anchor: str
    kind: Kind
    a: str
    p: int
    ms: tuple[int, ...]
    params: tuple[str, ...]
    opaques: tuple[str, ...]
    declared: tuple[dict, ...]
    macros: dict[str, str]
    f1: str
    f2: str
    symmetries: tuple[str, ...]
    substitute: dict[str, str] = field(default_factory=dict)
    conditions: tuple[str, ...] = ()
    enumerate: dict[str, tuple[str, ...]] = field(default_factory=dict)
    gamma: str | None = None
    conditional: tuple[dict, ...] = ()
    aet: tuple[dict, ...] = ()
    disputed: tuple[dict, ...] = ()
    flags: dict[str, bool] | None = None
    erratum: str = ""
    quarantine: str = ""
    note: str = ""
    source: str = ""
    pointer: str = ""

    @property
    def id(self) -> str:
        return f"T{self.table}.{self.row}"

    # -------------------------------------------------------- symbol tables
    def _declared(self, m: int, table: SymbolTable, b: Mapping) -> list[DeclaredFunction]:
        out = []
        for d in self.declared:
            space = {"all": tuple(range(1, m + 1)), "tilde": tuple(range(1, m)),
                     "last": (m,), "none": ()}[d["space"]]
            ex = lambda k, default: (normalize(self._expr(d[k], table, m).subs(b)) if k in d
                                     else default)
            out.append(DeclaredFunction(
                d["name"], space, d.get("time"), ex("diffusion", sp.Integer(1)),
                ex("rate", sp.Integer(0)), ex("speed", sp.Integer(0)), ex("laplace_rate", None),
                ex("laplace_drift", sp.Integer(0))))
        return out

    def base_table(self, m: int) -> SymbolTable:
        return SymbolTable(m=m, params=self.params, opaques=self.opaques)

    def table_for(self, m: int, extra: Mapping[str, str] | None = None) -> SymbolTable:
        base = self.base_table(m)
        return base.extend(declared=self._declared(m, base, self.bindings(m, extra)))

    def _expr(self, text: str, table: SymbolTable, m: int, macros: bool = False):
        tab = table.extend(extra=self.macros) if macros else table
        e = parse(expand_xsq(text, m), tab, normal=False)
        if macros and self.macros:
            e = e.subs({sp.Symbol(k): self.macro_exprs(m)[k] for k in self.macros}, simultaneous=True)
        return e.subs(sp.Symbol("m"), m)

    def macro_exprs(self, m: int) -> dict[str, sp.Expr]:
        table = self.base_table(m)
        return {k: parse(expand_xsq(w, m), table, normal=False) for k, w in self.macros.items()}

    def bindings(self, m: int, extra: Mapping[str, str] | None = None) -> dict:
        """Entry substitutions merged with ``extra``, resolved to a fixed point."""
        table = self.base_table(m)
        raw = dict(self.substitute)
        raw.update(extra or {})
        out = {sp.Symbol(k): self._expr(w, table, m) for k, w in raw.items()}
        for _ in range(8):
            new = {k: w.subs(out) for k, w in out.items()}
            if new == out:
                break
            out = new
        return {k: normalize(w) for k, w in out.items()}

    def enumerations(self) -> list[dict[str, str]]:
        if not self.enumerate:
            return [{}]
        names = sorted(self.enumerate)
        return [dict(zip(names, vals)) for vals in product(*(self.enumerate[n] for n in names))]

    # --------------------------------------------------------------- systems
    def system(self, m: int, extra: Mapping[str, str] | None = None) -> DiffusionSystem:
        table = self.table_for(m, extra)
        b = self.bindings(m, extra)
        f1 = self._expr(self.f1, table, m, macros=True).subs(b)
        f2 = self._expr(self.f2, table, m, macros=True).subs(b)
        a = self._expr(self.a, table, m).subs(b)
        return DiffusionSystem(m, normalize(f1), normalize(f2), self.kind, normalize(a), self.p,
                               tuple(self.conditions), table)

    def gamma_expr(self, m: int, extra: Mapping[str, str] | None = None):
        if self.gamma is None:
            return None
        return normalize(self._expr(self.gamma, self.base_table(m), m).subs(self.bindings(m, extra)))

    def fields(self, texts: Iterable[str], sys: DiffusionSystem,
               extra: Mapping[str, str] | None = None) -> list[tuple[str, VectorField]]:
        m = sys.m
        b = self.bindings(m, extra)
        gamma = self.gamma_expr(m, extra)
        macros = {k: w.subs(b) for k, w in self.macro_exprs(m).items()}
        out = []
        for text in texts:
            for t in expand_alpha(text, m):
                X = parse_field(t, sys, sys.symbols, gamma=gamma, macros=macros)
                comps = [normalize(sp.sympify(c).subs(b).subs(sp.Symbol("m"), m))
                         for c in X.components]
                out.append((t, VectorField.from_components(comps[0], comps[1:-2], comps[-2], comps[-1])))
        return out

    def condition_exprs(self, m: int, extra: Mapping[str, str] | None = None) -> list[sp.Expr]:
        """Expressions required to be nonzero (conditions written ``lhs != rhs``)."""
        table = self.base_table(m)
        b = self.bindings(m, extra)
        out = []
        for c in self.conditions:
            lhs, rhs = c.split("!=")
            out.append(normalize((self._expr(lhs, table, m) - self._expr(rhs, table, m)).subs(b)))
        return out

    def free_params(self, m: int, extra: Mapping[str, str] | None = None) -> list[str]:
        """Parameters left symbolic after substitutions and enumeration."""
        bound = {str(k) for k in self.bindings(m, extra)}
        return [p for p in self.params if p not in bound]

    def as_printed(self, item: Mapping) -> "CatalogEntry":
        """The entry with the printed non-linearities and declared functions of a disputed item."""
        over = {d["name"]: d for d in item.get("declared", [])}
        return replace(self, declared=tuple(over.get(d["name"], d) for d in self.declared),
                       f1=item.get("f1", self.f1), f2=item.get("f2", self.f2))

    def uses_declared(self, X: VectorField) -> bool:
        names = {d["name"] for d in self.declared}
        syms = set().union(*(sp.sympify(c).free_symbols for c in X.components))
        return any(s.name.split("_")[0] in names for s in syms)


def _build_entry(data: dict, defaults: dict, source: str, pointer: str) -> CatalogEntry:
    merged = dict(_DEFAULTS)
    merged.update({k: v for k, v in defaults.items() if k in _SYSTEM_KEYS})
    merged.update(data)
    declared = list(defaults.get("declared", [])) + [d for d in data.get("declared", [])
                                                      if d not in defaults.get("declared", [])]
    params = tuple(dict.fromkeys([*defaults.get("params", []), *data.get("params", [])]))
    return CatalogEntry(
        table=defaults["table"], row=data["row"], anchor=data["anchor"],
        kind=Kind.DIAGONAL if merged["kind"] == "diagonal" else Kind.FIRST_ORDER,
        a=str(merged["a"]), p=int(merged["p"]), ms=tuple(merged["m"]), params=params,
        opaques=tuple(merged["opaques"]), declared=tuple(declared), macros=dict(merged["macros"]),
        f1=data["f1"], f2=data["f2"], symmetries=tuple(data["symmetries"]),
        substitute=dict(data.get("substitute", {})),
        conditions=tuple(dict.fromkeys([*defaults.get("conditions", []), *data.get("conditions", [])])),
        enumerate={k: tuple(v) for k, v in merged["enumerate"].items()},
        gamma=data.get("gamma"), conditional=tuple(data.get("conditional", [])),
        aet=tuple(data.get("aet", [])), disputed=tuple(data.get("disputed", [])), flags=data.get("flags"),
        erratum=data.get("erratum", ""), quarantine=data.get("quarantine", ""),
        note=data.get("note", ""), source=source, pointer=pointer)


def _resolve(entry: CatalogEntry):
    """Parse every expression of the entry; raise CatalogError at the first failure."""
    def fail(sub: str, exc: Exception):
        raise CatalogError(entry.source, entry.pointer + sub, str(exc)) from exc

    for name in [*entry.enumerate, *entry.substitute]:
        if name not in entry.params:
            fail("", ParseError(f"'{name}' is not a declared parameter"))
    for m in entry.ms:
        for enum in entry.enumerations():
            try:
                sys = entry.system(m, enum)
            except (ParseError, ValueError) as exc:
                fail("/f1", exc)
            try:
                entry.condition_exprs(m, enum)
            except (ParseError, ValueError) as exc:
                fail("/conditions", exc)
            for i, text in enumerate(entry.symmetries):
                try:
                    entry.fields([text], sys, enum)
                except (ParseError, GeneratorError, ValueError) as exc:
                    fail(f"/symmetries/{i}", exc)
            for i, block in enumerate(entry.conditional):
                if m not in block.get("m", entry.ms):
                    continue
                extra = {**enum, **block["when"]}
                try:
                    sys_c = entry.system(m, extra)
                    entry.fields(block["symmetries"], sys_c, extra)
                except (ParseError, GeneratorError, ValueError) as exc:
                    fail(f"/conditional/{i}", exc)
            for i, item in enumerate(entry.disputed):
                if "symmetry" not in item:
                    continue
                extra = {**enum, **item.get("when", {})}
                try:
                    printed = entry.as_printed(item)
                    printed.fields([item["symmetry"]], printed.system(m, extra), extra)
                except (ParseError, GeneratorError, ValueError) as exc:
                    fail(f"/disputed/{i}", exc)
            table = entry.base_table(m)
            for i, ref in enumerate(entry.aet):
                try:
                    aet_table = table.extend(params=AET_PARAMETERS)
                    for w in [*ref.get("bindings", {}).values(), *ref.get("when", {}).values()]:
                        parse(w, aet_table, normal=False)
                except ParseError as exc:
                    fail(f"/aet/{i}", exc)


def _entries_from(data: Any, source: str) -> list[CatalogEntry]:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise CatalogError(source, _pointer(err.absolute_path), err.message)
    out = []
    for i, item in enumerate(data["entries"]):
        entry = _build_entry(item, data, source, f"/entries/{i}")
        _resolve(entry)
        out.append(entry)
    return out


def catalog_dir() -> Path:
    return Path(str(resources.files("rdsym.catalog")))


def catalog_files(path: str | Path | None = None) -> list[Path]:
    """Table files in numeric order followed by the worked examples."""
    path = Path(path) if path is not None else catalog_dir()
    if path.is_file():
        return [path]
    tables = sorted(path.glob("table*.json"), key=lambda p: int(p.stem[5:]))
    extras = [p for p in (path / "examples.json",) if p.exists()]
    return tables + extras


def load_catalog(path: str | Path | None = None) -> list[CatalogEntry]:
    """Load and resolve one catalog file, or every table file in a directory."""
    out = []
    for f in catalog_files(path):
        text = f.read_text(encoding="utf-8")
        if not text.strip():
            raise CatalogError(f.name, "", "empty file")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CatalogError(f.name, "", f"invalid JSON: {exc}") from exc
        out.extend(_entries_from(data, f.name))
    return out


def catalog_hash(path: str | Path | None = None) -> str:
    h = hashlib.sha256()
    for f in catalog_files(path):
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()
