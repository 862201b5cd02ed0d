"""Command-line front end.

Exit codes: 0 everything verified, 1 at least one failed check, 2 load or
usage error.
"""
from __future__ import annotations

import json
import logging
import os
import re
import sys
from pathlib import Path

import click
import sympy as sp

from . import __version__
from .catalog import CatalogError, catalog_dir, catalog_hash, load_catalog, verify_all, verify_aet_ref
from .expr import RESERVED_FUNCTIONS, ParseError, SymbolTable, parse, to_text
from .model import DiffusionSystem, GeneratorError, Kind, parse_field
from .prolong import check_symmetry, lie_bracket

log = logging.getLogger("rdsym")

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_BUILTIN = re.compile(r"^(u|v|t|x\d+|[uv]_(?:t|x\d+)+|d_(?:t|u|v|x\d+)|D|K|G\d+|G_alpha)$")


def _default_seed() -> int:
    try:
        return int(os.environ.get("RDSYM_SEED", "0"))
    except ValueError:
        return 0


def _provenance(seed: int, path=None):
    try:
        h = catalog_hash(path)[:16]
    except OSError:
        h = "unavailable"
    log.info("rdsym %s seed=%s catalog=%s", __version__, seed, h)


def _names(*texts: str) -> tuple[set[str], set[str]]:
    """Parameters and opaque function names used in free-form expressions."""
    params, opaques = set(), set()
    for text in texts:
        for mt in _IDENT.finditer(text or ""):
            name = mt.group(0)
            if name in RESERVED_FUNCTIONS or _BUILTIN.match(name):
                continue
            rest = text[mt.end():].lstrip()
            (opaques if rest.startswith("(") else params).add(name)
    return params, opaques


def _system(f1: str, f2: str, a: str, m: int, kind: str, p: int, field_texts=()) -> DiffusionSystem:
    params, opaques = _names(f1, f2, a, *field_texts)
    table = SymbolTable(m=m, params=params, opaques=opaques)
    k = Kind.DIAGONAL if kind == "diagonal" else Kind.FIRST_ORDER
    return DiffusionSystem(m, parse(f1, table), parse(f2, table), kind=k,
                           a=parse(a, table), p=p, table=table)


def _fail(msg: str, code: int = 2):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__, prog_name="rdsym")
@click.option("-v", "--verbose", is_flag=True, help="Log provenance and progress to stderr.")
def main(verbose: bool):
    """Lie point-symmetry verification for two-component reaction-diffusion systems."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)


# ------------------------------------------------------------------ verify
@main.command()
@click.option("--table", "table_", help="Table number (1-10) or E for the worked examples.")
@click.option("--row", help="Row identifier within the table.")
@click.option("--m", "m", type=int, help="Spatial dimension (default: every m listed by the row).")
@click.option("--all", "all_", is_flag=True, help="Verify the whole catalog.")
@click.option("--appendix", is_flag=True, help="Verify the matrix algebras instead of the tables.")
@click.option("--catalog", type=click.Path(exists=True), help="Alternative catalog file or directory.")
@click.option("--seed", type=int, default=None, help="Probe seed (default $RDSYM_SEED or 0).")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), help="Write the JSON report here.")
@click.option("--full", is_flag=True, help="Print every check, not only failures and disputes.")
def verify(table_, row, m, all_, appendix, catalog, seed, jobs, out, full):
    """Verify catalog rows: symmetries, closure, extension flags and AETs."""
    seed = _default_seed() if seed is None else seed
    if appendix:
        from .matrix_algebra import AppendixError, load_appendix, verify_appendix
        try:
            rep = verify_appendix(load_appendix(catalog))
        except AppendixError as exc:
            _fail(str(exc))
        click.echo("\n".join(rep.lines()))
        ok = rep.relations_ok and not rep.homomorphism_defects
        sys.exit(0 if ok else 1)
    if not (all_ or table_):
        _fail("give --all or --table")
    try:
        entries = load_catalog(catalog)
    except CatalogError as exc:
        _fail(str(exc))
    _provenance(seed, catalog)
    if table_:
        entries = [e for e in entries if str(e.table) == str(table_)]
        if not entries:
            _fail(f"no such table: {table_}")
    if row is not None:
        entries = [e for e in entries if str(e.row) == str(row)]
        if not entries:
            _fail(f"no such row: {row}")
    report = verify_all(entries, seed=seed, jobs=jobs, m=m, path=catalog)
    click.echo(report.to_text(verbose=full), nl=False)
    if out:
        Path(out).write_text(report.to_json(), encoding="utf-8")
    sys.exit(report.exit_code)


# ------------------------------------------------------------------- check
@main.command()
@click.option("--f1", required=True)
@click.option("--f2", required=True)
@click.option("--a", "a", default="1", show_default=True, help="Diffusion ratio.")
@click.option("--m", "m", type=int, default=1, show_default=True)
@click.option("--kind", type=click.Choice(["diagonal", "first_order"]), default="diagonal")
@click.option("--p", "p", type=int, default=1, show_default=True)
@click.option("--field", "fields", multiple=True, required=True,
              help="Generator in the basis tokens d_t, d_x1, d_u, d_v (D, K, G1 allowed).")
def check(f1, f2, a, m, kind, p, fields):
    """Check candidate generators against an ad-hoc system."""
    try:
        sys_ = _system(f1, f2, a, m, kind, p, fields)
        Xs = [parse_field(f, sys_) for f in fields]
    except (ParseError, GeneratorError, ValueError) as exc:
        _fail(str(exc))
    click.echo(sys_.describe())
    code = 0
    for text, X in zip(fields, Xs):
        r = check_symmetry(X, sys_)
        click.echo(f"{text}: {r.status}")
        if not r.passed:
            code = 1
            for k, res in ((1, r.residual1), (2, r.residual2)):
                click.echo(f"    residual{k}: {to_text(res)}")
    sys.exit(code)


# ------------------------------------------------------------------ detgen
@main.command()
@click.option("--system", "system_", type=click.Choice(["eq8", "diagonal"]), default="eq8",
              help="eq8: first-order coupled kind; diagonal: diag(1, a) diffusion.")
@click.option("--p", "p", type=int, default=1, show_default=True)
@click.option("--m", "m", type=int, default=1, show_default=True)
@click.option("--a", "a", default="1", show_default=True)
def detgen(system_, p, m, a):
    """Print the determining equations for unspecified f1(u, v), f2(u, v)."""
    from .detgen import generate_determining, opaque_system
    try:
        if system_ == "eq8":
            sys_ = opaque_system(m, Kind.FIRST_ORDER, a=0, p=p)
        else:
            sys_ = opaque_system(m, Kind.DIAGONAL, a=sp.sympify(a))
    except (ValueError, sp.SympifyError) as exc:
        _fail(str(exc))
    ds = generate_determining(sys_)
    for line in ds.to_text():
        click.echo(line)


# --------------------------------------------------------------- transform
@main.command()
@click.option("--aet", "aet_id", type=int, required=True)
@click.option("--table", "table_", required=True)
@click.option("--row", required=True)
@click.option("--m", "m", type=int, default=None)
@click.option("--bind", multiple=True, help="Override a binding, e.g. --bind rho=2.")
@click.option("--seed", type=int, default=None)
def transform(aet_id, table_, row, m, bind, seed):
    """Apply an additional equivalence transformation to a catalog row."""
    seed = _default_seed() if seed is None else seed
    try:
        entries = load_catalog()
    except CatalogError as exc:
        _fail(str(exc))
    _provenance(seed)
    hits = [e for e in entries if str(e.table) == str(table_) and str(e.row) == str(row)]
    if not hits:
        _fail(f"no such row: T{table_}.{row}")
    entry = hits[0]
    refs = [r for r in entry.aet if r["id"] == aet_id] or [{"id": aet_id}]
    override = dict(b.split("=", 1) for b in bind) if bind else None
    mm = m or entry.ms[0]
    code = 0
    for ref in refs:
        enum = entry.enumerations()[0]
        try:
            verdict, values, bindings = verify_aet_ref(entry, ref, mm, seed, override=override, enum=enum)
        except (ParseError, ValueError) as exc:
            _fail(str(exc))
        when = f" when {ref['when']}" if ref.get("when") else ""
        click.echo(f"{entry.id} AET {aet_id}{when}: {verdict.status}")
        click.echo(f"    bindings: {', '.join(f'{k}={v}' for k, v in bindings.items()) or '-'}")
        for d in verdict.details:
            click.echo(f"    {d}")
        code = max(code, 0 if verdict.passed else 1)
    sys.exit(code)


# ----------------------------------------------------------------- bracket
@main.command()
@click.argument("first")
@click.argument("second")
@click.option("--m", "m", type=int, default=1, show_default=True)
def bracket(first, second, m):
    """Lie bracket of two generators written in the basis tokens."""
    try:
        sys_ = _system("0", "0", "1", m, "diagonal", 1, (first, second))
        X, Y = parse_field(first, sys_), parse_field(second, sys_)
    except (ParseError, GeneratorError, ValueError) as exc:
        _fail(str(exc))
    click.echo(lie_bracket(X, Y, sys_.symbols).to_text())


# ----------------------------------------------------------------- catalog
@main.group()
def catalog():
    """Browse the encoded tables."""


@catalog.command("list")
@click.option("--table", "table_")
def catalog_list(table_):
    try:
        entries = load_catalog()
    except CatalogError as exc:
        _fail(str(exc))
    for e in entries:
        if table_ and str(e.table) != str(table_):
            continue
        tag = " [quarantined]" if e.quarantine else ""
        click.echo(f"{e.id:<24} m={','.join(map(str, e.ms))}  f1={e.f1}  f2={e.f2}{tag}")


@catalog.command("inspect")
@click.argument("entry_id")
def catalog_inspect(entry_id):
    try:
        entries = load_catalog()
    except CatalogError as exc:
        _fail(str(exc))
    for e in entries:
        if e.id == entry_id:
            data = {"id": e.id, "anchor": e.anchor, "kind": e.kind.value, "a": e.a, "p": e.p,
                    "m": list(e.ms), "params": list(e.params), "f1": e.f1, "f2": e.f2,
                    "symmetries": list(e.symmetries), "conditional": list(e.conditional),
                    "aet": list(e.aet), "disputed": list(e.disputed), "source": e.source}
            click.echo(json.dumps(data, indent=2, ensure_ascii=False))
            return
    _fail(f"no such entry: {entry_id}")


if __name__ == "__main__":  # pragma: no cover
    main()
