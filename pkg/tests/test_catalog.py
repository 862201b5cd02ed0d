import copy
import json

import pytest

from rdsym.catalog.schema import CatalogError, catalog_dir, load_catalog
from rdsym.catalog.verify import verify_all, verify_entry


@pytest.fixture(scope="module")
def entries():
    return load_catalog()


def _table(n):
    return json.loads((catalog_dir() / f"table{n}.json").read_text(encoding="utf-8"))


def _write(tmp_path, data, name="t.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data), encoding="utf-8")
    return p


def test_catalog_size_and_ids(entries):
    assert len(entries) >= 100
    ids = [e.id for e in entries]
    assert len(ids) == len(set(ids))
    assert {e.table for e in entries} >= set(range(1, 11))
    assert all(e.anchor for e in entries)


def test_empty_file(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("", encoding="utf-8")
    with pytest.raises(CatalogError, match="empty file"):
        load_catalog(p)


def test_schema_violation_has_pointer(tmp_path):
    data = _table(4)
    del data["entries"][1]["f1"]
    with pytest.raises(CatalogError) as exc:
        load_catalog(_write(tmp_path, data))
    assert exc.value.pointer == "/entries/1"


def test_unknown_generator_token(tmp_path):
    data = _table(4)
    data["entries"][0]["symmetries"][1] = "nu*D - u*d_w"
    with pytest.raises(CatalogError) as exc:
        load_catalog(_write(tmp_path, data))
    assert exc.value.pointer == "/entries/0/symmetries/1"
    assert "d_w" in str(exc.value)


def _small(n, rows):
    data = _table(n)
    data["entries"] = [e for e in data["entries"] if e["row"] in rows]
    return data


def test_single_mutation_gives_single_failure(tmp_path):
    data = _small(4, {1, 2})
    good = verify_all(load_catalog(_write(tmp_path, data, "good.json")))
    assert good.exit_code == 0
    bad = copy.deepcopy(data)
    bad["entries"][0]["symmetries"][0] = "mu*D + v*d_v"
    rep = verify_all(load_catalog(_write(tmp_path, bad, "bad.json")))
    assert [e.status for e in rep.entries] == ["FAIL", "PASS"]
    assert rep.exit_code == 1
    assert any(c.target == "mu*D + v*d_v" for c in rep.entries[0].failures)


def test_report_is_deterministic(tmp_path):
    p = _write(tmp_path, _small(4, {1, 2}))
    a = verify_all(load_catalog(p), seed=11, path=p).to_json()
    b = verify_all(load_catalog(p), seed=11, path=p).to_json()
    assert a == b
    assert json.loads(a)["provenance"]["seed"] == 11


def test_empty_selection_is_vacuous_pass():
    rep = verify_all([])
    assert rep.exit_code == 0 and rep.entries == []


@pytest.mark.parametrize("entry_id", ["T1.7", "T1.8", "T3.5", "T4.1", "T9.3", "TE.gl", "TE.jt"])
def test_selected_rows_pass(entries, entry_id):
    entry = next(e for e in entries if e.id == entry_id)
    rep = verify_entry(entry, seed=0)
    assert rep.status == "PASS", [c for c in rep.failures]
    kinds = {c.check for c in rep.checks}
    assert "symmetry" in kinds


def test_aet_reference_row(entries):
    entry = next(e for e in entries if e.id == "T1.8")
    rep = verify_entry(entry, seed=0)
    aets = [c for c in rep.checks if c.check == "aet"]
    assert aets and all(not c.failed for c in aets)
