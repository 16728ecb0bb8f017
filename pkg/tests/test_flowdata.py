import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import blank_row, dataset_of
from flowthreat.exceptions import ArgumentError, ArityError, CellTypeError, LabelConflict
from flowthreat.flowdata import (
    ATTACK_CATEGORIES,
    Dataset,
    canonical_category,
    clean_labels,
    deduplicate,
    load_csv,
    record_from_mapping,
    summarize,
    synthesize,
    write_csv,
)
from flowthreat.schema import Kind, builtin_schema


# -- schema -----------------------------------------------------------------


def test_schema_has_49_columns():
    assert len(builtin_schema()) == 49


def test_schema_dur_is_float_at_index_6():
    col = builtin_schema()[6]
    assert (col.name, col.kind) == ("dur", Kind.FLOAT)


def test_schema_proto_is_nominal_at_index_4():
    col = builtin_schema()[4]
    assert (col.name, col.kind) == ("proto", Kind.NOMINAL)


def test_schema_bookends():
    s = builtin_schema()
    assert s[0].name == "srcip" and s[0].kind is Kind.NOMINAL
    assert (s[47].name, s[47].kind) == ("attack_cat", Kind.NOMINAL)
    assert (s[48].name, s[48].kind) == ("label", Kind.BINARY)
    assert [c.index for c in s] == list(range(49))
    assert len(set(s.names)) == 49


# -- loading ----------------------------------------------------------------


def _write_rows(path, ds, header=False):
    write_csv(ds, path, header=header)
    return path


def test_two_files_concatenate_in_order(tmp_path):
    ds = synthesize(15, 0.4, seed=3)
    a = _write_rows(tmp_path / "a.csv", ds.take(range(10)))
    b = _write_rows(tmp_path / "b.csv", ds.take(range(10, 15)), header=True)
    loaded = load_csv([a, b])
    assert len(loaded) == 15
    assert [(p.path, p.n_rows) for p in loaded.provenance] == [(str(a), 10), (str(b), 5)]
    assert loaded == ds


def test_non_numeric_dur_names_the_column(tmp_path, schema):
    ds = synthesize(3, 0.0, seed=1)
    path = _write_rows(tmp_path / "x.csv", ds)
    lines = path.read_text().splitlines()
    cells = lines[1].split(",")
    cells[schema.index_of("dur")] = "abc"
    lines[1] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CellTypeError) as err:
        load_csv([path])
    assert err.value.column == "dur"
    assert err.value.line == 2
    assert "dur" in str(err.value)
    assert isinstance(err.value, TypeError)


def test_empty_service_cell_is_missing(tmp_path, schema):
    ds = synthesize(4, 0.5, seed=2).replace(service=np.array(["http", None, "dns", None], dtype=object))
    path = _write_rows(tmp_path / "s.csv", ds)
    loaded = load_csv([path])
    assert loaded.columns["service"].tolist() == ["http", None, "dns", None]


def test_dash_marker_becomes_missing(tmp_path, schema):
    ds = synthesize(2, 0.0, seed=2)
    path = _write_rows(tmp_path / "d.csv", ds)
    text = path.read_text().splitlines()
    cells = text[0].split(",")
    cells[schema.index_of("state")] = "-"
    cells[schema.index_of("sloss")] = "-"
    text[0] = ",".join(cells)
    path.write_text("\n".join(text) + "\n")
    loaded = load_csv([path])
    assert loaded.columns["state"][0] is None
    assert math.isnan(loaded.columns["sloss"][0])


def test_short_row_reports_file_and_line(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("1.2.3.4,5,6\n")
    with pytest.raises(ArityError) as err:
        load_csv([path])
    assert (err.value.line, err.value.n_cells) == (1, 3)
    assert str(path) in str(err.value)


def test_missing_file_names_path(tmp_path):
    with pytest.raises(FileNotFoundError, match="nowhere.csv"):
        load_csv([tmp_path / "nowhere.csv"])


def test_header_autodetect(tmp_path):
    ds = synthesize(5, 0.2, seed=4)
    with_header = _write_rows(tmp_path / "h.csv", ds, header=True)
    without = _write_rows(tmp_path / "n.csv", ds, header=False)
    assert load_csv([with_header]) == load_csv([without]) == ds


def test_hex_ports_parse(tmp_path, schema):
    ds = synthesize(2, 0.0, seed=5)
    path = _write_rows(tmp_path / "hex.csv", ds)
    lines = path.read_text().splitlines()
    cells = lines[0].split(",")
    cells[schema.index_of("sport")] = "0x000b"
    lines[0] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    assert load_csv([path]).columns["sport"][0] == 11.0


def test_write_load_round_trip(tmp_path, small_synth):
    path = _write_rows(tmp_path / "rt.csv", small_synth, header=True)
    assert load_csv([path]) == small_synth


# -- dedup ------------------------------------------------------------------


def test_three_identical_rows_collapse(schema):
    row = blank_row(schema, proto="tcp", dur=1.5)
    out, removed = deduplicate(dataset_of(schema, [row, row, row]))
    assert (len(out), removed) == (1, 2)


def test_distinct_rows_untouched(small_synth):
    out, removed = deduplicate(small_synth)
    assert removed == 0 and out == small_synth


def test_rows_differing_only_in_label_both_kept(schema):
    a = blank_row(schema, proto="udp", dur=0.1, label=0.0)
    b = blank_row(schema, proto="udp", dur=0.1, label=1.0)
    out, removed = deduplicate(dataset_of(schema, [a, b]))
    assert removed == 0 and len(out) == 2


def _brute_force_unique(rows):
    """Pairwise comparator: keep row i unless an earlier row matches on every cell."""
    def same(r, s):
        for x, y in zip(r, s):
            xm = x is None or (isinstance(x, float) and math.isnan(x))
            ym = y is None or (isinstance(y, float) and math.isnan(y))
            if xm or ym:
                if xm != ym:
                    return False
            elif x != y:
                return False
        return True

    return [i for i, r in enumerate(rows) if not any(same(rows[j], r) for j in range(i))]


def test_dedup_matches_pairwise_oracle_on_100_rows(schema):
    rng = random.Random(8)
    pool = [
        blank_row(schema, proto=rng.choice(["tcp", "udp"]), dur=rng.choice([0.5, 1.0, None]),
                  service=rng.choice([None, "http"]), label=float(rng.randint(0, 1)))
        for _ in range(12)
    ]
    rows = [rng.choice(pool) for _ in range(100)]
    ds = dataset_of(schema, rows)
    out, removed = deduplicate(ds)
    keep = _brute_force_unique(rows)
    assert removed == 100 - len(keep)
    assert out == ds.take(keep)


def test_dedup_idempotent(schema):
    row = blank_row(schema, proto="tcp")
    once, _ = deduplicate(dataset_of(schema, [row, row, blank_row(schema)]))
    twice, removed = deduplicate(once)
    assert removed == 0 and twice == once


# -- labels -----------------------------------------------------------------


def _cats(schema, pairs):
    rows = [blank_row(schema, attack_cat=c, label=float(y)) for c, y in pairs]
    return dataset_of(schema, rows)


def test_padded_fuzzers_canonicalized(schema):
    out = clean_labels(_cats(schema, [(" Fuzzers ", 1)]))
    assert out.attack_cats.tolist() == ["fuzzers"]


def test_missing_category_with_label_zero_is_normal(schema):
    out = clean_labels(_cats(schema, [(None, 0)]))
    assert out.attack_cats.tolist() == ["normal"]


def test_missing_category_with_label_one_is_unknown(schema):
    out = clean_labels(_cats(schema, [(None, 1)]))
    assert out.attack_cats.tolist() == ["unknown-attack"]


def test_backdoor_plural_and_singular_merge(schema):
    out = clean_labels(_cats(schema, [("Backdoor", 1), ("Backdoors", 1)]))
    assert out.attack_cats.tolist() == ["backdoor", "backdoor"]


@pytest.mark.parametrize("raw, expected", [
    ("Exploits", "exploits"), ("DoS", "dos"), ("Reconnaissance", "reconnaissance"),
    ("Shellcode", "shellcode"), ("Worms", "worms"), ("Generic", "generic"),
    ("Analysis", "analysis"), ("NaN", None), ("  ", None),
])
def test_canonical_category_table(raw, expected):
    assert canonical_category(raw) == expected


def test_label_zero_with_attack_category_conflicts(schema):
    with pytest.raises(LabelConflict):
        clean_labels(_cats(schema, [("Exploits", 0)]))


def test_clean_labels_idempotent_and_count_preserving(small_synth):
    once = clean_labels(small_synth)
    assert len(once) == len(small_synth)
    assert clean_labels(once) == once
    assert set(once.attack_cats.tolist()) <= set(ATTACK_CATEGORIES)


def test_cleaned_label_iff_normal(small_synth):
    out = clean_labels(small_synth)
    for y, c in zip(out.labels.tolist(), out.attack_cats.tolist()):
        assert (y == 0) == (c == "normal")


# -- summary ----------------------------------------------------------------


def test_summary_class_counts(schema):
    rows = [blank_row(schema, label=float(y)) for y in [0] * 7 + [1] * 3]
    s = summarize(dataset_of(schema, rows))
    assert s.class_counts == {0: 7, 1: 3}
    assert sum(s.class_counts.values()) == s.n_records == 10


def test_summary_constant_column(schema):
    rows = [blank_row(schema, dur=2.5, proto="tcp") for _ in range(4)]
    stats = {f.name: f for f in summarize(dataset_of(schema, rows)).features}
    assert stats["dur"].std == 0.0 and stats["dur"].cardinality == 1
    assert stats["proto"].cardinality == 1
    assert stats["sbytes"].missing_rate == 1.0


def test_summary_reports_both_counts(small_synth):
    s = summarize(small_synth, n_duplicates_removed=5)
    doc = s.to_dict()
    assert doc["n_records_before_dedup"] == len(small_synth) + 5
    assert doc["n_duplicates_removed"] == 5
    assert all(0.0 <= f["missing_rate"] <= 1.0 for f in doc["features"])


# -- synthesize -------------------------------------------------------------


def test_synthesize_exact_attack_count():
    assert int(synthesize(1000, 0.5, 7).labels.sum()) == 500


def test_synthesize_all_normal():
    assert synthesize(1000, 0.0, 7).labels.tolist() == [0] * 1000


def test_synthesize_deterministic(tmp_path):
    a, b = synthesize(300, 0.3, 7), synthesize(300, 0.3, 7)
    assert a == b
    write_csv(a, tmp_path / "a.csv")
    write_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_synthesize_rounds_half_up():
    # 5 * 0.5 = 2.5 rounds to 3, not to the even 2
    assert int(synthesize(5, 0.5, 0).labels.sum()) == 3


@pytest.mark.parametrize("n, frac", [(1, 0.5), (10, 1.5), (10, -0.1)])
def test_synthesize_rejects_bad_arguments(n, frac):
    with pytest.raises(ArgumentError):
        synthesize(n, frac, 0)


# -- NDJSON records ---------------------------------------------------------


def test_record_from_mapping_defaults_label(schema):
    cells = record_from_mapping(schema, {"proto": "tcp", "dur": 0.5, "sport": "0x10"})
    assert cells[schema.index_of("label")] == 0.0
    assert cells[schema.index_of("sport")] == 16.0
    assert cells[schema.index_of("service")] is None


@pytest.mark.parametrize("obj", [{"bogus": 1}, {"dur": "fast"}, {"dur": True}, {"label": 3}, [1, 2]])
def test_record_from_mapping_rejects(schema, obj):
    with pytest.raises((ArgumentError, CellTypeError)):
        record_from_mapping(schema, obj)


# -- properties -------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 60), frac=st.floats(0, 1), seed=st.integers(0, 2**16))
def test_synthesize_properties(n, frac, seed):
    ds = synthesize(n, frac, seed)
    assert len(ds) == n
    assert int(ds.labels.sum()) == math.floor(n * frac + 0.5)
    assert ds == synthesize(n, frac, seed)
    assert sum(summarize(ds).class_counts.values()) == n


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**16), dup=st.integers(0, 10))
def test_dedup_idempotent_property(seed, dup):
    base = synthesize(20, 0.5, seed)
    ds = Dataset.concat([base, base.take(list(range(dup)))])
    once, removed = deduplicate(ds)
    assert removed == dup
    assert deduplicate(once) == (once, 0)
