"""Flow-record datasets: CSV ingestion, deduplication, label cleaning, summaries
and a seeded synthetic generator for hermetic tests.

Cells are stored column-wise.  Numeric kinds live in float64 arrays with NaN
for missing; nominal kinds live in object arrays holding ``str`` or ``None``.
"""

from __future__ import annotations

import csv
import ipaddress
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .exceptions import ArgumentError, ArityError, CellTypeError, LabelConflict
from .schema import FeatureSchema, Kind, builtin_schema

MISSING_MARKERS = frozenset({"", "-"})
NORMAL = "normal"
UNKNOWN_ATTACK = "unknown-attack"


def _load_category_table():
    text = resources.files("flowthreat").joinpath("resources/attack_categories.json").read_text()
    table = json.loads(text)
    return tuple(table["categories"]), dict(table["aliases"])


ATTACK_CATEGORIES, CATEGORY_ALIASES = _load_category_table()


@dataclass(frozen=True)
class FlowRecord:
    """One flow: a cell per schema column, ``None`` for missing."""

    values: tuple

    @property
    def label(self) -> int:
        return int(self.values[-1])

    @property
    def attack_cat(self) -> str | None:
        return self.values[-2]


@dataclass(frozen=True)
class SourceFile:
    path: str
    n_rows: int


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: FeatureSchema
    columns: Mapping[str, np.ndarray]
    provenance: tuple[SourceFile, ...] = ()

    def __post_init__(self):
        if set(self.columns) != set(self.schema.names):
            raise ArgumentError("columns do not match schema")
        lengths = {len(a) for a in self.columns.values()}
        if len(lengths) > 1:
            raise ArgumentError(f"ragged columns: lengths {sorted(lengths)}")
        frozen = {}
        for col in self.schema:
            arr = self.columns[col.name]
            want = np.float64 if col.kind.is_numeric else object
            arr = np.array(arr, dtype=want, copy=True)
            arr.setflags(write=False)
            frozen[col.name] = arr
        object.__setattr__(self, "columns", frozen)

    def __len__(self) -> int:
        return len(self.columns[self.schema.names[0]])

    def __iter__(self) -> Iterator[FlowRecord]:
        return iter(self.records)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.schema != other.schema or len(self) != len(other):
            return False
        return all(
            _cells_equal(self.columns[n], other.columns[n]) for n in self.schema.names
        )

    @property
    def records(self) -> list[FlowRecord]:
        cols = [_as_cells(self.columns[n]) for n in self.schema.names]
        return [FlowRecord(tuple(row)) for row in zip(*cols)]

    @property
    def labels(self) -> np.ndarray:
        return self.columns["label"].astype(np.int64)

    @property
    def attack_cats(self) -> np.ndarray:
        return self.columns["attack_cat"]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.schema, {n: a[idx] for n, a in self.columns.items()}, self.provenance
        )

    def replace(self, **columns) -> "Dataset":
        cols = dict(self.columns)
        cols.update(columns)
        return Dataset(self.schema, cols, self.provenance)

    @classmethod
    def from_records(
        cls, schema: FeatureSchema, records: Iterable, provenance=()
    ) -> "Dataset":
        rows = [r.values if isinstance(r, FlowRecord) else tuple(r) for r in records]
        for i, row in enumerate(rows):
            if len(row) != len(schema):
                raise ArgumentError(f"record {i} has {len(row)} cells, expected {len(schema)}")
        cols = {}
        for col in schema:
            cells = [row[col.index] for row in rows]
            if col.kind.is_numeric:
                cols[col.name] = np.array(
                    [np.nan if c is None else float(c) for c in cells], dtype=np.float64
                )
            else:
                arr = np.empty(len(cells), dtype=object)
                arr[:] = cells
                cols[col.name] = arr
        return cls(schema, cols, tuple(provenance))

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        if not parts:
            raise ArgumentError("nothing to concatenate")
        schema = parts[0].schema
        cols = {n: np.concatenate([p.columns[n] for p in parts]) for n in schema.names}
        prov = tuple(s for p in parts for s in p.provenance)
        return cls(schema, cols, prov)


def _as_cells(arr: np.ndarray) -> list:
    if arr.dtype == object:
        return arr.tolist()
    return [None if math.isnan(v) else v for v in arr.tolist()]


def _cells_equal(a: np.ndarray, b: np.ndarray) -> bool:
    if a.dtype == object:
        return a.tolist() == b.tolist()
    return bool(np.array_equal(a, b, equal_nan=True))


# ---------------------------------------------------------------------------
# CSV


def _is_ip_like(token: str) -> bool:
    try:
        ipaddress.ip_address(token.strip())
    except ValueError:
        return False
    return True


def _parse_numeric(text: str, kind: Kind) -> float:
    s = text.strip()
    if s in MISSING_MARKERS or s.lower() == "nan":
        return math.nan
    try:
        if kind is not Kind.FLOAT and s[:2].lower() == "0x":
            value = float(int(s, 16))
        else:
            value = float(s)
    except ValueError:
        raise ValueError(text) from None
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _parse_nominal(text: str, allow_nan_marker: bool) -> str | None:
    s = text.strip()
    if s in MISSING_MARKERS:
        return None
    if allow_nan_marker and s.lower() == "nan":
        return None
    # attack_cat keeps its raw spelling; clean_labels canonicalizes it
    return text if allow_nan_marker else s


def _detect_header(first_row: list[str]) -> bool:
    if not first_row:
        return False
    cell = first_row[0].strip()
    return cell != "" and not _is_ip_like(cell)


def _read_file(path: Path, schema: FeatureSchema, has_header: bool | None):
    kinds = [c.kind for c in schema]
    names = schema.names
    width = len(schema)
    rows: list[list] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, raw in enumerate(reader, start=1):
            if lineno == 1:
                header = _detect_header(raw) if has_header is None else has_header
                if header:
                    continue
            if not raw:
                continue
            if len(raw) != width:
                raise ArityError(path, lineno, len(raw), width)
            row = []
            for j, (cell, kind) in enumerate(zip(raw, kinds)):
                if kind.is_numeric:
                    try:
                        row.append(_parse_numeric(cell, kind))
                    except ValueError:
                        raise CellTypeError(path, lineno, names[j], cell) from None
                else:
                    row.append(_parse_nominal(cell, names[j] == "attack_cat"))
            label = row[-1]
            if label not in (0.0, 1.0):
                raise CellTypeError(path, lineno, names[-1], raw[-1])
            rows.append(row)
    return rows


def load_csv(
    paths: Sequence[str | Path],
    schema: FeatureSchema | None = None,
    has_header: bool | None = None,
) -> Dataset:
    """Read and concatenate flow CSV files in path order.

    ``has_header=None`` auto-detects per file: the first row is a header when
    its first cell is non-empty and does not parse as an IP address.
    """
    schema = schema or builtin_schema()
    parts = []
    for p in paths:
        path = Path(p)
        if not path.is_file():
            raise FileNotFoundError(f"input file not found: {path}")
        rows = _read_file(path, schema, has_header)
        cols = {}
        for col in schema:
            cells = [r[col.index] for r in rows]
            if col.kind.is_numeric:
                cols[col.name] = np.array(cells, dtype=np.float64).reshape(-1)
            else:
                arr = np.empty(len(cells), dtype=object)
                arr[:] = cells
                cols[col.name] = arr
        parts.append(Dataset(schema, cols, (SourceFile(str(path), len(rows)),)))
    if not parts:
        raise ArgumentError("no input paths given")
    return Dataset.concat(parts)


def record_from_mapping(schema: FeatureSchema, obj: Mapping, source: str = "<input>", line: int = 0) -> tuple:
    """Cells for one record given as ``{column name: value}``.

    Values may be JSON numbers, strings (parsed like CSV cells) or null.
    Absent columns are missing, except ``label`` which defaults to 0.
    """
    if not isinstance(obj, Mapping):
        raise ArgumentError(f"{source}:{line}: record must be a JSON object")
    unknown = set(obj) - set(schema.names)
    if unknown:
        raise ArgumentError(f"{source}:{line}: unknown columns {sorted(unknown)}")
    cells = []
    for col in schema:
        v = obj.get(col.name)
        if col.name == "label" and v is None:
            v = 0
        if col.kind.is_numeric:
            if v is None:
                cells.append(None)
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                raise CellTypeError(source, line, col.name, v)
            try:
                x = _parse_numeric(v, col.kind) if isinstance(v, str) else float(v)
            except ValueError:
                raise CellTypeError(source, line, col.name, v) from None
            if not math.isfinite(x):
                if isinstance(v, str):
                    cells.append(None)
                    continue
                raise CellTypeError(source, line, col.name, v)
            cells.append(x)
        else:
            if v is None:
                cells.append(None)
            elif isinstance(v, str):
                cells.append(_parse_nominal(v, col.name == "attack_cat"))
            else:
                raise CellTypeError(source, line, col.name, v)
    if cells[-1] not in (0.0, 1.0):
        raise CellTypeError(source, line, "label", obj.get("label"))
    return tuple(cells)


def format_cell(value, kind: Kind) -> str:
    if value is None:
        return ""
    if kind.is_numeric:
        if kind is not Kind.FLOAT and float(value).is_integer():
            return str(int(value))
        return repr(float(value))
    return str(value)


def write_csv(ds: Dataset, path: str | Path, header: bool = True) -> None:
    kinds = [c.kind for c in ds.schema]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(ds.schema.names)
        for rec in ds.records:
            writer.writerow([format_cell(v, k) for v, k in zip(rec.values, kinds)])


# ---------------------------------------------------------------------------
# cleaning


def _row_keys(ds: Dataset):
    cols = [_as_cells(ds.columns[n]) for n in ds.schema.names]
    return zip(*cols)


def deduplicate(ds: Dataset) -> tuple[Dataset, int]:
    """Drop exact duplicate rows (all cells, label included), keeping the first."""
    seen: set = set()
    keep = []
    for i, key in enumerate(_row_keys(ds)):
        if key not in seen:
            seen.add(key)
            keep.append(i)
    removed = len(ds) - len(keep)
    if removed == 0:
        return ds, 0
    return ds.take(keep), removed


def canonical_category(raw: str | None) -> str | None:
    if raw is None:
        return None
    s = " ".join(raw.split()).casefold()
    if s in ("", "-", "nan"):
        return None
    return CATEGORY_ALIASES.get(s, s)


def clean_labels(ds: Dataset) -> Dataset:
    """Canonicalize attack categories and fill the ones implied by the label.

    Raises LabelConflict when a category contradicts the binary label.
    """
    labels = ds.labels
    cats = ds.attack_cats
    out = np.empty(len(ds), dtype=object)
    for i, (lab, raw) in enumerate(zip(labels.tolist(), cats.tolist())):
        cat = canonical_category(raw)
        if lab == 0:
            if cat not in (None, NORMAL):
                raise LabelConflict(f"row {i}: label 0 with attack category {raw!r}")
            cat = NORMAL
        else:
            if cat == NORMAL:
                raise LabelConflict(f"row {i}: label 1 with attack category {raw!r}")
            if cat is None:
                cat = UNKNOWN_ATTACK
        out[i] = cat
    return ds.replace(attack_cat=out)


# ---------------------------------------------------------------------------
# summary


@dataclass(frozen=True)
class FeatureStats:
    name: str
    kind: str
    missing_rate: float
    cardinality: int
    min: float | None = None
    max: float | None = None
    mean: float | None = None
    std: float | None = None


@dataclass(frozen=True)
class DatasetSummary:
    n_records: int
    n_duplicates_removed: int
    class_counts: dict
    attack_category_counts: dict
    features: tuple[FeatureStats, ...] = field(default=())

    @property
    def n_records_before_dedup(self) -> int:
        return self.n_records + self.n_duplicates_removed

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_records_before_dedup": self.n_records_before_dedup,
            "n_duplicates_removed": self.n_duplicates_removed,
            "class_counts": {str(k): v for k, v in self.class_counts.items()},
            "attack_category_counts": self.attack_category_counts,
            "features": [vars(f) for f in self.features],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def summarize(ds: Dataset, n_duplicates_removed: int = 0) -> DatasetSummary:
    n = len(ds)
    labels = ds.labels
    classes, counts = np.unique(labels, return_counts=True)
    class_counts = {int(c): int(k) for c, k in zip(classes, counts)}
    cat_counts: dict[str, int] = {}
    for c in ds.attack_cats.tolist():
        key = "<missing>" if c is None else c
        cat_counts[key] = cat_counts.get(key, 0) + 1
    cat_counts = dict(sorted(cat_counts.items()))

    stats = []
    for col in ds.schema:
        arr = ds.columns[col.name]
        if col.kind.is_numeric:
            present = arr[~np.isnan(arr)]
            missing = n - present.size
            if present.size:
                stats.append(FeatureStats(
                    col.name, col.kind.value, missing / n if n else 0.0,
                    int(np.unique(present).size),
                    float(present.min()), float(present.max()),
                    float(present.mean()), float(present.std()),
                ))
            else:
                stats.append(FeatureStats(col.name, col.kind.value, 1.0 if n else 0.0, 0))
        else:
            present = [v for v in arr.tolist() if v is not None]
            stats.append(FeatureStats(
                col.name, col.kind.value, (n - len(present)) / n if n else 0.0,
                len(set(present)),
            ))
    return DatasetSummary(n, n_duplicates_removed, class_counts, cat_counts, tuple(stats))


# ---------------------------------------------------------------------------
# synthetic data

_RAW_ATTACK_NAMES = (
    "Exploits", " Fuzzers ", "Generic", "Reconnaissance", "DoS",
    "Backdoors", "Backdoor", "Analysis", "Shellcode", "Worms",
)


def synthesize(n: int, attack_fraction: float, seed: int) -> Dataset:
    """Generate ``n`` schema-conformant flows, ``round(n * attack_fraction)`` of them attacks.

    Attack rows draw ``sttl``, ``sbytes``, ``dur`` and a few counters from
    shifted distributions, so the classes are separable.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ArgumentError(f"n must be an integer >= 2, got {n!r}")
    if not 0.0 <= attack_fraction <= 1.0:
        raise ArgumentError(f"attack_fraction must be in [0, 1], got {attack_fraction!r}")
    n = int(n)
    rng = np.random.default_rng(seed)
    n_attack = int(math.floor(n * attack_fraction + 0.5))
    is_attack = np.zeros(n, dtype=bool)
    is_attack[rng.permutation(n)[:n_attack]] = True
    a = is_attack

    def pick(options, size, p=None):
        return np.asarray(options, dtype=object)[rng.choice(len(options), size=size, p=p)]

    cols: dict[str, np.ndarray] = {}
    src_normal = np.array([f"59.166.0.{i}" for i in range(10)], dtype=object)
    src_attack = np.array([f"175.45.176.{i}" for i in range(4)], dtype=object)
    cols["srcip"] = np.where(a, pick(src_attack, n), pick(src_normal, n))
    cols["sport"] = rng.integers(1024, 65536, size=n).astype(float)
    cols["dstip"] = pick([f"149.171.126.{i}" for i in range(20)], n)
    cols["dsport"] = np.where(
        a, rng.integers(0, 65536, size=n), pick([80, 53, 21, 25, 443, 111], n).astype(int)
    ).astype(float)

    proto = np.where(
        a,
        pick(["tcp", "udp", "unas", "ospf"], n, [0.5, 0.3, 0.1, 0.1]),
        pick(["tcp", "udp"], n, [0.7, 0.3]),
    )
    cols["proto"] = proto
    cols["state"] = np.where(
        proto == "tcp", pick(["FIN", "CON"], n, [0.8, 0.2]),
        np.where(proto == "udp", pick(["CON", "INT"], n), "INT"),
    ).astype(object)

    dur = np.where(a, rng.exponential(0.05, n), rng.exponential(1.0, n) + 0.2)
    cols["dur"] = np.round(dur, 6)
    sbytes = np.where(a, rng.lognormal(5.0, 0.4, n), rng.lognormal(8.0, 0.6, n))
    dbytes = np.where(a, rng.lognormal(4.0, 0.5, n), rng.lognormal(9.0, 1.0, n))
    cols["sbytes"] = np.round(sbytes)
    cols["dbytes"] = np.round(dbytes)
    cols["sttl"] = np.where(a, 254.0, pick([31.0, 62.0], n).astype(float))
    cols["dttl"] = np.where(a, pick([0.0, 252.0], n).astype(float), pick([29.0, 252.0], n).astype(float))
    cols["sloss"] = rng.poisson(1.0, n).astype(float)
    cols["dloss"] = rng.poisson(1.0, n).astype(float)
    service = pick([None, "http", "dns", "ftp", "smtp", "ssh"], n, [0.4, 0.2, 0.2, 0.08, 0.07, 0.05])
    cols["service"] = service
    spkts = np.maximum(1, rng.poisson(np.where(a, 4, 30)))
    dpkts = rng.poisson(np.where(a, 2, 30))
    cols["Spkts"] = spkts.astype(float)
    cols["Dpkts"] = dpkts.astype(float)
    cols["Sload"] = np.round(cols["sbytes"] * 8 / np.maximum(dur, 1e-6), 3)
    cols["Dload"] = np.round(cols["dbytes"] * 8 / np.maximum(dur, 1e-6), 3)
    tcp = proto == "tcp"
    cols["swin"] = np.where(tcp, 255.0, 0.0)
    cols["dwin"] = np.where(tcp, 255.0, 0.0)
    cols["stcpb"] = np.where(tcp, rng.integers(0, 2**32, size=n), 0).astype(float)
    cols["dtcpb"] = np.where(tcp, rng.integers(0, 2**32, size=n), 0).astype(float)
    cols["smeansz"] = np.round(cols["sbytes"] / spkts)
    cols["dmeansz"] = np.round(cols["dbytes"] / np.maximum(dpkts, 1))
    cols["trans_depth"] = np.where(service == "http", rng.integers(0, 3, n), 0).astype(float)
    cols["res_bdy_len"] = np.where(service == "http", rng.integers(0, 5000, n), 0).astype(float)
    cols["Sjit"] = np.round(rng.exponential(np.where(a, 5.0, 50.0)), 4)
    cols["Djit"] = np.round(rng.exponential(np.where(a, 2.0, 40.0)), 4)
    stime = 1421927414 + np.sort(rng.integers(0, 86400, n))
    cols["Stime"] = stime.astype(float)
    cols["Ltime"] = (stime + np.floor(dur)).astype(float)
    cols["Sintpkt"] = np.round(rng.exponential(np.where(a, 1.0, 20.0)), 4)
    cols["Dintpkt"] = np.round(rng.exponential(np.where(a, 0.5, 20.0)), 4)
    tcprtt = np.where(tcp, np.round(rng.exponential(0.05, n), 6), 0.0)
    cols["tcprtt"] = tcprtt
    cols["synack"] = np.round(tcprtt * 0.6, 6)
    cols["ackdat"] = np.round(tcprtt * 0.4, 6)
    cols["is_sm_ips_ports"] = (rng.random(n) < 0.01).astype(float)
    cols["ct_state_ttl"] = np.where(a, pick([1.0, 2.0], n).astype(float), 0.0)
    http_mthd = np.where(service == "http", rng.integers(0, 3, n), 0).astype(float)
    http_mthd[rng.random(n) < 0.1] = np.nan
    cols["ct_flw_http_mthd"] = http_mthd
    ftp = service == "ftp"
    cols["is_ftp_login"] = np.where(ftp, rng.integers(0, 2, n), 0).astype(float)
    ftp_cmd = np.where(ftp, rng.integers(0, 3, n), 0).astype(float)
    ftp_cmd[rng.random(n) < 0.1] = np.nan
    cols["ct_ftp_cmd"] = ftp_cmd
    for name, lam_n, lam_a in [
        ("ct_srv_src", 5, 20), ("ct_srv_dst", 5, 20), ("ct_dst_ltm", 3, 10),
        ("ct_src_ltm", 3, 10), ("ct_src_dport_ltm", 2, 8), ("ct_dst_sport_ltm", 1, 6),
        ("ct_dst_src_ltm", 4, 15),
    ]:
        cols[name] = (rng.poisson(np.where(a, lam_a, lam_n)) + 1).astype(float)
    cols["attack_cat"] = np.where(a, pick(_RAW_ATTACK_NAMES, n), None).astype(object)
    cols["label"] = a.astype(float)
    return Dataset(builtin_schema(), cols, (SourceFile(f"synthetic(n={n},seed={seed})", n),))
