"""The UNSW-NB15 flow-record schema."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Kind(str, Enum):
    NOMINAL = "nominal"
    INTEGER = "integer"
    FLOAT = "float"
    TIMESTAMP = "timestamp"
    BINARY = "binary"

    @property
    def is_numeric(self) -> bool:
        return self is not Kind.NOMINAL


@dataclass(frozen=True)
class Column:
    name: str
    kind: Kind
    index: int


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        if [c.index for c in self.columns] != list(range(len(self.columns))):
            raise ValueError("column indices must be contiguous from 0")

    def __len__(self) -> int:
        return len(self.columns)

    def __iter__(self):
        return iter(self.columns)

    def __getitem__(self, key: int | str) -> Column:
        if isinstance(key, str):
            return self.columns[self.index_of(key)]
        return self.columns[key]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def index_of(self, name: str) -> int:
        for c in self.columns:
            if c.name == name:
                return c.index
        raise KeyError(name)

    @classmethod
    def from_pairs(cls, pairs) -> "FeatureSchema":
        return cls(tuple(Column(n, Kind(k), i) for i, (n, k) in enumerate(pairs)))


# Column order and kinds of the 49-attribute UNSW-NB15 feature description.
_UNSW_NB15 = [
    ("srcip", "nominal"),
    ("sport", "integer"),
    ("dstip", "nominal"),
    ("dsport", "integer"),
    ("proto", "nominal"),
    ("state", "nominal"),
    ("dur", "float"),
    ("sbytes", "integer"),
    ("dbytes", "integer"),
    ("sttl", "integer"),
    ("dttl", "integer"),
    ("sloss", "integer"),
    ("dloss", "integer"),
    ("service", "nominal"),
    ("Sload", "float"),
    ("Dload", "float"),
    ("Spkts", "integer"),
    ("Dpkts", "integer"),
    ("swin", "integer"),
    ("dwin", "integer"),
    ("stcpb", "integer"),
    ("dtcpb", "integer"),
    ("smeansz", "integer"),
    ("dmeansz", "integer"),
    ("trans_depth", "integer"),
    ("res_bdy_len", "integer"),
    ("Sjit", "float"),
    ("Djit", "float"),
    ("Stime", "timestamp"),
    ("Ltime", "timestamp"),
    ("Sintpkt", "float"),
    ("Dintpkt", "float"),
    ("tcprtt", "float"),
    ("synack", "float"),
    ("ackdat", "float"),
    ("is_sm_ips_ports", "binary"),
    ("ct_state_ttl", "integer"),
    ("ct_flw_http_mthd", "integer"),
    ("is_ftp_login", "binary"),
    ("ct_ftp_cmd", "integer"),
    ("ct_srv_src", "integer"),
    ("ct_srv_dst", "integer"),
    ("ct_dst_ltm", "integer"),
    ("ct_src_ltm", "integer"),
    ("ct_src_dport_ltm", "integer"),
    ("ct_dst_sport_ltm", "integer"),
    ("ct_dst_src_ltm", "integer"),
    ("attack_cat", "nominal"),
    ("label", "binary"),
]

_BUILTIN = FeatureSchema.from_pairs(_UNSW_NB15)

IDENTIFIER_COLUMNS = ("srcip", "sport", "dstip", "dsport")
LABEL_COLUMNS = ("attack_cat", "label")


def builtin_schema() -> FeatureSchema:
    """Return the canonical 49-column UNSW-NB15 schema."""
    return _BUILTIN
