"""Tabular cohorts: schemas, CSV ingestion, seeded splits and class counts."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ClassAbsent,
    ConfigError,
    DataError,
    EmptyFile,
    MissingColumn,
    OutcomeNotBinary,
)

KINDS = ("continuous", "count", "binary", "categorical", "outcome")
MISSING_TOKENS = frozenset({"", "NA"})
PROVENANCES = ("primary", "external")
PARTITIONS = ("full", "train", "test")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    levels: Mapping[str, int] | None = None
    unit: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.levels:
                raise ConfigError(f"categorical column {self.name!r} needs a level map")
            codes = list(self.levels.values())
            if len(set(codes)) != len(codes):
                raise ConfigError(f"level map of {self.name!r} is not injective")
            keys = [k.strip().lower() for k in self.levels]
            if len(set(keys)) != len(keys):
                raise ConfigError(f"level map of {self.name!r} has duplicate tokens")
            object.__setattr__(
                self,
                "levels",
                MappingProxyType({k.strip().lower(): int(v) for k, v in self.levels.items()}),
            )

    @property
    def numeric(self):
        return self.kind in ("continuous", "count", "binary")

    def to_dict(self):
        d = {"name": self.name, "kind": self.kind}
        if self.levels is not None:
            d["levels"] = dict(self.levels)
        if self.unit is not None:
            d["unit"] = self.unit
        return d


@dataclass(frozen=True)
class Schema:
    """Ordered column declarations with exactly one outcome column."""

    columns: tuple[Column, ...]
    positive_label: int = 1
    name: str = ""

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ConfigError("schema column names must be unique")
        n_outcome = sum(c.kind == "outcome" for c in self.columns)
        if n_outcome != 1:
            raise ConfigError(f"schema needs exactly one outcome column, found {n_outcome}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def outcome(self) -> Column:
        return next(c for c in self.columns if c.kind == "outcome")

    @property
    def features(self) -> list[Column]:
        return [c for c in self.columns if c.kind != "outcome"]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise MissingColumn(name)

    def __contains__(self, name):
        return any(c.name == name for c in self.columns)

    def to_dict(self):
        return {
            "name": self.name,
            "positive_label": self.positive_label,
            "columns": [c.to_dict() for c in self.columns],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            cols = tuple(Column(**c) for c in d["columns"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed schema: {exc}") from exc
        return cls(cols, int(d.get("positive_label", 1)), d.get("name", ""))

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_schema(source: str | Path) -> Schema:
    """Load a schema from a JSON file, or a bundled one via ``builtin:<name>``."""
    source = str(source)
    if source.startswith("builtin:"):
        ref = resources.files("hybridrisk") / "data" / "schemas" / f"{source[8:]}.json"
        if not ref.is_file():
            raise ConfigError(f"no bundled schema named {source[8:]!r}")
        text = ref.read_text(encoding="utf-8")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read schema {source}: {exc}") from exc
    return Schema.from_dict(json.loads(text))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Raw cohort cells, column-major.

    Numeric columns hold float64 with NaN for missing cells, categorical
    columns hold stripped string tokens (``None`` when missing) and the
    outcome column holds int64 codes in {0, 1}. ``row_ids`` are positions in
    the originating file so splits can be exported and replayed.
    """

    schema: Schema
    columns: Mapping[str, np.ndarray]
    provenance: str = "primary"
    partition: str = "full"
    row_ids: np.ndarray | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        if self.partition not in PARTITIONS:
            raise ValueError(f"partition must be one of {PARTITIONS}")
        missing = [n for n in self.schema.names if n not in self.columns]
        if missing:
            raise MissingColumn(missing[0])
        lengths = {len(self.columns[n]) for n in self.schema.names}
        if len(lengths) != 1:
            raise DataError("columns have unequal lengths")
        n = lengths.pop()
        if n == 0:
            raise EmptyFile("dataset has no rows")
        y = np.asarray(self.columns[self.schema.outcome.name])
        if not np.isin(y, (0, 1)).all():
            bad = int(np.flatnonzero(~np.isin(y, (0, 1)))[0])
            raise OutcomeNotBinary(bad, y[bad])
        cols = {}
        for c in self.schema.columns:
            a = self.columns[c.name]
            if c.kind == "outcome":
                a = np.asarray(a, dtype=np.int64)
            elif c.numeric:
                a = np.asarray(a, dtype=np.float64)
            else:
                a = np.asarray(a, dtype=object)
            cols[c.name] = _freeze(a)
        object.__setattr__(self, "columns", MappingProxyType(cols))
        ids = np.arange(n) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        object.__setattr__(self, "row_ids", _freeze(ids))

    def __len__(self):
        return len(self.row_ids)

    @property
    def labels(self) -> np.ndarray:
        return self.columns[self.schema.outcome.name]

    def take(self, idx, partition=None) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            self.schema,
            {k: v[idx] for k, v in self.columns.items()},
            self.provenance,
            partition or self.partition,
            self.row_ids[idx],
        )

    def with_tags(self, provenance=None, partition=None) -> "Dataset":
        return replace(
            self,
            provenance=provenance or self.provenance,
            partition=partition or self.partition,
        )

    def fingerprint(self) -> str:
        h = hashlib.sha256(self.schema.fingerprint().encode())
        for name in self.schema.names:
            a = self.columns[name]
            if a.dtype == object:
                h.update("\x1f".join("\x00" if v is None else v for v in a).encode())
            else:
                h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def _parse_number(token: str) -> float:
    if token in MISSING_TOKENS:
        return math.nan
    try:
        return float(token)
    except ValueError:
        return math.nan


def load_csv(path, schema: Schema, provenance: str = "primary") -> Dataset:
    """Read a comma-separated file with a header row into a :class:`Dataset`.

    Header names are matched to the schema case-insensitively after
    trimming; surplus columns are ignored. Unparseable numeric cells become
    missing. Zeros are kept as zeros here.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        lookup = {h.strip().lower(): i for i, h in enumerate(header)}
        positions = {}
        for c in schema.columns:
            key = c.name.strip().lower()
            if key not in lookup:
                raise MissingColumn(c.name)
            positions[c.name] = lookup[key]
        raw = {c.name: [] for c in schema.columns}
        outcome = schema.outcome.name
        for lineno, row in enumerate(reader):
            if not row or all(not cell.strip() for cell in row):
                continue
            for c in schema.columns:
                j = positions[c.name]
                token = row[j].strip() if j < len(row) else ""
                if c.kind == "outcome":
                    v = _parse_number(token)
                    if v not in (0.0, 1.0):
                        raise OutcomeNotBinary(lineno, token)
                    raw[c.name].append(int(v))
                elif c.numeric:
                    raw[c.name].append(_parse_number(token))
                else:
                    raw[c.name].append(None if token in MISSING_TOKENS else token)
    if not raw[outcome]:
        raise EmptyFile(f"{path} has a header but no data rows")
    cols = {}
    for c in schema.columns:
        if c.kind == "categorical":
            a = np.empty(len(raw[c.name]), dtype=object)
            a[:] = raw[c.name]
            cols[c.name] = a
        else:
            cols[c.name] = np.array(raw[c.name])
    return Dataset(schema, cols, provenance)


def _format_cell(value, column: Column) -> str:
    if column.kind == "outcome":
        return str(int(value))
    if column.numeric:
        if math.isnan(value):
            return ""
        if value.is_integer() and abs(value) < 2**53:
            return str(int(value))
        return repr(float(value))
    return "" if value is None else str(value)


def save_csv(ds: Dataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ds.schema.names)
        cols = [(ds.columns[c.name], c) for c in ds.schema.columns]
        for i in range(len(ds)):
            w.writerow([_format_cell(a[i], c) for a, c in cols])


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    fraction: float
    train_indices: np.ndarray = field(repr=False, default=None)
    test_indices: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {
            "seed": self.seed,
            "fraction": self.fraction,
            "train_indices": [int(i) for i in self.train_indices],
            "test_indices": [int(i) for i in self.test_indices],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def _allocate(counts: Sequence[int], fraction: float) -> list[int]:
    """Largest-remainder allocation of ``round(fraction * N)`` rows over strata."""
    total = int(math.floor(fraction * sum(counts) + 0.5))
    exact = [fraction * c for c in counts]
    alloc = [int(math.floor(e)) for e in exact]
    order = sorted(range(len(counts)), key=lambda k: (-(exact[k] - alloc[k]), k))
    for k in order[: max(0, total - sum(alloc))]:
        alloc[k] += 1
    return [min(a, c) for a, c in zip(alloc, counts)]


def split_train_test(ds: Dataset, fraction: float = 0.7, seed: int = 0,
                     stratified: bool = True) -> SplitPair:
    """Seeded train/test partition; original row order is kept in both parts."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"train fraction must lie in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    n = len(ds)
    if stratified:
        y = ds.labels
        strata = [np.flatnonzero(y == k) for k in (0, 1)]
        if any(len(s) == 0 for s in strata):
            raise ClassAbsent("stratified split needs both outcome classes")
        alloc = _allocate([len(s) for s in strata], fraction)
        train = np.concatenate([rng.permutation(s)[:a] for s, a in zip(strata, alloc)])
    else:
        (k,) = _allocate([n], fraction)
        train = rng.permutation(n)[:k]
    train = np.sort(train)
    mask = np.ones(n, dtype=bool)
    mask[train] = False
    test = np.flatnonzero(mask)
    return SplitPair(
        ds.take(train, partition="train"),
        ds.take(test, partition="test"),
        seed,
        fraction,
        ds.row_ids[train],
        ds.row_ids[test],
    )


def split_from_indices(ds: Dataset, record: Mapping) -> SplitPair:
    """Replay an exported split record against the same source file."""
    pos = {int(r): i for i, r in enumerate(ds.row_ids)}
    try:
        tr = np.array([pos[int(i)] for i in record["train_indices"]], dtype=np.int64)
        te = np.array([pos[int(i)] for i in record["test_indices"]], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"split record does not match dataset: {exc}") from exc
    return SplitPair(ds.take(tr, partition="train"), ds.take(te, partition="test"),
                     int(record["seed"]), float(record["fraction"]),
                     ds.row_ids[tr], ds.row_ids[te])


def class_distribution(ds: Dataset) -> tuple[int, int, float]:
    y = ds.labels
    pos = int(np.sum(y == 1))
    neg = len(y) - pos
    return neg, pos, pos / len(y)
