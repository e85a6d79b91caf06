"""Fit-on-train preprocessing frozen into a serializable record.

The pipeline is estimated once on the primary training split and then applied
verbatim to the held-out split and to external cohorts. Applying it never
refits anything.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import (
    ConfigError,
    ConstantOutcome,
    CorruptFile,
    DataError,
    EmptyTrain,
    LeakageError,
    MissingColumn,
    SchemaDrift,
    UnitMismatch,
    UnmappableColumn,
    UnseenCategory,
    VersionMismatch,
)
from .tabular import Dataset, Schema

PIPELINE_VERSION = "hybridrisk-pipeline/1"

# external columns whose zeros are physiologically implausible
IMPLAUSIBLE_ZERO_COLUMNS = frozenset(
    {"Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI"}
)


def _ro(d) -> MappingProxyType:
    return MappingProxyType(dict(d))


@dataclass(frozen=True)
class FeatureMapping:
    """External column name -> model input column name, plus fill policy."""

    columns: Mapping[str, str]
    fill_policy: str = "training_median"
    zeros_as_missing: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "columns", _ro(self.columns))
        object.__setattr__(self, "zeros_as_missing", tuple(sorted(self.zeros_as_missing)))
        if self.fill_policy != "training_median":
            raise ConfigError(f"unsupported fill policy {self.fill_policy!r}")
        targets = list(self.columns.values())
        if len(set(targets)) != len(targets):
            raise ConfigError("feature mapping sends two external columns to one input")
        extra = set(self.zeros_as_missing) - IMPLAUSIBLE_ZERO_COLUMNS
        if extra:
            raise ConfigError(f"zeros-as-missing not allowed for {sorted(extra)}")

    def to_dict(self):
        return {
            "mapping": dict(self.columns),
            "fill_policy": self.fill_policy,
            "zeros_as_missing": list(self.zeros_as_missing),
        }

    @classmethod
    def from_dict(cls, d):
        if "mapping" not in d:
            raise ConfigError("mapping file needs a 'mapping' object")
        return cls(d["mapping"], d.get("fill_policy", "training_median"),
                   tuple(d.get("zeros_as_missing", ())))


def load_mapping(source) -> FeatureMapping:
    from importlib import resources

    source = str(source)
    if source.startswith("builtin:"):
        ref = resources.files("hybridrisk") / "data" / "mappings" / f"{source[8:]}.json"
        if not ref.is_file():
            raise ConfigError(f"no bundled mapping named {source[8:]!r}")
        text = ref.read_text(encoding="utf-8")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read mapping {source}: {exc}") from exc
    try:
        return FeatureMapping.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"mapping {source} is not valid JSON: {exc}") from exc


@dataclass(frozen=True)
class PreprocessConfig:
    mapping: FeatureMapping | None = None


@dataclass(frozen=True)
class FrozenPipeline:
    schema: Schema
    encoder: Mapping[str, Mapping[str, int]]
    medians: Mapping[str, float]
    modes: Mapping[str, float]
    scaler: Mapping[str, tuple[float, float]]
    mapping: FeatureMapping | None = None
    calibration: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    version: str = PIPELINE_VERSION

    def __post_init__(self):
        object.__setattr__(self, "encoder", _ro({k: _ro(v) for k, v in self.encoder.items()}))
        object.__setattr__(self, "medians", _ro(self.medians))
        object.__setattr__(self, "modes", _ro(self.modes))
        object.__setattr__(self, "scaler", _ro({k: tuple(v) for k, v in self.scaler.items()}))
        object.__setattr__(self, "calibration",
                           _ro({k: _ro(v) for k, v in self.calibration.items()}))

    @property
    def features(self) -> list[str]:
        return [c.name for c in self.schema.features]

    @property
    def fingerprint(self) -> str:
        return self.schema.fingerprint()

    def fill_value(self, name: str) -> float:
        """Encoded neutral value for a column: training median or mode."""
        if name in self.medians:
            return self.medians[name]
        return self.modes[name]

    def with_calibration(self, name: str, params: Mapping[str, float]) -> "FrozenPipeline":
        cal = {k: dict(v) for k, v in self.calibration.items()}
        cal[name] = dict(params)
        return replace(self, calibration=cal)

    def to_dict(self):
        return {
            "version": self.version,
            "fingerprint": self.fingerprint,
            "schema": self.schema.to_dict(),
            "encoder": {k: dict(v) for k, v in self.encoder.items()},
            "imputer": {"medians": dict(self.medians), "modes": dict(self.modes),
                        "zeros_as_missing": list(self.mapping.zeros_as_missing)
                        if self.mapping else []},
            "scaler": {k: list(v) for k, v in self.scaler.items()},
            "mapping": self.mapping.to_dict() if self.mapping else None,
            "calibration": {k: dict(v) for k, v in self.calibration.items()},
        }

    @classmethod
    def from_dict(cls, d) -> "FrozenPipeline":
        if d.get("version") != PIPELINE_VERSION:
            raise VersionMismatch(
                f"pipeline version {d.get('version')!r} != {PIPELINE_VERSION!r}")
        try:
            schema = Schema.from_dict(d["schema"])
            p = cls(
                schema,
                d["encoder"],
                d["imputer"]["medians"],
                d["imputer"]["modes"],
                d["scaler"],
                FeatureMapping.from_dict(d["mapping"]) if d["mapping"] else None,
                d["calibration"],
            )
        except (KeyError, TypeError, ConfigError) as exc:
            raise CorruptFile(f"malformed pipeline record: {exc}") from exc
        if p.fingerprint != d.get("fingerprint"):
            raise CorruptFile("schema fingerprint does not match the stored schema")
        return p


@dataclass(frozen=True)
class Features:
    """Model-ready matrix with the tags used by the leakage guards."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    provenance: str
    partition: str
    meta: Mapping = field(default_factory=dict)

    def __len__(self):
        return len(self.y)


def _encode(ds: Dataset, encoder) -> dict[str, np.ndarray]:
    out = {}
    for c in ds.schema.features:
        a = ds.columns[c.name]
        if c.name in encoder:
            levels = encoder[c.name]
            codes = np.empty(len(a))
            for i, tok in enumerate(a):
                if tok is None:
                    codes[i] = math.nan
                    continue
                key = str(tok).strip().lower()
                if key not in levels:
                    raise UnseenCategory(c.name, tok)
                codes[i] = levels[key]
            out[c.name] = codes
        else:
            out[c.name] = np.asarray(a, dtype=float)
    return out


def _mode(a: np.ndarray) -> float:
    vals, counts = np.unique(a[~np.isnan(a)], return_counts=True)
    return float(vals[np.argmax(counts)])


def fit_pipeline(train: Dataset, config: PreprocessConfig | None = None) -> FrozenPipeline:
    """Estimate encoder, imputer and scaler parameters from the training split."""
    config = config or PreprocessConfig()
    if train.partition != "train" or train.provenance != "primary":
        raise LeakageError(
            f"fit_pipeline needs the primary training split, got "
            f"{train.provenance}/{train.partition}")
    if len(train) == 0:
        raise EmptyTrain("training split is empty")
    if config.mapping is not None:
        for target in config.mapping.columns.values():
            if target not in train.schema or train.schema.column(target).kind == "outcome":
                raise MissingColumn(target)
    if len(np.unique(train.labels)) < 2 and len(train) > 1:
        raise ConstantOutcome("training outcome has a single class")

    encoder = {c.name: dict(c.levels) for c in train.schema.features if c.kind == "categorical"}
    enc = _encode(train, encoder)
    medians, modes, scaler = {}, {}, {}
    for c in train.schema.features:
        a = enc[c.name]
        if np.isnan(a).all():
            raise DataError(f"column {c.name!r} has no observed training values")
        if c.kind in ("continuous", "count"):
            medians[c.name] = float(np.nanmedian(a))
        else:
            modes[c.name] = _mode(a)
        filled = np.where(np.isnan(a), medians.get(c.name, modes.get(c.name)), a)
        scaler[c.name] = (float(filled.min()), float(filled.max()))
    return FrozenPipeline(train.schema, encoder, medians, modes, scaler, config.mapping)


def harmonize(ds: Dataset, mapping: FeatureMapping, p: FrozenPipeline) -> tuple[Dataset, dict]:
    """Rename an external cohort into the model input schema.

    Implausible zeros in the configured columns become missing; model inputs
    with no external source are filled with training medians (continuous) or
    modes (binary and categorical). Returns the harmonized dataset and a
    metadata dict listing dropped and filled columns.
    """
    model = p.schema
    for ext, target in mapping.columns.items():
        if ext not in ds.schema:
            raise UnmappableColumn(f"external column {ext!r} not in cohort schema")
        if target not in model or model.column(target).kind == "outcome":
            raise UnmappableColumn(f"model column {target!r} not in model schema")
        src, dst = ds.schema.column(ext), model.column(target)
        if src.unit and dst.unit and src.unit != dst.unit:
            raise UnitMismatch(f"{ext} [{src.unit}] -> {target} [{dst.unit}]")
        if dst.kind == "categorical" and src.kind != "categorical":
            raise UnmappableColumn(f"cannot map numeric {ext!r} onto categorical {target!r}")
    for z in mapping.zeros_as_missing:
        if z not in ds.schema:
            raise UnmappableColumn(f"zeros-as-missing column {z!r} not in cohort schema")

    inverse = {v: k for k, v in mapping.columns.items()}
    n = len(ds)
    cols: dict[str, np.ndarray] = {}
    filled = []
    for c in model.features:
        if c.name in inverse:
            ext = inverse[c.name]
            a = ds.columns[ext]
            if c.kind == "categorical":
                cols[c.name] = np.array(a, dtype=object)
            else:
                a = np.array(a, dtype=float)
                if ext in mapping.zeros_as_missing:
                    a[a == 0] = math.nan
                cols[c.name] = a
        else:
            filled.append(c.name)
            if c.kind == "categorical":
                code = p.modes[c.name]
                token = next(t for t, k in p.encoder[c.name].items() if k == code)
                a = np.empty(n, dtype=object)
                a[:] = token
                cols[c.name] = a
            else:
                cols[c.name] = np.full(n, p.fill_value(c.name))
    cols[model.outcome.name] = ds.labels
    used = set(mapping.columns) | {ds.schema.outcome.name}
    meta = {
        "dropped_columns": [c for c in ds.schema.names if c not in used],
        "filled_columns": filled,
    }
    out = Dataset(model, cols, ds.provenance, ds.partition, ds.row_ids)
    return out, meta


def impute(X: np.ndarray, fill: np.ndarray) -> np.ndarray:
    return np.where(np.isnan(X), fill, X)


def scale(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (X - lo) / safe, 0.0)


def apply_pipeline(p: FrozenPipeline, ds: Dataset,
                   mapping: FeatureMapping | None = None) -> Features:
    """Transform a cohort with frozen parameters; nothing is refit.

    A cohort whose schema differs from the model schema is harmonized through
    ``mapping`` (or the mapping frozen in ``p``). Scaled values outside
    [0, 1] are passed through unclipped and their fraction is reported in
    ``meta["out_of_range_fraction"]``.
    """
    meta: dict = {}
    if ds.schema.fingerprint() != p.fingerprint:
        mapping = mapping or p.mapping
        if mapping is None:
            raise SchemaDrift("cohort schema differs from the model schema and no mapping is set")
        ds, meta = harmonize(ds, mapping, p)
    enc = _encode(ds, p.encoder)
    names = p.features
    X = np.column_stack([enc[n] for n in names]).astype(float)
    missing = np.isnan(X)
    fill = np.array([p.fill_value(n) for n in names])
    X = impute(X, fill)
    lo = np.array([p.scaler[n][0] for n in names])
    hi = np.array([p.scaler[n][1] for n in names])
    X = scale(X, lo, hi)
    outside = (X < 0.0) | (X > 1.0)
    meta.update(
        n_imputed=int(missing.sum()),
        out_of_range_fraction=float(outside.mean()),
        out_of_range_by_column={n: float(outside[:, j].mean()) for j, n in enumerate(names)},
    )
    X.flags.writeable = False
    y = np.array(ds.labels)
    y.flags.writeable = False
    return Features(X, y, tuple(names), ds.provenance, ds.partition, MappingProxyType(meta))


def dumps_pipeline(p: FrozenPipeline) -> str:
    return json.dumps(p.to_dict(), indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_pipeline(p: FrozenPipeline, path) -> None:
    write_atomic(path, dumps_pipeline(p))


def load_pipeline(path) -> FrozenPipeline:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read pipeline {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"pipeline {path} is not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise CorruptFile(f"pipeline {path} is not a JSON object")
    return FrozenPipeline.from_dict(d)
