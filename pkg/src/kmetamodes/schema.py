"""Schema inference and discretization of mixed CSV data into categorical ids.

Raw tables are held as pandas DataFrames whose columns are ``Categorical``
columns of strings, with missing cells stored as NaN. Working on the category
index keeps parsing and dictionary lookups proportional to the number of
distinct values rather than the number of rows.
"""
from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, RowError, SchemaError

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass(frozen=True)
class DiscretizeConfig:
    bins: int = 10
    label_column: str | None = None
    missing_token: str = ""
    inference_rows: int = 1000
    ignore_columns: tuple[str, ...] = ()

    def __post_init__(self):
        if self.bins < 2:
            raise ConfigError(f"bins must be >= 2, got {self.bins}")
        if self.inference_rows < 1:
            raise ConfigError("inference_rows must be >= 1")
        object.__setattr__(self, "ignore_columns", tuple(self.ignore_columns))

    @classmethod
    def from_dict(cls, d):
        known = {"bins", "label_column", "missing_token", "inference_rows", "ignore_columns"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown discretize keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class AttributeSpec:
    """One clustering attribute.

    ``categories`` maps category strings to dense ids. The last entry is
    always the missing-value token; ``unseen_id`` (one past the dictionary)
    is reserved for values first met after fitting.
    """

    name: str
    kind: str
    categories: dict[str, int]
    bin_edges: tuple[float, ...] = ()

    @property
    def missing_id(self) -> int:
        return len(self.categories) - 1

    @property
    def unseen_id(self) -> int:
        return len(self.categories)

    @property
    def cardinality(self) -> int:
        """Number of ids this attribute can emit, reserved ids included."""
        return len(self.categories) + 1

    def to_dict(self):
        return {
            "name": self.name,
            "kind": self.kind,
            "categories": list(self.categories),
            "bin_edges": list(self.bin_edges),
        }

    @classmethod
    def from_dict(cls, d):
        cats = {c: i for i, c in enumerate(d["categories"])}
        return cls(d["name"], d["kind"], cats, tuple(float(e) for e in d["bin_edges"]))


@dataclass(frozen=True)
class Schema:
    columns: tuple[str, ...]
    attributes: tuple[AttributeSpec, ...]
    label_column: str | None = None
    missing_token: str = ""
    ignore_columns: tuple[str, ...] = field(default=())

    @property
    def m(self) -> int:
        return len(self.attributes)

    @property
    def cardinalities(self) -> list[int]:
        return [a.cardinality for a in self.attributes]

    @property
    def attribute_positions(self) -> list[int]:
        pos = {c: i for i, c in enumerate(self.columns)}
        return [pos[a.name] for a in self.attributes]

    def to_dict(self):
        return {
            "columns": list(self.columns),
            "label_column": self.label_column,
            "missing_token": self.missing_token,
            "ignore_columns": list(self.ignore_columns),
            "attributes": [a.to_dict() for a in self.attributes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                columns=tuple(d["columns"]),
                attributes=tuple(AttributeSpec.from_dict(a) for a in d["attributes"]),
                label_column=d.get("label_column"),
                missing_token=d.get("missing_token", ""),
                ignore_columns=tuple(d.get("ignore_columns", ())),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "Schema":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema is not valid JSON: {exc}") from exc

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "Schema":
        with open(path) as fh:
            return cls.from_json(fh.read())


def raw_frame(header: Sequence[str], rows, missing_token: str = "") -> pd.DataFrame:
    """Build a raw table (string ``Categorical`` columns, NaN for missing)."""
    header = list(header)
    if not header:
        raise SchemaError("empty header")
    if len(set(header)) != len(header):
        dupes = sorted({c for c in header if header.count(c) > 1})
        raise SchemaError(f"duplicate column names: {dupes}")
    frame = pd.DataFrame(list(rows), columns=header, dtype=object)
    out = {}
    for name in header:
        col = frame[name]
        missing = col.isna() | (col == missing_token)
        cat = pd.Categorical(col.map(str).where(~missing))
        if len(cat.categories) == 0:
            cat = cat.set_categories(pd.Index([], dtype=object))
        out[name] = cat
    return pd.DataFrame(out, columns=header)


def _parse_numeric(strings) -> np.ndarray:
    """Float value per string, NaN where the string is not a number."""
    if len(strings) == 0:
        return np.empty(0)
    return pd.to_numeric(pd.Series(np.asarray(strings, dtype=object)), errors="coerce").to_numpy(float)


def fit_bins(values, bins: int) -> list[float]:
    """Equal-frequency bin edges at the empirical quantiles i/bins.

    Duplicate quantiles collapse, and edges at or above the maximum are dropped
    because they would only bound an empty top bin.
    """
    if bins < 2:
        raise ConfigError(f"bins must be >= 2, got {bins}")
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise SchemaError("cannot fit bins on an empty column")
    qs = np.quantile(values, np.arange(1, bins) / bins)
    top = values.max()
    return [float(e) for e in np.unique(qs) if e < top]


def _bin_labels(edges):
    bounds = [-math.inf, *edges, math.inf]
    labels = [f"({lo!r}, {hi!r}]" for lo, hi in zip(bounds[:-2], bounds[1:-1])]
    labels.append(f"({bounds[-2]!r}, inf)")
    return labels


def _infer_attribute(name, col: pd.Categorical, config: DiscretizeConfig) -> AttributeSpec:
    cats = np.asarray(col.categories, dtype=object)
    codes = np.asarray(col.codes)
    parsed = _parse_numeric(cats)
    prefix = np.unique(codes[: config.inference_rows])
    prefix = prefix[prefix >= 0]
    numeric = prefix.size > 0 and not np.isnan(parsed[prefix]).any()
    if numeric:
        present = codes[codes >= 0]
        values = parsed[present]
        edges = fit_bins(values[~np.isnan(values)], config.bins)
        labels = _bin_labels(edges)
        categories = {lab: i for i, lab in enumerate(labels)}
        categories[config.missing_token] = len(categories)
        return AttributeSpec(name, NUMERIC, categories, tuple(edges))
    observed = {str(c) for c in cats[np.unique(codes[codes >= 0])]} - {config.missing_token}
    categories = {c: i for i, c in enumerate(sorted(observed))}
    categories[config.missing_token] = len(categories)
    return AttributeSpec(name, CATEGORICAL, categories)


def infer_schema_frame(frame: pd.DataFrame, config: DiscretizeConfig) -> Schema:
    """Infer a schema from a raw table (see :func:`raw_frame`).

    Numeric classification looks at the first ``config.inference_rows`` rows;
    dictionaries and bin edges are fitted on every row passed in.
    """
    columns = [str(c) for c in frame.columns]
    if not columns:
        raise SchemaError("empty header")
    if len(frame) == 0:
        raise SchemaError("no rows to infer a schema from")
    if len(set(columns)) != len(columns):
        raise SchemaError("duplicate column names")
    if config.label_column is not None and config.label_column not in columns:
        raise SchemaError(f"label column {config.label_column!r} not in header")
    skip = set(config.ignore_columns)
    if config.label_column is not None:
        skip.add(config.label_column)
    attributes = []
    for name in columns:
        if name in skip:
            continue
        col = frame[name]
        if not isinstance(col.dtype, pd.CategoricalDtype):
            col = pd.Categorical(col.map(lambda v: v if pd.isna(v) else str(v)))
        else:
            col = col.array
        attributes.append(_infer_attribute(name, col, config))
    if not attributes:
        raise SchemaError("no clustering attributes left after excluding label/ignored columns")
    return Schema(
        columns=tuple(columns),
        attributes=tuple(attributes),
        label_column=config.label_column,
        missing_token=config.missing_token,
        ignore_columns=tuple(config.ignore_columns),
    )


def infer_schema(header: Sequence[str], sample_rows, config: DiscretizeConfig | None = None) -> Schema:
    config = config or DiscretizeConfig()
    header = list(header)
    if not header:
        raise SchemaError("empty header")
    rows = list(sample_rows)
    if not rows:
        raise SchemaError("no sample rows")
    rows = [r for r in rows if len(r) == len(header)]
    if not rows:
        raise SchemaError("no sample row matches the header width")
    return infer_schema_frame(raw_frame(header, rows, config.missing_token), config)


def discretize_value(value, spec: AttributeSpec, missing_token: str = "") -> int:
    if value is None or (isinstance(value, float) and math.isnan(value)) or value == missing_token:
        return spec.missing_id
    if spec.kind == NUMERIC:
        try:
            x = float(value)
        except (TypeError, ValueError):
            return spec.unseen_id
        if math.isnan(x):
            return spec.unseen_id
        return bisect_left(spec.bin_edges, x)
    return spec.categories.get(str(value), spec.unseen_id)


def discretize_row(raw: Sequence, schema: Schema) -> np.ndarray:
    """Map one raw row (all columns, header order) to a record of category ids."""
    if len(raw) != len(schema.columns):
        raise RowError(f"row has {len(raw)} fields, schema expects {len(schema.columns)}")
    return np.array(
        [
            discretize_value(raw[p], spec, schema.missing_token)
            for p, spec in zip(schema.attribute_positions, schema.attributes)
        ],
        dtype=np.int32,
    )


def discretize_rows(rows, schema: Schema) -> tuple[np.ndarray, int]:
    """Discretize an iterable of raw rows; malformed rows are skipped and counted."""
    out, skipped = [], 0
    for raw in rows:
        try:
            out.append(discretize_row(raw, schema))
        except RowError:
            skipped += 1
    if not out:
        return np.empty((0, schema.m), dtype=np.int32), skipped
    return np.vstack(out), skipped


def discretize_frame(frame: pd.DataFrame, schema: Schema) -> np.ndarray:
    """Vectorized :func:`discretize_row` over a raw table."""
    missing = [a.name for a in schema.attributes if a.name not in frame.columns]
    if missing:
        raise SchemaError(f"input lacks schema columns: {missing}")
    out = np.empty((len(frame), schema.m), dtype=np.int32)
    for j, spec in enumerate(schema.attributes):
        col = frame[spec.name]
        if not isinstance(col.dtype, pd.CategoricalDtype):
            col = pd.Categorical(col.map(lambda v: v if pd.isna(v) else str(v)))
        else:
            col = col.array
        cats = np.asarray(col.categories, dtype=object)
        if spec.kind == NUMERIC:
            parsed = _parse_numeric(cats)
            ids = np.searchsorted(np.asarray(spec.bin_edges, dtype=float), parsed, side="left")
            ids = np.where(np.isnan(parsed), spec.unseen_id, ids)
        else:
            ids = np.array([spec.categories.get(str(c), spec.unseen_id) for c in cats], dtype=np.int64)
        miss = spec.missing_id
        if spec.kind == CATEGORICAL and schema.missing_token in set(map(str, cats)):
            # literal missing tokens that survived raw_frame
            ids = np.where(cats == schema.missing_token, miss, ids)
        lookup = np.append(ids, miss).astype(np.int32)
        out[:, j] = lookup[np.asarray(col.codes)]
    return out
