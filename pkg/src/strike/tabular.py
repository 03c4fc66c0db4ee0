"""CSV ingestion, preprocessing (one-hot, sentinel fill, min-max scaling) and
stratified row partitioning."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import mix, round_half_up

MISSING_SENTINEL = -999.0
MISSING_LEVEL = "__missing__"
_MISSING_MARKERS = ("", "NA")
_REAL = re.compile(r"^\s*[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\s*$")


class SchemaError(ValueError):
    """Input does not match the expected column layout."""


def _is_missing(cell: str | None) -> bool:
    return cell is None or cell in _MISSING_MARKERS


@dataclass(frozen=True)
class RawTable:
    """Parsed CSV before preprocessing.

    Numeric columns are float arrays with NaN for missing cells; categorical
    columns are object arrays of str with None for missing cells.
    """

    columns: dict[str, np.ndarray]
    kinds: dict[str, str]
    label_column: str
    labels: np.ndarray | None

    @property
    def n_rows(self) -> int:
        if self.labels is not None:
            return len(self.labels)
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def feature_columns(self) -> list[str]:
        return list(self.columns)

    def take(self, rows) -> RawTable:
        rows = np.asarray(rows, dtype=np.int64)
        return RawTable(
            columns={k: v[rows] for k, v in self.columns.items()},
            kinds=dict(self.kinds),
            label_column=self.label_column,
            labels=None if self.labels is None else self.labels[rows],
        )


def _parse_label(cell: str, row: int) -> int:
    if cell in ("0", "1"):
        return int(cell)
    raise SchemaError(f"label cell {cell!r} on data row {row} is not 0 or 1")


def load_csv(path, label_column: str, require_label: bool = True,
             kinds: dict[str, str] | None = None) -> RawTable:
    """Read a header-first CSV into a :class:`RawTable`.

    A cell is missing iff it is empty or the literal ``NA``. A column is
    numeric iff every non-missing cell parses as a real number, unless
    ``kinds`` pins it (used at prediction time so that a categorical column
    whose test cells happen to look numeric keeps its fitted encoding).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} has no header row") from None
        rows = [r for r in reader if r]
    if len(set(header)) != len(header):
        raise SchemaError("duplicate column names in header")
    if label_column not in header and require_label:
        raise SchemaError(f"label column {label_column!r} not in header")
    width = len(header)
    for i, r in enumerate(rows):
        if len(r) != width:
            raise SchemaError(f"data row {i} has {len(r)} cells, header has {width}")

    labels = None
    columns: dict[str, np.ndarray] = {}
    found: dict[str, str] = {}
    for j, name in enumerate(header):
        cells = [r[j] for r in rows]
        if name == label_column:
            labels = np.array([_parse_label(c.strip(), i) for i, c in enumerate(cells)], dtype=np.int64)
            continue
        present = [c for c in cells if not _is_missing(c)]
        forced = kinds.get(name) if kinds else None
        if forced == "numeric" and not all(_REAL.match(c) for c in present):
            raise SchemaError(f"column {name!r} must be numeric")
        if forced != "categorical" and all(_REAL.match(c) for c in present):
            columns[name] = np.array([np.nan if _is_missing(c) else float(c) for c in cells], dtype=np.float64)
            found[name] = "numeric"
        else:
            columns[name] = np.array([None if _is_missing(c) else c for c in cells], dtype=object)
            found[name] = "categorical"
    return RawTable(columns=columns, kinds=found, label_column=label_column, labels=labels)


@dataclass(frozen=True)
class TabularDataset:
    feature_names: list[str]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise ValueError("feature matrix shape does not match feature names")
        if len(self.y) != self.X.shape[0]:
            raise ValueError("label vector length does not match row count")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> TabularDataset:
        rows = np.asarray(rows, dtype=np.int64)
        return TabularDataset(list(self.feature_names), np.asfortranarray(self.X[rows]), self.y[rows])

    def select(self, cols) -> TabularDataset:
        cols = list(cols)
        return TabularDataset([self.feature_names[c] for c in cols], np.asfortranarray(self.X[:, cols]), self.y)


@dataclass
class PreprocessStats:
    kinds: dict[str, str]
    levels: dict[str, list[str]]
    has_missing_level: dict[str, bool]
    feature_names: list[str]
    source_column: list[str]
    mins: np.ndarray
    maxs: np.ndarray
    sentinel: float = MISSING_SENTINEL

    def to_dict(self) -> dict:
        return {
            "kinds": self.kinds,
            "levels": self.levels,
            "has_missing_level": self.has_missing_level,
            "feature_names": self.feature_names,
            "source_column": self.source_column,
            "mins": self.mins.tolist(),
            "maxs": self.maxs.tolist(),
            "sentinel": self.sentinel,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PreprocessStats:
        return cls(
            kinds=dict(d["kinds"]),
            levels={k: list(v) for k, v in d["levels"].items()},
            has_missing_level=dict(d["has_missing_level"]),
            feature_names=list(d["feature_names"]),
            source_column=list(d["source_column"]),
            mins=np.array(d["mins"], dtype=np.float64),
            maxs=np.array(d["maxs"], dtype=np.float64),
            sentinel=float(d["sentinel"]),
        )


def _encode(raw: RawTable, kinds, levels, has_missing_level, sentinel):
    blocks, names, sources = [], [], []
    for name, kind in kinds.items():
        if name not in raw.columns:
            raise SchemaError(f"column {name!r} missing from input")
        col = raw.columns[name]
        if kind == "numeric":
            if raw.kinds[name] != "numeric":
                raise SchemaError(f"column {name!r} was numeric at fit time but holds non-numeric cells")
            blocks.append(np.where(np.isnan(col), sentinel, col))
            names.append(name)
            sources.append(name)
        else:
            if raw.kinds[name] != "categorical":
                raise SchemaError(f"column {name!r} was categorical at fit time; load it with kinds=stats.kinds")
            as_str = col
            for level in levels[name]:
                blocks.append((as_str == level).astype(np.float64))
                names.append(f"{name}={level}")
                sources.append(name)
            if has_missing_level[name]:
                blocks.append(np.array([v is None for v in as_str], dtype=np.float64))
                names.append(f"{name}={MISSING_LEVEL}")
                sources.append(name)
    X = np.column_stack(blocks) if blocks else np.empty((raw.n_rows, 0))
    return np.asfortranarray(X, dtype=np.float64), names, sources


def _scale(X, mins, maxs):
    span = maxs - mins
    out = np.zeros_like(X)
    live = span > 0
    out[:, live] = (X[:, live] - mins[live]) / span[live]
    return out


def fit_preprocess(raw: RawTable, sentinel: float = MISSING_SENTINEL) -> tuple[TabularDataset, PreprocessStats]:
    """One-hot encode, fill missing numerics with the sentinel, min-max scale.

    The sentinel participates in the observed min, so real values of a column
    that had missing cells are compressed toward the top of [0, 1].
    """
    if raw.n_rows == 0:
        raise ValueError("cannot preprocess a table with zero rows")
    if not raw.columns:
        raise ValueError("cannot preprocess a table with zero feature columns")
    if raw.labels is None:
        raise SchemaError(f"label column {raw.label_column!r} absent")
    kinds = dict(raw.kinds)
    levels: dict[str, list[str]] = {}
    has_missing: dict[str, bool] = {}
    for name, kind in kinds.items():
        if kind != "categorical":
            continue
        seen: dict[str, None] = {}
        for v in raw.columns[name]:
            if v is not None:
                seen.setdefault(v)
        levels[name] = list(seen)
        has_missing[name] = any(v is None for v in raw.columns[name])
    X, names, sources = _encode(raw, kinds, levels, has_missing, sentinel)
    mins = X.min(axis=0)
    maxs = X.max(axis=0)
    stats = PreprocessStats(kinds, levels, has_missing, names, sources, mins, maxs, sentinel)
    ds = TabularDataset(names, np.asfortranarray(_scale(X, mins, maxs)), raw.labels.copy())
    return ds, stats


def apply_preprocess(raw: RawTable, stats: PreprocessStats) -> TabularDataset:
    """Transform unseen rows with fitted stats; scaled values are clamped to [0, 1]."""
    X, names, _ = _encode(raw, stats.kinds, stats.levels, stats.has_missing_level, stats.sentinel)
    X = np.clip(_scale(X, stats.mins, stats.maxs), 0.0, 1.0)
    y = raw.labels.copy() if raw.labels is not None else np.full(raw.n_rows, -1, dtype=np.int64)
    return TabularDataset(names, np.asfortranarray(X), y)


def _check_binary(y):
    y = np.asarray(y)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return y


def stratified_split_indices(y, train_frac: float = 0.7, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    y = _check_binary(y)
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must lie strictly between 0 and 1, got {train_frac}")
    train = []
    for c in (0, 1):
        members = np.flatnonzero(y == c)
        if len(members) < 2:
            raise ValueError(f"class {c} has {len(members)} rows; at least 2 are required")
        rng = np.random.default_rng(mix(seed, "split", c))
        take = round_half_up(train_frac * len(members))
        train.append(rng.permutation(members)[:take])
    train_idx = np.sort(np.concatenate(train))
    mask = np.zeros(len(y), dtype=bool)
    mask[train_idx] = True
    return train_idx, np.flatnonzero(~mask)


def stratified_split(ds: TabularDataset, train_frac: float = 0.7, seed: int = 0) -> tuple[TabularDataset, TabularDataset]:
    train_idx, test_idx = stratified_split_indices(ds.y, train_frac, seed)
    return ds.take(train_idx), ds.take(test_idx)


@dataclass(frozen=True)
class FoldAssignment:
    folds: np.ndarray
    K: int
    seed: int = 0

    def rows(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.folds == f)

    def train_rows(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.folds != f)

    def __len__(self) -> int:
        return len(self.folds)


def stratified_kfold(y, K: int = 5, seed: int = 0, shuffle: bool = True) -> FoldAssignment:
    """Per class, shuffle the row indices and deal them round-robin onto folds."""
    if isinstance(y, TabularDataset):
        y = y.y
    y = _check_binary(y)
    if K < 2:
        raise ValueError("K must be at least 2")
    folds = np.full(len(y), -1, dtype=np.int64)
    for c in (0, 1):
        members = np.flatnonzero(y == c)
        if len(members) < K:
            raise ValueError(f"class {c} has {len(members)} rows, fewer than K={K}")
        if shuffle:
            members = np.random.default_rng(mix(seed, "kfold", c)).permutation(members)
        folds[members] = np.arange(len(members)) % K
    return FoldAssignment(folds=folds, K=K, seed=seed)
