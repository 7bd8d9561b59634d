"""Tabular condition/decision data: CSV loading, min-max scaling, seeded splits.

All containers are immutable after construction (arrays are locked) and every
operation is a pure function, so datasets can be shared freely across tasks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: Canonical hydrocyclone schema, decision column last.
CANONICAL_COLUMNS = (
    "pressure_psi",
    "solids_pct",
    "size_um",
    "stream_flag",
    "cum_passing_pct",
)


def _locked(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)  # private copy, caller's array untouched
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Record:
    """One observation: condition attributes plus the decision value."""

    inputs: np.ndarray
    decision: float


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of records stored column-wise.

    X has shape (n_records, n_inputs), y has shape (n_records,).
    column_names lists the input labels followed by the decision label.
    """

    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError(
                f"record count mismatch: {X.shape[0]} input rows vs {y.shape[0]} decisions"
            )
        names = tuple(self.column_names)
        if not names:
            names = tuple(f"x{j + 1}" for j in range(X.shape[1])) + ("y",)
        if len(names) != X.shape[1] + 1:
            raise ValueError(
                f"expected {X.shape[1] + 1} column names, got {len(names)}"
            )
        object.__setattr__(self, "X", _locked(X))
        object.__setattr__(self, "y", _locked(y))
        object.__setattr__(self, "column_names", names)

    @property
    def n_records(self) -> int:
        return self.X.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.X.shape[1]

    @property
    def records(self) -> list[Record]:
        return [Record(self.X[i], float(self.y[i])) for i in range(self.n_records)]

    def take(self, n: int) -> "Dataset":
        """First n records, order preserved."""
        if not 0 <= n <= self.n_records:
            raise ValueError(f"cannot take {n} of {self.n_records} records")
        return Dataset(self.X[:n], self.y[:n], self.column_names)


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-column (min, max) ranges fitted on one dataset.

    Columns with max == min are flagged constant and map to 0.0; all other
    columns min-max scale to [0, 1] (values outside the fitted range are
    allowed and land outside [0, 1]).
    """

    input_min: np.ndarray
    input_max: np.ndarray
    decision_min: float
    decision_max: float
    column_names: tuple[str, ...] = ()

    def __post_init__(self):
        lo = np.asarray(self.input_min, dtype=np.float64).ravel()
        hi = np.asarray(self.input_max, dtype=np.float64).ravel()
        if lo.shape != hi.shape:
            raise ValueError("input_min/input_max length mismatch")
        if np.any(hi < lo) or self.decision_max < self.decision_min:
            raise ValueError("column max must be >= min")
        names = tuple(self.column_names)
        if not names:
            names = tuple(f"x{j + 1}" for j in range(lo.size)) + ("y",)
        if len(names) != lo.size + 1:
            raise ValueError(f"expected {lo.size + 1} column names, got {len(names)}")
        object.__setattr__(self, "input_min", _locked(lo))
        object.__setattr__(self, "input_max", _locked(hi))
        object.__setattr__(self, "decision_min", float(self.decision_min))
        object.__setattr__(self, "decision_max", float(self.decision_max))
        object.__setattr__(self, "column_names", names)

    @property
    def n_inputs(self) -> int:
        return self.input_min.size

    @property
    def input_constant(self) -> np.ndarray:
        return self.input_max == self.input_min

    @property
    def decision_constant(self) -> bool:
        return self.decision_max == self.decision_min

    def normalize_inputs(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} inputs, got {X.shape[1]}")
        span = self.input_max - self.input_min
        out = np.zeros_like(X)
        live = ~self.input_constant
        out[:, live] = (X[:, live] - self.input_min[live]) / span[live]
        return out

    def denormalize_inputs(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} inputs, got {X.shape[1]}")
        span = self.input_max - self.input_min
        out = np.tile(self.input_min, (X.shape[0], 1))
        live = ~self.input_constant
        out[:, live] = self.input_min[live] + X[:, live] * span[live]
        return out

    def normalize_decision(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if self.decision_constant:
            return np.zeros_like(y)
        return (y - self.decision_min) / (self.decision_max - self.decision_min)

    def denormalize_decision(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if self.decision_constant:
            return np.full_like(y, self.decision_min)
        return self.decision_min + y * (self.decision_max - self.decision_min)

    def to_lines(self) -> list[str]:
        for name in self.column_names:
            if any(ch.isspace() for ch in name):
                raise ValueError(f"column name {name!r} contains whitespace")
        lines = []
        for j in range(self.n_inputs):
            lines.append(
                f"column {j} name {self.column_names[j]} "
                f"min {self.input_min[j]:.17g} max {self.input_max[j]:.17g}"
            )
        lines.append(
            f"decision name {self.column_names[-1]} "
            f"min {self.decision_min:.17g} max {self.decision_max:.17g}"
        )
        return lines

    @classmethod
    def from_lines(cls, lines: list[str]) -> "NormalizationSpec":
        mins, maxs, names = [], [], []
        dec = None
        for line in lines:
            tok = line.split()
            if tok[:1] == ["column"]:
                names.append(tok[3])
                mins.append(float(tok[5]))
                maxs.append(float(tok[7]))
            elif tok[:1] == ["decision"]:
                dec = (tok[2], float(tok[4]), float(tok[6]))
        if dec is None:
            raise ValueError("normalization block has no decision line")
        return cls(np.array(mins), np.array(maxs), dec[1], dec[2],
                   tuple(names) + (dec[0],))


def load_csv(path) -> Dataset:
    """Read a comma-separated file with a header row; the last column is the decision.

    Raises FileNotFoundError for a missing file and ValueError for structural
    problems (fewer than 2 columns, ragged rows, non-numeric cells); messages
    name the offending 1-based data row and column.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty (no header row)") from None
        if len(header) < 2:
            raise ValueError(f"{path}: fewer than 2 columns")
        width = len(header)
        rows = []
        for i, row in enumerate(reader, start=1):
            if len(row) != width:
                raise ValueError(
                    f"{path}: ragged row {i} has {len(row)} cells, expected {width}"
                )
            vals = []
            for j, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {cell!r} at row {i}, "
                        f"column {header[j]!r}"
                    ) from None
            rows.append(vals)
    data = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    return Dataset(data[:, :-1], data[:, -1], tuple(h.strip() for h in header))


def save_csv(ds: Dataset, path) -> None:
    """Write a dataset in the canonical CSV layout (decision last, '.' decimals)."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.column_names)
        for i in range(ds.n_records):
            writer.writerow([repr(float(v)) for v in ds.X[i]] + [repr(float(ds.y[i]))])


def normalize(ds: Dataset) -> tuple[Dataset, NormalizationSpec]:
    """Min-max scale every column of ds to [0, 1], fitting ranges on ds itself."""
    if ds.n_records == 0:
        raise ValueError("cannot normalize an empty dataset")
    spec = NormalizationSpec(
        ds.X.min(axis=0),
        ds.X.max(axis=0),
        float(ds.y.min()),
        float(ds.y.max()),
        ds.column_names,
    )
    return apply_normalization(ds, spec), spec


def apply_normalization(ds: Dataset, spec: NormalizationSpec) -> Dataset:
    return Dataset(
        spec.normalize_inputs(ds.X), spec.normalize_decision(ds.y), ds.column_names
    )


def denormalize(ds: Dataset, spec: NormalizationSpec) -> Dataset:
    return Dataset(
        spec.denormalize_inputs(ds.X), spec.denormalize_decision(ds.y), ds.column_names
    )


def split(ds: Dataset, n_train: int, n_test: int, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle; first n_train records to train, next n_test to test."""
    if n_train < 0 or n_test < 0:
        raise ValueError("split sizes must be non-negative")
    if n_train + n_test > ds.n_records:
        raise ValueError(
            f"requested {n_train}+{n_test} records but dataset has {ds.n_records}"
        )
    perm = np.random.default_rng(seed).permutation(ds.n_records)
    tr, te = perm[:n_train], perm[n_train:n_train + n_test]
    return (
        Dataset(ds.X[tr], ds.y[tr], ds.column_names),
        Dataset(ds.X[te], ds.y[te], ds.column_names),
    )


def validate_cyclone_schema(ds: Dataset) -> None:
    """Check the hydrocyclone record invariants on raw (un-normalized) data."""
    if ds.n_inputs != 4:
        raise ValueError(f"expected 4 condition attributes, got {ds.n_inputs}")
    flags = ds.X[:, 3]
    if not np.all((flags == 0.0) | (flags == 1.0)):
        raise ValueError("stream flag column contains values other than 0.0/1.0")
    if np.any(ds.y < 0.0) or np.any(ds.y > 100.0):
        raise ValueError("decision column outside [0, 100]")
