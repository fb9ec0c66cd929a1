"""Typed categorical datasets: schemas, CSV I/O, quantile discretization.

A dataset is a dense float64 matrix plus one schema per column.  Categorical
columns (binary / ordinal / nominal) store exact integer category codes
``0..arity-1``; continuous columns store raw values.  Missing cells hold the
sentinel ``-1`` in every column.  Because the sentinel lives in-band, a
continuous column may not contain a legitimate value of exactly ``-1``; the
loader rejects such files rather than corrupt them silently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CodeOutOfRange,
    DataError,
    DegenerateColumn,
    UnknownLabel,
)

MISSING = -1

KINDS = ("binary", "ordinal", "nominal", "continuous")
ROLES = ("feature", "id", "excluded")

_CATEGORICAL_KINDS = frozenset({"binary", "ordinal", "nominal"})


@dataclass(frozen=True)
class ColumnSchema:
    """Declared type of one dataset column.

    ``labels`` gives the category strings in code order (code 0 first); for
    ordinal columns that order *is* the category order.  When omitted, labels
    default to ``"0".."arity-1"``.  ``role`` controls pipeline visibility:
    only ``feature`` columns are ever modeled; ``excluded`` columns (e.g. an
    outcome held out for a downstream task) and ``id`` columns are carried
    through untouched.
    """

    name: str
    kind: str
    arity: int | None = None
    labels: tuple[str, ...] | None = None
    role: str = "feature"

    def __post_init__(self) -> None:
        if not self.name or any(ch in self.name for ch in ":|,"):
            raise DataError(f"invalid column name {self.name!r}")
        if self.kind not in KINDS:
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise DataError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.kind == "continuous":
            if self.arity is not None or self.labels is not None:
                raise DataError(
                    f"column {self.name!r}: continuous columns take no arity/labels"
                )
            return
        arity = self.arity
        if arity is None:
            if self.kind == "binary":
                arity = 2
            elif self.labels is not None:
                arity = len(self.labels)
            else:
                raise DataError(f"column {self.name!r}: arity or labels required")
            object.__setattr__(self, "arity", arity)
        if self.kind == "binary" and arity != 2:
            raise DataError(f"column {self.name!r}: binary arity must be 2")
        if arity < 2:
            raise DataError(f"column {self.name!r}: arity must be >= 2")
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(str(k) for k in range(arity)))
        labels = self.labels
        assert labels is not None
        if len(labels) != arity:
            raise DataError(
                f"column {self.name!r}: {len(labels)} labels for arity {arity}"
            )
        if len(set(labels)) != arity:
            raise DataError(f"column {self.name!r}: duplicate labels")

    @property
    def is_categorical(self) -> bool:
        return self.kind in _CATEGORICAL_KINDS


@dataclass(frozen=True)
class CategoricalDataset:
    """Immutable (schemas, cells) pair with the invariants enforced.

    ``cells`` has one row per case and one column per schema; the stored
    array is a read-only copy of whatever was passed in.
    """

    schemas: tuple[ColumnSchema, ...]
    cells: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        schemas = tuple(self.schemas)
        object.__setattr__(self, "schemas", schemas)
        names = [s.name for s in schemas]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names")
        cells = np.array(self.cells, dtype=np.float64, copy=True)
        if cells.ndim != 2 or cells.shape[1] != len(schemas):
            raise DataError(
                f"cells shape {cells.shape} does not match {len(schemas)} columns"
            )
        for j, schema in enumerate(schemas):
            if not schema.is_categorical:
                continue
            col = cells[:, j]
            observed = col[col != MISSING]
            if observed.size and (
                np.any(observed != np.floor(observed))
                or np.any(observed < 0)
                or np.any(observed >= schema.arity)
            ):
                raise CodeOutOfRange(
                    f"column {schema.name!r}: codes must be integers in "
                    f"0..{schema.arity - 1}"
                )
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cells.shape[1]

    @property
    def feature_indices(self) -> tuple[int, ...]:
        return tuple(
            j for j, s in enumerate(self.schemas) if s.role == "feature"
        )

    @property
    def missing_mask(self) -> np.ndarray:
        """Boolean (n_rows, n_cols) matrix, True where a cell is missing."""
        return self.cells == MISSING

    def column_index(self, name: str) -> int:
        for j, s in enumerate(self.schemas):
            if s.name == name:
                return j
        raise DataError(f"no column named {name!r}")

    def schema_for(self, column: int | str) -> ColumnSchema:
        return self.schemas[self._col(column)]

    def _col(self, column: int | str) -> int:
        return self.column_index(column) if isinstance(column, str) else column

    def codes(self, column: int | str) -> np.ndarray:
        """Integer codes for a categorical column (missing cells = -1)."""
        j = self._col(column)
        if not self.schemas[j].is_categorical:
            raise DataError(f"column {self.schemas[j].name!r} is not categorical")
        return self.cells[:, j].astype(np.int64)

    def column_values(self, column: int | str) -> np.ndarray:
        return self.cells[:, self._col(column)].copy()

    def with_cells(self, cells: np.ndarray) -> "CategoricalDataset":
        """New dataset with the same schemas and replaced cell matrix."""
        return CategoricalDataset(self.schemas, cells)

    def to_numeric(self, columns: tuple[int, ...] | None = None) -> np.ndarray:
        """Float matrix of the selected columns with NaN where missing."""
        cols = tuple(range(self.n_cols)) if columns is None else columns
        out = self.cells[:, cols].astype(np.float64, copy=True)
        out[self.cells[:, cols] == MISSING] = np.nan
        return out


# ---------------------------------------------------------------------------
# Schema files
# ---------------------------------------------------------------------------

def parse_schema(text: str) -> tuple[ColumnSchema, ...]:
    """Parse a schema description, one column per line.

    Line format: ``name: kind [arity=K] [labels=a|b|c] [role=feature]``.
    Blank lines and ``#`` comments are skipped.
    """
    schemas: list[ColumnSchema] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise DataError(f"schema line {lineno}: missing ':' in {line!r}")
        name, _, rest = line.partition(":")
        tokens = rest.split()
        if not tokens:
            raise DataError(f"schema line {lineno}: missing kind")
        kind = tokens[0]
        kwargs: dict = {}
        for token in tokens[1:]:
            if "=" not in token:
                raise DataError(f"schema line {lineno}: bad token {token!r}")
            key, _, value = token.partition("=")
            if key == "arity":
                try:
                    kwargs["arity"] = int(value)
                except ValueError:
                    raise DataError(
                        f"schema line {lineno}: arity must be an integer"
                    ) from None
            elif key == "labels":
                kwargs["labels"] = tuple(value.split("|"))
            elif key == "role":
                kwargs["role"] = value
            else:
                raise DataError(f"schema line {lineno}: unknown key {key!r}")
        schemas.append(ColumnSchema(name.strip(), kind, **kwargs))
    if not schemas:
        raise DataError("schema is empty")
    return tuple(schemas)


def format_schema(schemas: tuple[ColumnSchema, ...]) -> str:
    lines = []
    for s in schemas:
        parts = [f"{s.name}: {s.kind}"]
        if s.is_categorical:
            parts.append(f"arity={s.arity}")
            assert s.labels is not None
            if list(s.labels) != [str(k) for k in range(s.arity or 0)]:
                parts.append("labels=" + "|".join(s.labels))
        if s.role != "feature":
            parts.append(f"role={s.role}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_schema(path: str | Path) -> tuple[ColumnSchema, ...]:
    return parse_schema(Path(path).read_text())


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def load_csv(
    path: str | Path,
    schemas: tuple[ColumnSchema, ...],
    missing_tokens: tuple[str, ...] = ("", "-1"),
) -> CategoricalDataset:
    """Read a CSV file with a header row into a typed dataset.

    The header must list exactly the schema column names, in order.  Cells
    equal to one of ``missing_tokens`` (after stripping whitespace) load as
    missing.  Categorical cells must match a declared label; continuous cells
    must parse as finite floats and may not equal the -1 sentinel.
    """
    label_maps = [
        {label: code for code, label in enumerate(s.labels)} if s.is_categorical
        else None
        for s in schemas
    ]
    missing = frozenset(missing_tokens)
    rows: list[list[float]] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        expected = [s.name for s in schemas]
        if [h.strip() for h in header] != expected:
            raise DataError(
                f"{path}: header {header!r} does not match schema columns "
                f"{expected!r}"
            )
        for rownum, record in enumerate(reader, start=2):
            if len(record) != len(schemas):
                raise DataError(
                    f"{path}:{rownum}: {len(record)} fields, expected "
                    f"{len(schemas)}"
                )
            parsed = []
            for schema, label_map, text in zip(schemas, label_maps, record):
                cell = text.strip()
                if cell in missing:
                    parsed.append(float(MISSING))
                    continue
                if label_map is not None:
                    if cell not in label_map:
                        raise UnknownLabel(
                            f"{path}:{rownum}: {cell!r} is not a label of "
                            f"column {schema.name!r}"
                        )
                    parsed.append(float(label_map[cell]))
                else:
                    try:
                        value = float(cell)
                    except ValueError:
                        raise DataError(
                            f"{path}:{rownum}: {cell!r} is not numeric "
                            f"(column {schema.name!r})"
                        ) from None
                    if not np.isfinite(value):
                        raise DataError(
                            f"{path}:{rownum}: non-finite value in column "
                            f"{schema.name!r}"
                        )
                    if value == MISSING:
                        raise DataError(
                            f"{path}:{rownum}: continuous value -1 collides "
                            f"with the missing sentinel (column "
                            f"{schema.name!r})"
                        )
                    parsed.append(value)
            rows.append(parsed)
    cells = np.array(rows, dtype=np.float64).reshape(len(rows), len(schemas))
    return CategoricalDataset(tuple(schemas), cells)


def emit_csv(
    data: CategoricalDataset,
    path: str | Path,
    missing_token: str = "",
) -> None:
    """Write a dataset back to CSV; inverse of :func:`load_csv`.

    Categorical cells are written as their labels, continuous cells with
    ``repr`` (shortest round-trip form), missing cells as ``missing_token``.
    """
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([s.name for s in data.schemas])
        for i in range(data.n_rows):
            record = []
            for j, schema in enumerate(data.schemas):
                value = data.cells[i, j]
                if value == MISSING:
                    record.append(missing_token)
                elif schema.is_categorical:
                    assert schema.labels is not None
                    record.append(schema.labels[int(value)])
                else:
                    record.append(repr(float(value)))
            writer.writerow(record)


# ---------------------------------------------------------------------------
# Quantile discretization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscretizationMap:
    """Cut points mapping a continuous column onto ordinal codes.

    ``cuts`` are the interior quantile boundaries (``bins - 1`` of them,
    strictly increasing).  A value lands in the lowest bin whose cut exceeds
    it; a value exactly equal to a cut goes to the *higher* bin.
    """

    column: str
    cuts: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.cuts) + 1:
            raise DataError("labels must number one more than cuts")
        if np.any(np.diff(self.cuts) <= 0):
            raise DegenerateColumn(
                f"column {self.column!r}: cut points are not strictly "
                "increasing"
            )

    @property
    def bins(self) -> int:
        return len(self.labels)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Map values to bin codes (ties at a cut go to the higher bin)."""
        return np.searchsorted(np.asarray(self.cuts), values, side="right")


def discretize(
    values: np.ndarray,
    bins: int = 4,
    strategy: str = "quantile",
    column: str = "x",
) -> tuple[DiscretizationMap, np.ndarray]:
    """Quantile-bin a continuous vector into ``bins`` ordinal codes.

    Cut points are the ``k/bins`` quantiles (linear interpolation) of the
    observed values for ``k = 1..bins-1``.  Raises
    :class:`~irtimpute.errors.DegenerateColumn` when the values cannot
    support ``bins`` distinct bins.
    """
    if strategy != "quantile":
        raise DataError(f"unknown discretization strategy {strategy!r}")
    if bins < 2:
        raise DataError("bins must be >= 2")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise DataError("values must be a nonempty 1-D array")
    if not np.all(np.isfinite(values)):
        raise DataError("values must be finite; mask missing cells first")
    if np.unique(values).size < bins:
        raise DegenerateColumn(
            f"column {column!r}: fewer than {bins} distinct values"
        )
    quantiles = np.arange(1, bins) / bins
    cuts = np.quantile(values, quantiles)
    if np.any(np.diff(cuts) <= 0):
        raise DegenerateColumn(
            f"column {column!r}: quantile cut points collide; too much mass "
            "on too few values"
        )
    labels = tuple(f"q{k + 1}" for k in range(bins))
    mapping = DiscretizationMap(column, tuple(float(c) for c in cuts), labels)
    return mapping, mapping.apply(values)


def discretize_dataset(
    data: CategoricalDataset,
    bins: int = 4,
) -> tuple[CategoricalDataset, dict[str, DiscretizationMap]]:
    """Quantile-bin every continuous *feature* column of a dataset.

    Returns the converted dataset (continuous feature columns become ordinal
    with ``bins`` categories; all other columns untouched) plus the map used
    for each converted column.  Missing cells stay missing; cut points come
    from the observed values only.
    """
    cells = np.array(data.cells, copy=True)
    schemas = list(data.schemas)
    maps: dict[str, DiscretizationMap] = {}
    for j, schema in enumerate(data.schemas):
        if schema.kind != "continuous" or schema.role != "feature":
            continue
        col = cells[:, j]
        observed = col != MISSING
        if not observed.any():
            raise DataError(f"column {schema.name!r} has no observed values")
        mapping, codes = discretize(col[observed], bins, column=schema.name)
        new_col = np.full(col.shape, float(MISSING))
        new_col[observed] = codes.astype(np.float64)
        cells[:, j] = new_col
        schemas[j] = ColumnSchema(
            schema.name, "ordinal", arity=bins, labels=mapping.labels,
            role=schema.role,
        )
        maps[schema.name] = mapping
    return CategoricalDataset(tuple(schemas), cells), maps
