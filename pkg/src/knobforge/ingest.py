"""Workload file ingestion and row-level preprocessing.

A repository is a set of per-workload observation tables sharing one schema.
Each column is a knob (operator-controlled setting), a metric (observed
runtime statistic), or the latency target. Ingestion rejects anything that is
not a finite number once boolean tokens have been encoded.
"""

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .exceptions import InsufficientRows, ParseError, SchemaError


class ColumnKind(Enum):
    KNOB = "knob"
    METRIC = "metric"
    LATENCY = "latency"


class Encoding(Enum):
    NUMERIC = "numeric"
    BOOLEAN_ENCODED = "boolean_encoded"


# Tokens that mark a column as boolean-valued; matched case-insensitively.
_BOOL_TOKENS = {"true": 1.0, "on": 1.0, "1": 1.0, "false": 0.0, "off": 0.0, "0": 0.0}

WORKLOAD_ID_HINT = "workload_id"


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: ColumnKind
    encoding: Encoding = Encoding.NUMERIC


@dataclass(frozen=True)
class WorkloadTable:
    """One workload's observations: rows are knob configurations."""

    workload_id: str
    schema: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise SchemaError(f"table {self.workload_id!r}: values must be 2-d")
        if values.shape[0] < 1:
            raise SchemaError(f"table {self.workload_id!r}: needs at least one row")
        if values.shape[1] != len(self.schema):
            raise SchemaError(
                f"table {self.workload_id!r}: {values.shape[1]} columns vs "
                f"{len(self.schema)} schema entries"
            )
        if not np.all(np.isfinite(values)):
            raise SchemaError(f"table {self.workload_id!r}: non-finite values")
        names = [c.name for c in self.schema]
        if len(set(names)) != len(names):
            raise SchemaError(f"table {self.workload_id!r}: duplicate column names")
        latency = [i for i, c in enumerate(self.schema) if c.kind is ColumnKind.LATENCY]
        if len(latency) > 1:
            raise SchemaError(f"table {self.workload_id!r}: multiple latency columns")
        if latency and np.any(values[:, latency[0]] <= 0):
            raise SchemaError(
                f"table {self.workload_id!r}: latency values must be strictly positive"
            )

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def column_names(self):
        return tuple(c.name for c in self.schema)

    def column_index(self, name):
        for i, col in enumerate(self.schema):
            if col.name == name:
                return i
        raise SchemaError(f"table {self.workload_id!r}: no column {name!r}")

    def column_values(self, name):
        return self.values[:, self.column_index(name)]

    def names_of_kind(self, kind):
        return tuple(c.name for c in self.schema if c.kind is kind)

    @property
    def knob_names(self):
        return self.names_of_kind(ColumnKind.KNOB)

    @property
    def metric_names(self):
        return self.names_of_kind(ColumnKind.METRIC)

    @property
    def latency_name(self):
        names = self.names_of_kind(ColumnKind.LATENCY)
        if not names:
            raise SchemaError(f"table {self.workload_id!r}: no latency column")
        return names[0]

    def latency(self):
        return self.column_values(self.latency_name)

    def take_rows(self, indices):
        return WorkloadTable(self.workload_id, self.schema, self.values[indices])

    def matrix(self, names):
        idx = [self.column_index(n) for n in names]
        return self.values[:, idx]


@dataclass(frozen=True)
class WorkloadRepository:
    """Workload tables sharing an identical schema."""

    tables: dict
    schema: tuple

    def __post_init__(self):
        for wid, table in self.tables.items():
            if table.workload_id != wid:
                raise SchemaError(f"key {wid!r} does not match table id {table.workload_id!r}")
            if table.schema != self.schema:
                raise SchemaError(f"table {wid!r} does not share the repository schema")

    @property
    def workload_ids(self):
        return tuple(sorted(self.tables))

    def __len__(self):
        return len(self.tables)

    def __getitem__(self, workload_id):
        return self.tables[workload_id]

    def all_tables(self):
        return [self.tables[wid] for wid in self.workload_ids]


@dataclass(frozen=True)
class HoldoutSplit:
    mapping_rows: WorkloadTable
    validation_rows: WorkloadTable


def _read_csv_cells(path):
    """Return (header, rows-of-strings), rejecting ragged rows."""
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", path=str(path)) from None
        header = [h.strip() for h in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"row has {len(row)} cells, header has {len(header)}",
                    path=str(path),
                    line=line_no,
                )
            rows.append(([cell.strip() for cell in row], line_no))
    return header, rows


def load_schema_hint(path):
    """Read a JSON file mapping column name -> knob|metric|latency|workload_id."""
    with open(path) as handle:
        hint = json.load(handle)
    if not isinstance(hint, dict):
        raise SchemaError(f"schema hint {path}: expected a JSON object")
    valid = {k.value for k in ColumnKind} | {WORKLOAD_ID_HINT}
    for name, kind in hint.items():
        if kind not in valid:
            raise SchemaError(f"schema hint {path}: unknown kind {kind!r} for column {name!r}")
    return hint


def load_repository(paths, schema_hint, require_latency=True):
    """Parse CSV files into a WorkloadRepository.

    schema_hint maps every data column to its kind. A column hinted as
    "workload_id" partitions rows into workloads; without one, each file
    becomes a single workload named after its stem. Columns whose cells all
    come from {true,false,on,off,0,1} are flagged BooleanEncoded and mapped
    to {1,0}; everything else must parse as a finite float.
    """
    paths = [Path(p) for p in paths]
    if not paths:
        raise SchemaError("no input files given")

    header = None
    all_rows = []  # (workload_id, cells, path, line)
    id_column = None
    for path in paths:
        file_header, rows = _read_csv_cells(path)
        if header is None:
            header = file_header
            for name in header:
                if name not in schema_hint:
                    raise SchemaError(f"column {name!r} missing from schema hint")
            id_columns = [n for n in header if schema_hint[n] == WORKLOAD_ID_HINT]
            if len(id_columns) > 1:
                raise SchemaError(f"multiple workload_id columns: {id_columns}")
            id_column = id_columns[0] if id_columns else None
        elif file_header != header:
            raise SchemaError(
                f"{path}: header differs from {paths[0]} (all files must share one schema)"
            )
        id_pos = header.index(id_column) if id_column is not None else None
        for cells, line_no in rows:
            wid = cells[id_pos] if id_pos is not None else path.stem
            if not wid:
                raise ParseError("empty workload id", path=str(path), line=line_no)
            all_rows.append((wid, cells, str(path), line_no))

    if not all_rows:
        raise ParseError("no data rows found", path=str(paths[0]))

    data_columns = [n for n in header if n != id_column]
    kinds = {n: ColumnKind(schema_hint[n]) for n in data_columns}
    latency_cols = [n for n in data_columns if kinds[n] is ColumnKind.LATENCY]
    if len(latency_cols) > 1:
        raise SchemaError(f"multiple latency columns: {latency_cols}")
    if require_latency and not latency_cols:
        raise SchemaError("no latency column in schema")

    # Boolean detection runs over the whole corpus so encoding is consistent
    # across workloads. The latency column stays numeric regardless.
    positions = {n: header.index(n) for n in data_columns}
    boolean = {}
    for name in data_columns:
        if kinds[name] is ColumnKind.LATENCY:
            boolean[name] = False
            continue
        pos = positions[name]
        boolean[name] = all(
            cells[pos].lower() in _BOOL_TOKENS for _, cells, _, _ in all_rows
        )

    schema = tuple(
        ColumnSchema(
            name,
            kinds[name],
            Encoding.BOOLEAN_ENCODED if boolean[name] else Encoding.NUMERIC,
        )
        for name in data_columns
    )

    grouped = {}
    for wid, cells, path, line_no in all_rows:
        parsed = np.empty(len(data_columns))
        for j, name in enumerate(data_columns):
            cell = cells[positions[name]]
            if boolean[name]:
                parsed[j] = _BOOL_TOKENS[cell.lower()]
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"non-numeric value {cell!r} in column {name!r}",
                    path=path,
                    line=line_no,
                ) from None
            if not np.isfinite(value):
                raise ParseError(
                    f"non-finite value {cell!r} in column {name!r}",
                    path=path,
                    line=line_no,
                )
            parsed[j] = value
        grouped.setdefault(wid, []).append(parsed)

    tables = {}
    for wid in sorted(grouped):
        tables[wid] = WorkloadTable(wid, schema, np.vstack(grouped[wid]))
    return WorkloadRepository(tables=tables, schema=schema)


def constant_columns(tables, protect_latency=True):
    """Column names holding a single value across all rows of all tables."""
    if not tables:
        return []
    schema = tables[0].schema
    stacked = np.vstack([t.values for t in tables])
    dropped = []
    for i, col in enumerate(schema):
        if protect_latency and col.kind is ColumnKind.LATENCY:
            continue
        column = stacked[:, i]
        if np.all(column == column[0]):
            dropped.append(col.name)
    return dropped


def drop_columns(repo, names):
    """Remove the named columns from every table of a repository."""
    if not names:
        return repo
    drop = set(names)
    keep = [i for i, c in enumerate(repo.schema) if c.name not in drop]
    schema = tuple(repo.schema[i] for i in keep)
    tables = {
        wid: WorkloadTable(wid, schema, table.values[:, keep])
        for wid, table in repo.tables.items()
    }
    return WorkloadRepository(tables=tables, schema=schema)


def drop_constant_columns(repo):
    """Drop columns constant across every row of every table (latency is kept).

    Returns the reduced repository and the dropped column names.
    """
    dropped = constant_columns(repo.all_tables())
    return drop_columns(repo, dropped), dropped


def split_holdout(table, n_map_rows):
    """Split a table into its first n_map_rows rows and the remainder.

    Row order follows the source file; the remainder is the held-out
    validation block.
    """
    if table.n_rows <= n_map_rows:
        raise InsufficientRows(
            f"table {table.workload_id!r} has {table.n_rows} rows; "
            f"need more than {n_map_rows} to split"
        )
    return HoldoutSplit(
        mapping_rows=table.take_rows(np.arange(n_map_rows)),
        validation_rows=table.take_rows(np.arange(n_map_rows, table.n_rows)),
    )
