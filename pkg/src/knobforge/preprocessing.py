"""Column standardization over workload tables."""

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import ScalerScopeError, SchemaError
from .ingest import ColumnKind, WorkloadTable
from .validation import check_fitted


class ColumnScaler(BaseEstimator):
    """Zero-mean, unit-variance scaling of named table columns.

    Statistics are computed over the concatenated rows of the tables passed
    to fit, using the population standard deviation (divide by n) so results
    are reproducible bit-for-bit across implementations. Columns with zero
    variance are centered but not divided. The latency column may never be
    scaled; it is the prediction target and stays in native units.
    """

    def __init__(self, columns=None):
        self.columns = columns

    def fit(self, tables):
        if isinstance(tables, WorkloadTable):
            tables = [tables]
        tables = list(tables)
        if not tables:
            raise SchemaError("fit needs at least one table")
        schema = tables[0].schema
        for t in tables[1:]:
            if t.schema != schema:
                raise SchemaError("tables passed to fit must share a schema")

        if self.columns is None:
            names = [c.name for c in schema if c.kind is not ColumnKind.LATENCY]
        else:
            names = list(self.columns)
        by_name = {c.name: c for c in schema}
        for name in names:
            if name not in by_name:
                raise SchemaError(f"no column {name!r} in schema")
            if by_name[name].kind is ColumnKind.LATENCY:
                raise ScalerScopeError(f"latency column {name!r} cannot be scaled")

        stacked = np.vstack([t.matrix(names) for t in tables])
        if stacked.shape[0] < 2:
            raise ValueError("need at least 2 rows to fit a scaler")
        self.columns_ = tuple(names)
        self.means_ = stacked.mean(axis=0)
        self.stds_ = stacked.std(axis=0)  # population (ddof=0)
        return self

    def _divisors(self):
        return np.where(self.stds_ == 0.0, 1.0, self.stds_)

    def transform_matrix(self, table, columns=None):
        """Scaled values of the requested columns (defaults to all fitted)."""
        check_fitted(self, "columns_")
        names = list(columns) if columns is not None else list(self.columns_)
        pos = {n: i for i, n in enumerate(self.columns_)}
        for name in names:
            if name not in pos:
                raise SchemaError(f"column {name!r} was not fitted")
        idx = [pos[n] for n in names]
        raw = table.matrix(names)
        return (raw - self.means_[idx]) / self._divisors()[idx]

    def transform_table(self, table):
        """Return a copy of the table with fitted columns standardized."""
        check_fitted(self, "columns_")
        values = table.values.copy()
        div = self._divisors()
        for i, name in enumerate(self.columns_):
            j = table.column_index(name)
            values[:, j] = (values[:, j] - self.means_[i]) / div[i]
        return WorkloadTable(table.workload_id, table.schema, values)

    def inverse_transform_table(self, table):
        check_fitted(self, "columns_")
        values = table.values.copy()
        div = self._divisors()
        for i, name in enumerate(self.columns_):
            j = table.column_index(name)
            values[:, j] = values[:, j] * div[i] + self.means_[i]
        return WorkloadTable(table.workload_id, table.schema, values)
