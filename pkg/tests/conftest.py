import numpy as np
import pytest

from knobforge import ColumnKind, ColumnSchema, WorkloadRepository, WorkloadTable
from knobforge.preprocessing import ColumnScaler


def make_schema(n_knobs=1, n_metrics=1, metric_names=None, knob_names=None):
    knobs = knob_names or [f"knob_{i}" for i in range(n_knobs)]
    metrics = metric_names or [f"metric_{i}" for i in range(n_metrics)]
    columns = [ColumnSchema(k, ColumnKind.KNOB) for k in knobs]
    columns += [ColumnSchema(m, ColumnKind.METRIC) for m in metrics]
    columns.append(ColumnSchema("latency", ColumnKind.LATENCY))
    return tuple(columns)


def make_table(workload_id, knobs, metrics, latency, schema=None):
    knobs = np.atleast_2d(np.asarray(knobs, dtype=float))
    metrics = np.atleast_2d(np.asarray(metrics, dtype=float))
    latency = np.asarray(latency, dtype=float).reshape(-1, 1)
    if schema is None:
        schema = make_schema(knobs.shape[1], metrics.shape[1])
    values = np.hstack([knobs, metrics, latency])
    return WorkloadTable(workload_id, schema, values)


def make_repo(tables):
    return WorkloadRepository(
        tables={t.workload_id: t for t in tables}, schema=tables[0].schema
    )


def identity_scaler(schema):
    """A fitted scaler that passes values through unchanged."""
    names = [c.name for c in schema if c.kind is not ColumnKind.LATENCY]
    scaler = ColumnScaler(columns=names)
    scaler.columns_ = tuple(names)
    scaler.means_ = np.zeros(len(names))
    scaler.stds_ = np.ones(len(names))
    return scaler


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
