"""Workload similarity scoring, nearest-workload mapping, and augmentation.

A target workload is compared to each repository workload on the pruned
metrics: rows are aligned by nearest scaled knob configuration, per-metric
distances are taken over the aligned pairs, and the mean across metrics is
the workload's score. Lower is more similar. The chosen workload's rows then
augment the target's, with the target winning any knob-configuration clash.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import AlignmentError, SchemaError
from .ingest import ColumnKind


@dataclass(frozen=True)
class MappingResult:
    target_id: str
    scores: tuple  # (source_id, score), ascending by (score, source_id)
    chosen: str

    def to_dict(self):
        return {
            "target_id": self.target_id,
            "chosen": self.chosen,
            "scores": [{"source_id": sid, "score": s} for sid, s in self.scores],
        }


@dataclass(frozen=True)
class RowOrigin:
    kind: str  # "target" or "source"
    table_id: str
    row_index: int


@dataclass(frozen=True)
class AugmentedDataset:
    """Target rows plus the mapped source's non-conflicting rows."""

    target_id: str
    source_id: str
    schema: tuple
    values: np.ndarray
    provenance: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.shape[0] != len(self.provenance):
            raise ValueError("provenance must tag every row")

    @property
    def n_rows(self):
        return self.values.shape[0]

    def column_index(self, name):
        for i, col in enumerate(self.schema):
            if col.name == name:
                return i
        raise SchemaError(f"no column {name!r}")

    def matrix(self, names):
        idx = [self.column_index(n) for n in names]
        return self.values[:, idx]

    def latency(self):
        for i, col in enumerate(self.schema):
            if col.kind is ColumnKind.LATENCY:
                return self.values[:, i]
        raise SchemaError("no latency column")

    def n_target_rows(self):
        return sum(1 for p in self.provenance if p.kind == "target")


def align_rows(target, source, scaler):
    """Index of the nearest source row (scaled knob space) per target row.

    Source rows may serve several target rows; distance ties keep the lowest
    source row index.
    """
    if source.n_rows < 1:
        raise AlignmentError(f"source {source.workload_id!r} has no rows")
    knob_names = [c.name for c in target.schema if c.kind is ColumnKind.KNOB]
    if not knob_names:
        raise AlignmentError("no knob columns to align on")
    t = scaler.transform_matrix(target, knob_names)
    s = scaler.transform_matrix(source, knob_names)
    d2 = (
        np.sum(t * t, axis=1)[:, None]
        + np.sum(s * s, axis=1)[None, :]
        - 2.0 * t @ s.T
    )
    return np.argmin(d2, axis=1)


def score_workload(target, source, pruned, scaler, distance="euclidean"):
    """Mean per-metric distance between target rows and aligned source rows."""
    if target.n_rows < 1:
        raise AlignmentError("target has no rows")
    aligned = align_rows(target, source, scaler)
    names = list(pruned.names)
    t = scaler.transform_matrix(target, names)
    s = scaler.transform_matrix(source, names)[aligned]
    if distance == "euclidean":
        per_metric = np.linalg.norm(t - s, axis=0)
    elif distance == "mape":
        denom = np.maximum(np.abs(t), 1e-12)
        per_metric = np.mean(np.abs(t - s) / denom, axis=0)
    else:
        raise ValueError(f"unknown distance {distance!r}")
    return float(per_metric.mean())


def map_workload(target, repo, pruned, scaler, distance="euclidean"):
    """Score the target against every repository workload; lowest score wins.

    A source that cannot be aligned is kept in the ranking with an infinite
    score instead of aborting the whole mapping. Ties go to the
    lexicographically smaller source id.
    """
    if len(repo) == 0:
        raise ValueError("repository is empty")
    scores = []
    for source_id in repo.workload_ids:
        try:
            s = score_workload(target, repo[source_id], pruned, scaler, distance)
        except AlignmentError:
            s = math.inf
        scores.append((source_id, s))
    scores.sort(key=lambda pair: (pair[1], pair[0]))
    return MappingResult(
        target_id=target.workload_id, scores=tuple(scores), chosen=scores[0][0]
    )


def _knob_tuples(schema, values):
    idx = [i for i, c in enumerate(schema) if c.kind is ColumnKind.KNOB]
    return [tuple(row[idx]) for row in values]


def augment(target, source):
    """Union of target and source rows; knob-config clashes keep the target row."""
    if target.schema != source.schema:
        raise SchemaError("target and source schemas differ")
    target_knobs = set(_knob_tuples(target.schema, target.values))
    keep = [
        i
        for i, knobs in enumerate(_knob_tuples(source.schema, source.values))
        if knobs not in target_knobs
    ]
    values = np.vstack([target.values, source.values[keep]])
    provenance = tuple(
        [RowOrigin("target", target.workload_id, i) for i in range(target.n_rows)]
        + [RowOrigin("source", source.workload_id, i) for i in keep]
    )
    return AugmentedDataset(
        target_id=target.workload_id,
        source_id=source.workload_id,
        schema=target.schema,
        values=values,
        provenance=provenance,
    )
