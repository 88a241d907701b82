"""End-to-end orchestration: ingest, prune, map, fit, predict, report.

Stage 1 holds out each online-B workload's tail rows, maps its first
n_map_rows against the offline repository, trains one regressor per B
workload on the augmented rows, and scores the held-out predictions. Stage 2
re-maps each online-C workload against the offline-plus-B-augmented
repository, unions all augmentations into one final training set, and
predicts the test rows.

Every training row carries provenance; a guard asserts that no held-out or
test row's latency ever reaches a fit call.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import EvalReport
from .exceptions import KnobforgeError, LeakageError, PipelineError, SchemaError
from .factors import FactorAnalysis
from .ingest import (
    ColumnKind,
    WorkloadRepository,
    WorkloadTable,
    constant_columns,
    drop_columns,
    load_repository,
    load_schema_hint,
    split_holdout,
)
from .mapping import AugmentedDataset, augment, map_workload
from .preprocessing import ColumnScaler
from .pruning import PrunedMetricSet, prune_with_selection
from .regressors import RegressorSpec, make_regressor


@dataclass(frozen=True)
class PipelineConfig:
    offline_paths: tuple
    online_b_paths: tuple
    online_c_paths: tuple
    test_path: str
    schema_hint_path: str
    clusterer: str = "kmeans"
    regressor: RegressorSpec = field(default_factory=lambda: RegressorSpec("gpr"))
    n_map_rows: int = 5
    k_min: int = 2
    k_max: int = 15
    seed: int = 0
    distance: str = "euclidean"

    def __post_init__(self):
        if self.n_map_rows < 1:
            raise ValueError("n_map_rows must be >= 1")
        if self.clusterer not in ("kmeans", "gmm"):
            raise ValueError(f"unknown clusterer {self.clusterer!r}")
        if self.distance not in ("euclidean", "mape"):
            raise ValueError(f"unknown distance {self.distance!r}")

    @classmethod
    def from_dict(cls, data):
        reg = data.get("regressor", {"kind": "gpr"})
        spec = RegressorSpec(
            kind=reg.get("kind", "gpr"),
            hyperparams=dict(reg.get("hyperparams", {})),
            seed=int(reg.get("seed", data.get("seed", 0))),
        )
        return cls(
            offline_paths=tuple(data["offline"]),
            online_b_paths=tuple(data.get("online_b", ())),
            online_c_paths=tuple(data.get("online_c", ())),
            test_path=data.get("test"),
            schema_hint_path=data["schema_hint"],
            clusterer=data.get("clusterer", "kmeans"),
            regressor=spec,
            n_map_rows=int(data.get("n_map_rows", 5)),
            k_min=int(data.get("k_min", 2)),
            k_max=int(data.get("k_max", 15)),
            seed=int(data.get("seed", 0)),
            distance=data.get("distance", "euclidean"),
        )

    @classmethod
    def from_json(cls, path):
        with open(path) as handle:
            return cls.from_dict(json.load(handle))

    def to_dict(self):
        return {
            "offline": list(self.offline_paths),
            "online_b": list(self.online_b_paths),
            "online_c": list(self.online_c_paths),
            "test": self.test_path,
            "schema_hint": self.schema_hint_path,
            "clusterer": self.clusterer,
            "regressor": self.regressor.to_dict(),
            "n_map_rows": self.n_map_rows,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "seed": self.seed,
            "distance": self.distance,
        }


@dataclass(frozen=True)
class PredictionRow:
    workload_id: str
    row_index: int
    y_true: float  # None when the truth is unknown (test rows without latency)
    y_pred: float


@dataclass(frozen=True)
class Stage1Result:
    mappings: dict
    augmented: dict
    predictions: tuple
    report: EvalReport


@dataclass(frozen=True)
class Stage2Result:
    mappings: dict
    predictions: tuple
    report: EvalReport  # None when test rows carry no latency column
    n_training_rows: int
    final_provenance: tuple


@dataclass(frozen=True)
class AuditReport:
    fit_calls: int
    fit_rows: int
    forbidden_rows: int
    violations: int

    @property
    def passed(self):
        return self.violations == 0

    def to_dict(self):
        return {
            "fit_calls": self.fit_calls,
            "fit_rows": self.fit_rows,
            "forbidden_rows": self.forbidden_rows,
            "violations": self.violations,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class PipelineRun:
    config: dict
    dropped_columns: tuple
    eigenvalues: tuple
    selection: object
    pruned: PrunedMetricSet
    feature_names: tuple
    stage1: Stage1Result
    stage2: Stage2Result
    audit: AuditReport

    def summary_dict(self):
        return {
            "config": self.config,
            "dropped_columns": list(self.dropped_columns),
            "pruning": {
                "k": self.pruned.k,
                "metrics": list(self.pruned.names),
                "rule": self.selection.rule,
            },
            "feature_names": list(self.feature_names),
            "stage1": {
                "n_workloads": len(self.stage1.mappings),
                "mape": self.stage1.report.mape,
                "mse": self.stage1.report.mse,
            },
            "stage2": {
                "n_workloads": len(self.stage2.mappings),
                "n_training_rows": self.stage2.n_training_rows,
                "mape": self.stage2.report.mape if self.stage2.report else None,
                "mse": self.stage2.report.mse if self.stage2.report else None,
            },
            "audit": self.audit.to_dict(),
        }


class LeakageGuard:
    """Counts fit rows and refuses any row tagged as held-out."""

    def __init__(self, forbidden):
        self.forbidden = set(forbidden)
        self.fit_calls = 0
        self.fit_rows = 0
        self.violations = 0

    def check_fit(self, provenance):
        self.fit_calls += 1
        self.fit_rows += len(provenance)
        for origin in provenance:
            if (origin.table_id, origin.row_index) in self.forbidden:
                self.violations += 1
                raise LeakageError(
                    f"held-out row ({origin.table_id!r}, {origin.row_index}) reached a fit"
                )

    def report(self):
        return AuditReport(
            fit_calls=self.fit_calls,
            fit_rows=self.fit_rows,
            forbidden_rows=len(self.forbidden),
            violations=self.violations,
        )


def _augmented_as_table(aug):
    return WorkloadTable(aug.target_id, aug.schema, aug.values)


def feature_names_for(schema, pruned):
    """Knob columns then pruned metric columns, both in schema order."""
    pruned_names = set(pruned.names)
    knobs = [c.name for c in schema if c.kind is ColumnKind.KNOB]
    metrics = [c.name for c in schema if c.kind is ColumnKind.METRIC and c.name in pruned_names]
    missing = pruned_names - set(metrics)
    if missing:
        raise SchemaError(f"pruned metrics missing from schema: {sorted(missing)}")
    return tuple(knobs + metrics)


def _fit_on_rows(values_table, provenance, feature_names, spec, guard):
    """Scale features on the training rows only, then fit the regressor."""
    guard.check_fit(provenance)
    scaler = ColumnScaler(columns=list(feature_names)).fit(values_table)
    X = scaler.transform_matrix(values_table, feature_names)
    y = values_table.latency()
    model = make_regressor(spec).fit(X, y)
    return model, scaler


def prune_offline_metrics(offline, clusterer, k_min, k_max, seed):
    """Factor-analyze the offline metric columns and pick representatives."""
    metric_names = [c.name for c in offline.schema if c.kind is ColumnKind.METRIC]
    if len(metric_names) < 2:
        raise SchemaError("need at least two metric columns to prune")
    X = np.vstack([t.matrix(metric_names) for t in offline.all_tables()])
    fa = FactorAnalysis().fit(X, metric_names=metric_names)
    selection, pruned = prune_with_selection(
        fa, clusterer=clusterer, k_range=range(k_min, k_max + 1), seed=seed
    )
    return fa, selection, pruned


def run_stage1(offline, online_b, config, pruned, guard=None):
    """Map, augment, fit, and validate every online-B workload."""
    if guard is None:
        guard = LeakageGuard(_forbidden_rows(online_b, config.n_map_rows, ()))
    feature_names = feature_names_for(offline.schema, pruned)
    repo_scaler = ColumnScaler(columns=list(feature_names)).fit(offline.all_tables())

    mappings = {}
    augmented = {}
    rows = []
    for b_id in online_b.workload_ids:
        try:
            split = split_holdout(online_b[b_id], config.n_map_rows)
            mapping = map_workload(
                split.mapping_rows, offline, pruned, repo_scaler, config.distance
            )
            aug = augment(split.mapping_rows, offline[mapping.chosen])
            model, scaler = _fit_on_rows(
                _augmented_as_table(aug), aug.provenance, feature_names,
                config.regressor, guard,
            )
            X_val = scaler.transform_matrix(split.validation_rows, feature_names)
            y_pred = model.predict(X_val)
            y_true = split.validation_rows.latency()
        except LeakageError:
            raise
        except KnobforgeError as exc:
            raise PipelineError("stage1", str(exc), workload_id=b_id) from exc
        mappings[b_id] = mapping
        augmented[b_id] = aug
        for offset, (t, p) in enumerate(zip(y_true, y_pred)):
            rows.append(
                PredictionRow(b_id, config.n_map_rows + offset, float(t), float(p))
            )
    report = EvalReport.from_predictions(
        [f"{r.workload_id}:{r.row_index}" for r in rows],
        [r.y_true for r in rows],
        [r.y_pred for r in rows],
    )
    return Stage1Result(
        mappings=mappings, augmented=augmented, predictions=tuple(rows), report=report
    )


def _resolve_origin(origin, pseudo_provenance):
    if origin.kind == "source" and origin.table_id in pseudo_provenance:
        return pseudo_provenance[origin.table_id][origin.row_index]
    return origin


class _RowUnion:
    """Deduplicated row union: one copy per physical row, first knob config wins."""

    def __init__(self, schema):
        self.schema = schema
        self.knob_idx = [i for i, c in enumerate(schema) if c.kind is ColumnKind.KNOB]
        self.rows = []
        self.provenance = []
        self.seen_rows = set()
        self.seen_knobs = set()

    def add(self, row, origin):
        key = (origin.table_id, origin.row_index)
        if key in self.seen_rows:
            return
        knobs = tuple(row[self.knob_idx])
        if knobs in self.seen_knobs:
            return
        self.seen_rows.add(key)
        self.seen_knobs.add(knobs)
        self.rows.append(row)
        self.provenance.append(origin)

    def add_augmented(self, aug, pseudo_provenance=None):
        for row, origin in zip(aug.values, aug.provenance):
            if pseudo_provenance is not None:
                origin = _resolve_origin(origin, pseudo_provenance)
            self.add(row, origin)

    def as_dataset(self, target_id, source_id):
        return AugmentedDataset(
            target_id=target_id,
            source_id=source_id,
            schema=self.schema,
            values=np.vstack(self.rows),
            provenance=tuple(self.provenance),
        )


def run_stage2(offline, stage1, online_c, test_tables, config, pruned, guard=None):
    """Re-map C workloads against the B-augmented repository and predict test rows."""
    if guard is None:
        guard = LeakageGuard(_forbidden_rows(None, config.n_map_rows, test_tables))
    feature_names = feature_names_for(offline.schema, pruned)

    # Mapping repository: offline tables plus each B-augmented set as a
    # pseudo-workload named after its target.
    stage2_tables = {wid: offline[wid] for wid in offline.workload_ids}
    pseudo_provenance = {}
    for b_id in sorted(stage1.augmented):
        aug = stage1.augmented[b_id]
        stage2_tables[b_id] = _augmented_as_table(aug)
        pseudo_provenance[b_id] = aug.provenance
    stage2_repo = WorkloadRepository(tables=stage2_tables, schema=offline.schema)
    stage2_scaler = ColumnScaler(columns=list(feature_names)).fit(stage2_repo.all_tables())

    union = _RowUnion(offline.schema)
    for b_id in sorted(stage1.augmented):
        union.add_augmented(stage1.augmented[b_id])

    mappings = {}
    for c_id in online_c.workload_ids:
        try:
            mapping = map_workload(
                online_c[c_id], stage2_repo, pruned, stage2_scaler, config.distance
            )
            aug = augment(online_c[c_id], stage2_repo[mapping.chosen])
        except KnobforgeError as exc:
            raise PipelineError("stage2", str(exc), workload_id=c_id) from exc
        mappings[c_id] = mapping
        union.add_augmented(aug, pseudo_provenance)

    if not union.rows:
        raise PipelineError("stage2", "no training rows: both online repositories are empty")
    final = union.as_dataset(target_id="stage2", source_id="union")
    try:
        model, scaler = _fit_on_rows(
            _augmented_as_table(final), final.provenance, feature_names,
            config.regressor, guard,
        )
    except LeakageError:
        raise
    except KnobforgeError as exc:
        raise PipelineError("stage2", str(exc)) from exc

    rows = []
    y_true_known = True
    for table in test_tables:
        try:
            X = scaler.transform_matrix(table, feature_names)
            y_pred = model.predict(X)
        except KnobforgeError as exc:
            raise PipelineError("stage2", str(exc), workload_id=table.workload_id) from exc
        has_latency = bool(table.names_of_kind(ColumnKind.LATENCY))
        y_true = table.latency() if has_latency else None
        if not has_latency:
            y_true_known = False
        for i in range(table.n_rows):
            rows.append(
                PredictionRow(
                    table.workload_id,
                    i,
                    float(y_true[i]) if y_true is not None else None,
                    float(y_pred[i]),
                )
            )
    report = None
    if rows and y_true_known:
        report = EvalReport.from_predictions(
            [f"{r.workload_id}:{r.row_index}" for r in rows],
            [r.y_true for r in rows],
            [r.y_pred for r in rows],
        )
    return Stage2Result(
        mappings=mappings,
        predictions=tuple(rows),
        report=report,
        n_training_rows=final.n_rows,
        final_provenance=final.provenance,
    )


def _forbidden_rows(online_b, n_map_rows, test_tables):
    forbidden = set()
    if online_b is not None:
        for b_id in online_b.workload_ids:
            for i in range(n_map_rows, online_b[b_id].n_rows):
                forbidden.add((b_id, i))
    for table in test_tables or ():
        for i in range(table.n_rows):
            forbidden.add((table.workload_id, i))
    return forbidden


def _load_group(paths, hint, fallback_schema=None, require_latency=True):
    if not paths:
        if fallback_schema is None:
            raise SchemaError("no input files given")
        return WorkloadRepository(tables={}, schema=fallback_schema)
    return load_repository(paths, hint, require_latency=require_latency)


def run_pipeline(config, out_dir=None):
    """Execute the whole flow; optionally write all artifacts under out_dir."""
    try:
        hint = load_schema_hint(config.schema_hint_path)
        offline = load_repository(config.offline_paths, hint)
        online_b = _load_group(config.online_b_paths, hint, offline.schema)
        online_c = _load_group(config.online_c_paths, hint, offline.schema)
        test_repo = (
            load_repository([config.test_path], hint, require_latency=False)
            if config.test_path
            else None
        )
    except (KnobforgeError, OSError) as exc:
        raise PipelineError("ingest", str(exc)) from exc

    ids = [
        *offline.workload_ids,
        *online_b.workload_ids,
        *online_c.workload_ids,
        *(test_repo.workload_ids if test_repo else ()),
    ]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise PipelineError("ingest", f"workload ids repeat across corpora: {duplicates}")

    # Constant columns are judged across every training workload, then the
    # same columns are removed from the test rows so schemas stay aligned.
    training_tables = (
        offline.all_tables() + online_b.all_tables() + online_c.all_tables()
    )
    dropped = constant_columns(training_tables)
    offline = drop_columns(offline, dropped)
    online_b = drop_columns(online_b, dropped)
    online_c = drop_columns(online_c, dropped)
    test_tables = []
    if test_repo is not None:
        present = [n for n in dropped if n in {c.name for c in test_repo.schema}]
        test_repo = drop_columns(test_repo, present)
        test_tables = test_repo.all_tables()

    try:
        fa, selection, pruned = prune_offline_metrics(
            offline, config.clusterer, config.k_min, config.k_max, config.seed
        )
    except PipelineError:
        raise
    except KnobforgeError as exc:
        raise PipelineError("prune", str(exc)) from exc

    guard = LeakageGuard(
        _forbidden_rows(online_b, config.n_map_rows, test_tables)
    )
    stage1 = run_stage1(offline, online_b, config, pruned, guard)
    stage2 = run_stage2(offline, stage1, online_c, test_tables, config, pruned, guard)

    run = PipelineRun(
        config=config.to_dict(),
        dropped_columns=tuple(dropped),
        eigenvalues=tuple(float(v) for v in fa.eigenvalues_),
        selection=selection,
        pruned=pruned,
        feature_names=feature_names_for(offline.schema, pruned),
        stage1=stage1,
        stage2=stage2,
        audit=guard.report(),
    )
    if out_dir is not None:
        write_run_outputs(run, out_dir)
    return run


def _write_predictions_csv(path, rows):
    lines = ["workload_id,row_index,y_true,y_pred"]
    for r in rows:
        truth = repr(r.y_true) if r.y_true is not None else ""
        lines.append(f"{r.workload_id},{r.row_index},{truth},{repr(r.y_pred)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_run_outputs(run, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "resolved_config.json", "w") as handle:
        json.dump(run.config, handle, indent=2)
        handle.write("\n")
    with open(out / "pruned_metrics.json", "w") as handle:
        json.dump(run.pruned.to_dict(), handle, indent=2)
        handle.write("\n")

    lines = ["factor_index,eigenvalue"]
    lines += [f"{i},{repr(v)}" for i, v in enumerate(run.eigenvalues)]
    (out / "eigenvalues.csv").write_text("\n".join(lines) + "\n")

    lines = ["k,silhouette,bic"]
    for cand in run.selection.candidates:
        bic_txt = "" if cand.bic is None else repr(cand.bic)
        lines.append(f"{cand.k},{repr(cand.silhouette)},{bic_txt}")
    (out / "selection.csv").write_text("\n".join(lines) + "\n")

    with open(out / "stage1_mappings.json", "w") as handle:
        json.dump(
            {wid: m.to_dict() for wid, m in sorted(run.stage1.mappings.items())},
            handle,
            indent=2,
        )
        handle.write("\n")
    with open(out / "stage2_mappings.json", "w") as handle:
        json.dump(
            {wid: m.to_dict() for wid, m in sorted(run.stage2.mappings.items())},
            handle,
            indent=2,
        )
        handle.write("\n")

    _write_predictions_csv(out / "stage1_predictions.csv", run.stage1.predictions)
    _write_predictions_csv(out / "stage2_predictions.csv", run.stage2.predictions)

    with open(out / "stage1_report.json", "w") as handle:
        json.dump(run.stage1.report.to_dict(), handle, indent=2)
        handle.write("\n")
    if run.stage2.report is not None:
        with open(out / "stage2_report.json", "w") as handle:
            json.dump(run.stage2.report.to_dict(), handle, indent=2)
            handle.write("\n")

    with open(out / "summary.json", "w") as handle:
        json.dump(run.summary_dict(), handle, indent=2)
        handle.write("\n")
