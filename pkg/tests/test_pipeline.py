import pytest

from knobforge import (
    LeakageError,
    PipelineConfig,
    PipelineError,
    RegressorSpec,
    SynthSpec,
    WorkloadRepository,
    WorkloadTable,
    generate,
    run_pipeline,
    run_stage1,
    run_stage2,
    write_corpus,
)
from knobforge.pipeline import LeakageGuard, prune_offline_metrics
from knobforge.mapping import RowOrigin


def slice_repo(repo, ids):
    return WorkloadRepository(tables={i: repo[i] for i in ids}, schema=repo.schema)


def small_config(regressor=None, **overrides):
    base = dict(
        offline_paths=(),
        online_b_paths=(),
        online_c_paths=(),
        test_path=None,
        schema_hint_path="",
        regressor=regressor or RegressorSpec("gpr", {"alpha": 0.1}, seed=0),
        seed=0,
    )
    base.update(overrides)
    return PipelineConfig(**base)


@pytest.fixture(scope="module")
def corpus():
    repo, truth = generate(SynthSpec(n_workloads=16, seed=21))
    ids = list(repo.workload_ids)
    offline = slice_repo(repo, ids[:10])
    online_b = slice_repo(repo, ids[10:13])
    online_c = slice_repo(repo, ids[13:15])
    test_table = repo[ids[15]]
    _, _, pruned = prune_offline_metrics(offline, "kmeans", 2, 15, 0)
    return repo, truth, offline, online_b, online_c, test_table, pruned


def test_exact_copy_source_maps_with_score_zero_and_interpolates(corpus):
    repo, truth, offline, online_b, _, _, _ = corpus
    b_id = online_b.workload_ids[0]
    copy = WorkloadTable("zzcopy", repo.schema, repo[b_id].values.copy())
    offline_plus = WorkloadRepository(
        tables={**offline.tables, "zzcopy": copy}, schema=repo.schema
    )
    _, _, pruned = prune_offline_metrics(offline_plus, "kmeans", 2, 15, 0)
    config = small_config(regressor=RegressorSpec("gpr", {"alpha": 1e-10}, seed=0))
    result = run_stage1(offline_plus, slice_repo(online_b, [b_id]), config, pruned)
    mapping = result.mappings[b_id]
    assert mapping.chosen == "zzcopy"
    assert dict(mapping.scores)["zzcopy"] == pytest.approx(0.0, abs=1e-9)
    for row in result.predictions:
        assert abs(row.y_pred - row.y_true) / row.y_true < 0.05


def test_empty_online_b_gives_empty_report(corpus):
    _, _, offline, _, _, _, pruned = corpus
    empty = WorkloadRepository(tables={}, schema=offline.schema)
    result = run_stage1(offline, empty, small_config(), pruned)
    assert result.report.n == 0
    assert result.predictions == ()


def test_empty_online_c_trains_on_stage1_union(corpus):
    _, _, offline, online_b, _, test_table, pruned = corpus
    config = small_config()
    stage1 = run_stage1(offline, online_b, config, pruned)
    empty = WorkloadRepository(tables={}, schema=offline.schema)
    stage2 = run_stage2(offline, stage1, empty, [test_table], config, pruned)
    stage1_rows = {
        (p.table_id, p.row_index)
        for aug in stage1.augmented.values()
        for p in aug.provenance
    }
    final_rows = {(p.table_id, p.row_index) for p in stage2.final_provenance}
    assert final_rows == stage1_rows
    assert stage2.mappings == {}
    assert len(stage2.predictions) == test_table.n_rows


def test_stage2_training_superset_of_stage1(corpus):
    _, _, offline, online_b, online_c, test_table, pruned = corpus
    config = small_config()
    stage1 = run_stage1(offline, online_b, config, pruned)
    stage2 = run_stage2(offline, stage1, online_c, [test_table], config, pruned)
    stage1_rows = {
        (p.table_id, p.row_index)
        for aug in stage1.augmented.values()
        for p in aug.provenance
    }
    final_rows = {(p.table_id, p.row_index) for p in stage2.final_provenance}
    assert stage1_rows <= final_rows
    assert stage2.n_training_rows >= len(stage1_rows)


def test_test_row_duplicating_training_row_interpolates(corpus):
    repo, _, offline, online_b, online_c, _, pruned = corpus
    config = small_config(regressor=RegressorSpec("gpr", {"alpha": 1e-10}, seed=0))
    stage1 = run_stage1(offline, online_b, config, pruned)
    c_id = online_c.workload_ids[0]
    test_table = WorkloadTable("zztest", repo.schema, online_c[c_id].values[:1].copy())
    stage2 = run_stage2(offline, stage1, online_c, [test_table], config, pruned)
    row = stage2.predictions[0]
    assert abs(row.y_pred - row.y_true) / row.y_true < 1e-3


def test_pipeline_deterministic_in_memory(tmp_path):
    repo, truth = generate(SynthSpec(n_workloads=14, seed=3))
    cfg_data = write_corpus(repo, truth, tmp_path, 8, 2, 2, 1)
    config = PipelineConfig.from_dict(cfg_data)
    run_a = run_pipeline(config)
    run_b = run_pipeline(config)
    assert run_a.summary_dict() == run_b.summary_dict()
    assert run_a.stage1.predictions == run_b.stage1.predictions
    assert run_a.stage2.predictions == run_b.stage2.predictions


def test_run_pipeline_writes_artifacts(tmp_path):
    repo, truth = generate(SynthSpec(n_workloads=14, seed=3))
    cfg_data = write_corpus(repo, truth, tmp_path / "corpus", 8, 2, 2, 1)
    config = PipelineConfig.from_dict(cfg_data)
    out = tmp_path / "results"
    run = run_pipeline(config, out_dir=out)
    expected = [
        "resolved_config.json",
        "pruned_metrics.json",
        "eigenvalues.csv",
        "selection.csv",
        "stage1_mappings.json",
        "stage2_mappings.json",
        "stage1_predictions.csv",
        "stage2_predictions.csv",
        "stage1_report.json",
        "stage2_report.json",
        "summary.json",
    ]
    for name in expected:
        assert (out / name).exists(), name
    header = (out / "stage1_predictions.csv").read_text().splitlines()[0]
    assert header == "workload_id,row_index,y_true,y_pred"
    assert run.audit.passed


def test_missing_file_names_ingest_stage(tmp_path):
    config = small_config(
        offline_paths=(str(tmp_path / "missing.csv"),),
        schema_hint_path=str(tmp_path / "hint.json"),
    )
    (tmp_path / "hint.json").write_text("{}")
    with pytest.raises(PipelineError) as err:
        run_pipeline(config)
    assert err.value.stage == "ingest"
    assert "missing.csv" in str(err.value)


def test_leakage_guard_rejects_forbidden_row():
    guard = LeakageGuard({("b", 5)})
    with pytest.raises(LeakageError):
        guard.check_fit([RowOrigin("target", "b", 5)])
    assert guard.violations == 1
    assert not guard.report().passed


def test_leakage_guard_wired_into_stage1(corpus):
    _, _, offline, online_b, _, _, pruned = corpus
    b_id = online_b.workload_ids[0]
    # poison the guard so a legitimate training row is treated as held out
    guard = LeakageGuard({(b_id, 0)})
    with pytest.raises(LeakageError):
        run_stage1(offline, slice_repo(online_b, [b_id]), small_config(), pruned, guard)


def test_audit_reports_all_fits(corpus):
    _, _, offline, online_b, online_c, test_table, pruned = corpus
    config = small_config()
    guard = LeakageGuard(set())
    stage1 = run_stage1(offline, online_b, config, pruned, guard)
    run_stage2(offline, stage1, online_c, [test_table], config, pruned, guard)
    report = guard.report()
    assert report.fit_calls == len(online_b) + 1
    assert report.passed


def test_feature_names_cover_knobs_and_pruned_metrics(corpus):
    _, _, offline, _, _, _, pruned = corpus
    from knobforge.pipeline import feature_names_for
    from knobforge.ingest import ColumnKind

    names = feature_names_for(offline.schema, pruned)
    knobs = tuple(c.name for c in offline.schema if c.kind is ColumnKind.KNOB)
    assert names[: len(knobs)] == knobs
    assert set(names[len(knobs):]) == set(pruned.names)


def test_duplicate_ids_across_corpora_rejected(tmp_path):
    repo, truth = generate(SynthSpec(n_workloads=8, seed=1))
    cfg = write_corpus(repo, truth, tmp_path, 4, 2, 1, 1)
    cfg["online_b"] = cfg["offline"][:1]  # same workload in two corpora
    with pytest.raises(PipelineError) as err:
        run_pipeline(PipelineConfig.from_dict(cfg))
    assert err.value.stage == "ingest"


def test_gmm_variant_completes(tmp_path):
    repo, truth = generate(SynthSpec(n_workloads=14, seed=4))
    cfg = write_corpus(repo, truth, tmp_path, 8, 2, 2, 1)
    cfg["clusterer"] = "gmm"
    run = run_pipeline(PipelineConfig.from_dict(cfg))
    assert run.selection.rule == "silhouette_then_bic"
    assert run.stage1.report.mape is not None


def test_stage2_never_much_worse_than_stage1(tmp_path):
    # More training data must not catastrophically hurt the final model.
    for seed in range(10):
        repo, truth = generate(SynthSpec(n_workloads=46, seed=seed))
        cfg = write_corpus(repo, truth, tmp_path / f"s{seed}", 24, 10, 10, 2)
        run = run_pipeline(PipelineConfig.from_dict(cfg))
        assert run.stage2.report.mape <= run.stage1.report.mape + 5.0
