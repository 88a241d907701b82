import math

import numpy as np
import pytest

from knobforge import (
    PrunedMetricSet,
    WorkloadTable,
    augment,
    map_workload,
    score_workload,
)
from knobforge.pruning import SelectedMetric
from conftest import identity_scaler, make_repo, make_schema, make_table


def pruned_set(names):
    return PrunedMetricSet(
        k=len(names),
        selected=tuple(SelectedMetric(n, i, 0.0) for i, n in enumerate(names)),
    )


def copy_as(table, workload_id):
    return WorkloadTable(workload_id, table.schema, table.values.copy())


def test_identical_tables_score_zero(rng):
    schema = make_schema(2, 2)
    t = make_table("t", rng.uniform(size=(5, 2)), rng.uniform(size=(5, 2)), np.ones(5), schema)
    s = copy_as(t, "s")
    score = score_workload(t, s, pruned_set(["metric_0", "metric_1"]), identity_scaler(schema))
    assert score == 0.0


def test_single_metric_single_row_absolute_difference():
    schema = make_schema(1, 1)
    target = make_table("t", [[0.5]], [[3.0]], [1.0], schema)
    source = make_table("s", [[0.5]], [[7.0]], [1.0], schema)
    score = score_workload(target, source, pruned_set(["metric_0"]), identity_scaler(schema))
    assert score == pytest.approx(4.0)


def test_score_averages_metric_distances():
    schema = make_schema(1, 2)
    target = make_table("t", [[0.5]], [[3.0, 0.0]], [1.0], schema)
    source = make_table("s", [[0.5]], [[5.0, 4.0]], [1.0], schema)
    score = score_workload(
        target, source, pruned_set(["metric_0", "metric_1"]), identity_scaler(schema)
    )
    assert score == pytest.approx(3.0)  # mean of |3-5| and |0-4|


def test_alignment_picks_nearest_knob_row():
    schema = make_schema(1, 1)
    target = make_table("t", [[0.0]], [[1.0]], [1.0], schema)
    source = make_table("s", [[5.0], [0.1]], [[9.0], [1.5]], [1.0, 1.0], schema)
    score = score_workload(target, source, pruned_set(["metric_0"]), identity_scaler(schema))
    assert score == pytest.approx(0.5)  # aligned with row 1, not row 0


def test_exact_copy_in_repo_is_chosen(rng):
    schema = make_schema(2, 2)
    pruned = pruned_set(["metric_0", "metric_1"])
    target = make_table("t", rng.uniform(size=(4, 2)), rng.uniform(size=(4, 2)), np.ones(4), schema)
    others = [
        make_table(f"w{i}", rng.uniform(size=(4, 2)), rng.uniform(2, 3, size=(4, 2)), np.ones(4), schema)
        for i in range(3)
    ]
    repo = make_repo(others + [copy_as(target, "copy")])
    result = map_workload(target, repo, pruned, identity_scaler(schema))
    assert result.chosen == "copy"
    assert dict(result.scores)["copy"] == 0.0


def test_scores_cover_every_workload_ascending(rng):
    schema = make_schema(1, 1)
    pruned = pruned_set(["metric_0"])
    target = make_table("t", [[0.5]], [[1.0]], [1.0], schema)
    repo = make_repo(
        [make_table(f"w{i}", [[0.5]], [[1.0 + i]], [1.0], schema) for i in range(4)]
    )
    result = map_workload(target, repo, pruned, identity_scaler(schema))
    assert len(result.scores) == 4
    values = [s for _, s in result.scores]
    assert values == sorted(values)


def test_tie_broken_lexicographically():
    schema = make_schema(1, 1)
    pruned = pruned_set(["metric_0"])
    target = make_table("t", [[0.5]], [[1.0]], [1.0], schema)
    twin_a = make_table("aa", [[0.5]], [[2.0]], [1.0], schema)
    twin_b = make_table("ab", [[0.5]], [[2.0]], [1.0], schema)
    result = map_workload(target, make_repo([twin_b, twin_a]), pruned, identity_scaler(schema))
    assert result.chosen == "aa"


def test_self_mapping_identity(rng):
    schema = make_schema(2, 2)
    pruned = pruned_set(["metric_0", "metric_1"])
    tables = [
        make_table(f"w{i}", rng.uniform(size=(5, 2)), rng.uniform(size=(5, 2)), np.ones(5), schema)
        for i in range(5)
    ]
    repo = make_repo(tables)
    for t in tables:
        result = map_workload(t, repo, pruned, identity_scaler(schema))
        assert result.chosen == t.workload_id
        assert dict(result.scores)[t.workload_id] == 0.0


def test_noise_monotonicity(rng):
    schema = make_schema(2, 2)
    pruned = pruned_set(["metric_0", "metric_1"])
    knobs = rng.uniform(size=(5, 2))
    metrics = rng.uniform(size=(5, 2))
    target = make_table("t", knobs, metrics, np.ones(5), schema)
    previous = 0.0
    for eps in (1e-6, 1e-3, 1e-1):
        noisy = make_table("s", knobs, metrics + eps, np.ones(5), schema)
        score = score_workload(target, noisy, pruned, identity_scaler(schema))
        assert score >= previous
        assert score <= 10 * eps  # grows like O(eps)
        previous = score


def test_score_symmetry_on_shared_knob_grid(rng):
    schema = make_schema(1, 1)
    pruned = pruned_set(["metric_0"])
    knobs = np.array([[0.0], [1.0], [2.0]])
    a = make_table("a", knobs, rng.uniform(size=(3, 1)), np.ones(3), schema)
    b = make_table("b", knobs, rng.uniform(size=(3, 1)), np.ones(3), schema)
    scaler = identity_scaler(schema)
    assert score_workload(a, b, pruned, scaler) == pytest.approx(
        score_workload(b, a, pruned, scaler)
    )


def test_mape_distance_variant():
    schema = make_schema(1, 1)
    pruned = pruned_set(["metric_0"])
    target = make_table("t", [[0.5]], [[2.0]], [1.0], schema)
    source = make_table("s", [[0.5]], [[3.0]], [1.0], schema)
    score = score_workload(target, source, pruned, identity_scaler(schema), distance="mape")
    assert score == pytest.approx(0.5)  # |2-3| / |2|


def test_unalignable_source_gets_infinite_score(rng):
    # No knob columns: alignment is impossible, mapping must not abort.
    from knobforge import ColumnKind, ColumnSchema

    schema = (
        ColumnSchema("metric_0", ColumnKind.METRIC),
        ColumnSchema("latency", ColumnKind.LATENCY),
    )
    target = WorkloadTable("t", schema, np.array([[1.0, 2.0]]))
    repo = make_repo([WorkloadTable("s", schema, np.array([[1.5, 2.0]]))])
    result = map_workload(target, repo, pruned_set(["metric_0"]), identity_scaler(schema))
    assert result.chosen == "s"
    assert math.isinf(result.scores[0][1])


def test_augment_disjoint_knobs_unions_rows():
    schema = make_schema(1, 1)
    target = make_table("t", [[0.0], [1.0]], [[1.0], [2.0]], [1.0, 2.0], schema)
    source = make_table("s", [[2.0], [3.0]], [[3.0], [4.0]], [3.0, 4.0], schema)
    aug = augment(target, source)
    assert aug.n_rows == 4
    assert aug.n_target_rows() == 2


def test_augment_conflicting_knob_keeps_target_row():
    schema = make_schema(1, 1)
    target = make_table("t", [[0.0], [1.0]], [[1.0], [2.0]], [1.0, 2.0], schema)
    source = make_table("s", [[1.0], [3.0]], [[9.0], [4.0]], [9.0, 4.0], schema)
    aug = augment(target, source)
    assert aug.n_rows == 3
    kept_metrics = aug.values[:, 1].tolist()
    assert 9.0 not in kept_metrics  # the conflicting source row is gone
    assert aug.n_target_rows() == 2


def test_augment_identical_source_collapses_to_target(rng):
    schema = make_schema(2, 1)
    target = make_table("t", rng.uniform(size=(4, 2)), rng.uniform(size=(4, 1)), np.ones(4), schema)
    aug = augment(target, copy_as(target, "s"))
    assert aug.n_rows == 4
    np.testing.assert_array_equal(aug.values, target.values)


def test_augment_provenance_partition(rng):
    schema = make_schema(1, 1)
    target = make_table("t", [[0.0], [1.0]], [[1.0], [2.0]], [1.0, 2.0], schema)
    source = make_table("s", [[5.0], [1.0]], [[3.0], [4.0]], [3.0, 4.0], schema)
    aug = augment(target, source)
    assert aug.n_target_rows() == target.n_rows
    source_rows = [p for p in aug.provenance if p.kind == "source"]
    assert all(p.table_id == "s" for p in source_rows)
