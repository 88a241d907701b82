import numpy as np
import pytest

from knobforge import EvalReport, UndefinedMape, emit_report, load_report, mape, mse


def test_mape_worked_example_is_exact():
    assert mape([100.0, 200.0], [110.0, 180.0]) == 10.0


def test_mape_perfect_prediction():
    assert mape([3.0, 4.0], [3.0, 4.0]) == 0.0


def test_mape_zero_truth_rejected():
    with pytest.raises(UndefinedMape):
        mape([1.0, 0.0], [1.0, 1.0])


def test_mse_worked_example_is_exact():
    assert mse([1.0, 2.0], [2.0, 4.0]) == 2.5


def test_mse_identical_vectors():
    assert mse([5.0], [5.0]) == 0.0


def test_mse_single_element_squares():
    assert mse([1.0], [4.0]) == 9.0


def test_mape_scale_invariant(rng):
    y = rng.uniform(1.0, 10.0, 30)
    p = y + rng.normal(0, 0.5, 30)
    for c in (0.01, 3.0, 1e6):
        assert mape(c * y, c * p) == pytest.approx(mape(y, p), rel=1e-12)


def test_mse_scales_quadratically(rng):
    y = rng.uniform(1.0, 10.0, 30)
    p = y + rng.normal(0, 0.5, 30)
    for c in (0.5, 7.0):
        assert mse(c * y, c * p) == pytest.approx(c * c * mse(y, p), rel=1e-12)


def test_metrics_permutation_invariant(rng):
    y = rng.uniform(1.0, 10.0, 20)
    p = y + rng.normal(0, 0.5, 20)
    perm = rng.permutation(20)
    assert mape(y[perm], p[perm]) == pytest.approx(mape(y, p), rel=1e-12)
    assert mse(y[perm], p[perm]) == pytest.approx(mse(y, p), rel=1e-12)


def test_report_aggregates_match_per_row():
    report = EvalReport.from_predictions(["r1", "r2"], [100.0, 200.0], [110.0, 180.0])
    assert report.mape == pytest.approx(np.mean([r.abs_pct_err for r in report.per_row]))
    assert report.n == 2


def test_empty_report_has_null_aggregates(tmp_path):
    report = EvalReport.from_predictions([], [], [])
    assert report.n == 0 and report.mape is None and report.mse is None
    path = tmp_path / "empty.json"
    emit_report(report, "json", path)
    assert load_report(path) == report


def test_report_json_round_trip(tmp_path):
    report = EvalReport.from_predictions(["a", "b"], [10.0, 20.0], [11.0, 18.0])
    path = tmp_path / "report.json"
    emit_report(report, "json", path)
    assert load_report(path) == report


def test_report_csv_columns_exact(tmp_path):
    report = EvalReport.from_predictions(["a"], [10.0], [11.0])
    path = tmp_path / "report.csv"
    emit_report(report, "csv", path)
    header = path.read_text().splitlines()[0]
    assert header == "id,y_true,y_pred,abs_pct_err"


def test_length_mismatch_rejected():
    from knobforge import ShapeError

    with pytest.raises(ShapeError):
        mape([1.0], [1.0, 2.0])
