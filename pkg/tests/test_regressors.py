import numpy as np
import pytest

from knobforge import RegressorSpec, load_model, make_regressor, save_model


def fitted(kind, rng, hyper=None):
    X = rng.uniform(0.0, 2.0, size=(18, 3))
    y = rng.uniform(1.0, 6.0, size=18)
    spec = RegressorSpec(kind=kind, hyperparams=hyper or {}, seed=5)
    model = make_regressor(spec).fit(X, y)
    return model, spec, X


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        RegressorSpec(kind="svm")


def test_unknown_hyperparam_rejected():
    with pytest.raises(ValueError):
        RegressorSpec(kind="gpr", hyperparams={"bogus": 1})


def test_defaults_resolved():
    spec = RegressorSpec(kind="rf")
    resolved = spec.resolved()
    assert resolved["n_trees"] == 200
    assert resolved["max_depth"] == 50
    nn = RegressorSpec(kind="nn").resolved()
    assert tuple(nn["layer_widths"]) == (64, 64, 64, 64, 1)
    assert nn["epochs"] == 500


@pytest.mark.parametrize(
    "kind,hyper",
    [
        ("gpr", {"alpha": 0.05}),
        ("rf", {"n_trees": 10}),
        ("nn", {"epochs": 30}),
    ],
)
def test_save_load_round_trip(tmp_path, rng, kind, hyper):
    model, spec, X = fitted(kind, rng, hyper)
    path = tmp_path / "model.json"
    save_model(model, spec, [f"f{i}" for i in range(3)], path)
    loaded, spec2, names, preprocess = load_model(path)
    assert spec2.kind == spec.kind
    assert spec2.seed == spec.seed
    assert spec2.resolved() == spec.resolved()
    assert names == ["f0", "f1", "f2"]
    assert preprocess is None
    np.testing.assert_allclose(loaded.predict(X), model.predict(X), rtol=1e-12)


def test_preprocess_block_round_trips(tmp_path, rng):
    model, spec, X = fitted("gpr", rng, {"alpha": 0.1})
    path = tmp_path / "model.json"
    block = {"columns": ["a"], "means": [1.0], "stds": [2.0]}
    save_model(model, spec, ["f0", "f1", "f2"], path, preprocess=block)
    _, _, _, preprocess = load_model(path)
    assert preprocess == block


def test_version_mismatch_rejected(tmp_path, rng):
    import json

    model, spec, _ = fitted("rf", rng, {"n_trees": 2})
    path = tmp_path / "model.json"
    save_model(model, spec, ["a", "b", "c"], path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load_model(path)


def test_gpr_nonpositive_alpha_rejected():
    with pytest.raises(ValueError):
        make_regressor(RegressorSpec(kind="gpr", hyperparams={"alpha": 0.0}))
