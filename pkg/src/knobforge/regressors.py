"""One fit/predict surface over the three latency regressors.

A RegressorSpec names the family and its hyperparameters; make_regressor
turns it into a fresh estimator. Fitted models round-trip through a
versioned JSON document so the CLI can train and predict in separate
processes.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .forest import RandomForestRegressor
from .gp import GaussianProcessRegressor
from .neural import MlpRegressor

MODEL_FORMAT_VERSION = 1

_KINDS = ("gpr", "rf", "nn")

_DEFAULTS = {
    "gpr": {"alpha": 1e-1, "length_scale": 1.0, "signal_variance": 1.0, "optimize_kernel": True},
    "rf": {"n_trees": 200, "max_depth": 50, "min_samples_split": 2, "bootstrap": True},
    "nn": {
        "layer_widths": (64, 64, 64, 64, 1),
        "epochs": 500,
        "learning_rate": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
    },
}


@dataclass(frozen=True)
class RegressorSpec:
    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown regressor kind {self.kind!r}; choose from {_KINDS}")
        unknown = set(self.hyperparams) - set(_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")

    def resolved(self):
        merged = dict(_DEFAULTS[self.kind])
        merged.update(self.hyperparams)
        if self.kind == "nn":
            merged["layer_widths"] = tuple(merged["layer_widths"])
        return merged

    def to_dict(self):
        resolved = self.resolved()
        if self.kind == "nn":
            resolved["layer_widths"] = list(resolved["layer_widths"])
        return {"kind": self.kind, "hyperparams": resolved, "seed": self.seed}

    @classmethod
    def from_dict(cls, data):
        return cls(
            kind=data["kind"],
            hyperparams=dict(data.get("hyperparams", {})),
            seed=int(data.get("seed", 0)),
        )


def make_regressor(spec):
    params = spec.resolved()
    if spec.kind == "gpr":
        if params["alpha"] <= 0:
            raise ValueError("alpha must be positive")
        return GaussianProcessRegressor(**params)
    if spec.kind == "rf":
        if params["n_trees"] < 1:
            raise ValueError("n_trees must be >= 1")
        if params["max_depth"] is not None and params["max_depth"] < 1:
            raise ValueError("max_depth must be >= 1")
        return RandomForestRegressor(seed=spec.seed, **params)
    if spec.kind == "nn":
        return MlpRegressor(seed=spec.seed, **params)
    raise ValueError(f"unknown regressor kind {spec.kind!r}")


def _serialize_tree(node):
    if node.feature < 0:
        return {"value": node.value}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _serialize_tree(node.left),
        "right": _serialize_tree(node.right),
        "value": node.value,
    }


def _deserialize_tree(data):
    from .forest import _Node

    if "feature" not in data:
        return _Node(value=data["value"])
    return _Node(
        feature=data["feature"],
        threshold=data["threshold"],
        left=_deserialize_tree(data["left"]),
        right=_deserialize_tree(data["right"]),
        value=data["value"],
    )


def _model_state(model, spec):
    if spec.kind == "gpr":
        return {
            "x_train": model.X_train_.tolist(),
            "dual_coef": model.dual_coef_.tolist(),
            "y_mean": model.y_mean_,
            "length_scale": model.length_scale_,
            "signal_variance": model.signal_variance_,
        }
    if spec.kind == "rf":
        return {"trees": [_serialize_tree(t.root_) for t in model.trees_]}
    if spec.kind == "nn":
        return {
            "layers": [
                {"weights": W.tolist(), "biases": b.tolist()} for W, b in model.params_
            ]
        }
    raise ValueError(spec.kind)


def _restore_model(spec, state, n_features):
    model = make_regressor(spec)
    model.n_features_in_ = n_features
    if spec.kind == "gpr":
        model.X_train_ = np.asarray(state["x_train"], dtype=np.float64)
        model.dual_coef_ = np.asarray(state["dual_coef"], dtype=np.float64)
        model.y_mean_ = state["y_mean"]
        model.length_scale_ = state["length_scale"]
        model.signal_variance_ = state["signal_variance"]
    elif spec.kind == "rf":
        from .forest import DecisionTreeRegressor

        model.trees_ = []
        for tree_data in state["trees"]:
            t = DecisionTreeRegressor()
            t.root_ = _deserialize_tree(tree_data)
            t.n_features_in_ = n_features
            model.trees_.append(t)
    elif spec.kind == "nn":
        model.params_ = [
            (
                np.asarray(layer["weights"], dtype=np.float64),
                np.asarray(layer["biases"], dtype=np.float64),
            )
            for layer in state["layers"]
        ]
    return model


def save_model(model, spec, feature_names, path, preprocess=None):
    """Write a fitted regressor as a versioned JSON document."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "spec": spec.to_dict(),
        "feature_names": list(feature_names),
        "state": _model_state(model, spec),
    }
    if preprocess is not None:
        doc["preprocess"] = preprocess
    with open(path, "w") as handle:
        json.dump(doc, handle)
        handle.write("\n")


def load_model(path):
    """Read a model document; returns (model, spec, feature_names, preprocess)."""
    with open(path) as handle:
        doc = json.load(handle)
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    spec = RegressorSpec.from_dict(doc["spec"])
    feature_names = list(doc["feature_names"])
    model = _restore_model(spec, doc["state"], len(feature_names))
    return model, spec, feature_names, doc.get("preprocess")
