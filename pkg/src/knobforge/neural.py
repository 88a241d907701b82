"""Fully connected regression net trained full-batch with ADAM on a MAPE loss."""

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import InvalidTarget
from .validation import as_float_matrix, as_float_vector, check_fitted, check_n_features


def init_params(n_features, layer_widths, seed):
    """He-initialized weights and zero biases for each layer."""
    rng = np.random.default_rng(seed)
    params = []
    fan_in = n_features
    for width in layer_widths:
        W = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, width))
        b = np.zeros(width)
        params.append((W, b))
        fan_in = width
    return params


def forward(params, X):
    """Forward pass; ReLU on hidden layers, linear output."""
    a = X
    activations = [a]
    for W, b in params[:-1]:
        a = np.maximum(a @ W + b, 0.0)
        activations.append(a)
    W, b = params[-1]
    out = (a @ W + b).ravel()
    return out, activations


def mape_loss_and_grads(params, X, y):
    """Fractional MAPE loss mean(|y - yhat| / y) and its parameter gradients.

    The loss is non-differentiable where a residual is exactly zero; the
    subgradient sign(0) = 0 is used there.
    """
    n = X.shape[0]
    y_hat, activations = forward(params, X)
    residual = y - y_hat
    loss = float(np.mean(np.abs(residual) / np.abs(y)))

    # dL/dyhat, then standard backprop through the ReLU stack.
    delta = (-np.sign(residual) / (n * np.abs(y))).reshape(-1, 1)
    grads = [None] * len(params)
    for layer in range(len(params) - 1, -1, -1):
        W, _ = params[layer]
        a_prev = activations[layer]
        grads[layer] = (a_prev.T @ delta, delta.sum(axis=0))
        if layer > 0:
            delta = (delta @ W.T) * (activations[layer] > 0)
    return loss, grads


class MlpRegressor(BaseEstimator):
    """Five-layer perceptron (four ReLU hidden layers, one linear output).

    Trained full-batch by ADAM on the fractional MAPE loss, which requires
    strictly positive targets. layer_widths lists each layer's output width;
    the last entry must be 1.
    """

    def __init__(
        self,
        layer_widths=(64, 64, 64, 64, 1),
        epochs=500,
        learning_rate=1e-3,
        beta1=0.9,
        beta2=0.999,
        epsilon=1e-8,
        seed=0,
    ):
        self.layer_widths = layer_widths
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.seed = seed

    def fit(self, X, y):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) != 5:
            raise ValueError(f"layer_widths must have 5 entries, got {len(widths)}")
        if widths[-1] != 1:
            raise ValueError("output layer width must be 1")
        X = as_float_matrix(X)
        y = as_float_vector(y)
        if X.shape[0] != y.size:
            raise ValueError("X and y disagree on sample count")
        if np.any(y <= 0):
            raise InvalidTarget("MAPE loss requires strictly positive targets")

        params = init_params(X.shape[1], widths, self.seed)
        m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        history = []
        for epoch in range(1, self.epochs + 1):
            loss, grads = mape_loss_and_grads(params, X, y)
            history.append(loss)
            new_params = []
            for layer, (W, b) in enumerate(params):
                gW, gb = grads[layer]
                mW = self.beta1 * m[layer][0] + (1 - self.beta1) * gW
                mb = self.beta1 * m[layer][1] + (1 - self.beta1) * gb
                vW = self.beta2 * v[layer][0] + (1 - self.beta2) * gW**2
                vb = self.beta2 * v[layer][1] + (1 - self.beta2) * gb**2
                m[layer] = (mW, mb)
                v[layer] = (vW, vb)
                bias1 = 1 - self.beta1**epoch
                bias2 = 1 - self.beta2**epoch
                step_W = self.learning_rate * (mW / bias1) / (np.sqrt(vW / bias2) + self.epsilon)
                step_b = self.learning_rate * (mb / bias1) / (np.sqrt(vb / bias2) + self.epsilon)
                new_params.append((W - step_W, b - step_b))
            params = new_params
        self.params_ = params
        self.loss_history_ = tuple(history)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_fitted(self, "params_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        out, _ = forward(self.params_, X)
        return out
