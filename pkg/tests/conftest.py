"""Shared fixtures: small synthetic datasets and lightweight models."""

import numpy as np
import pytest

from xaibench.data import Dataset


def make_signal_noise_dataset(n_rows=240, seed=3, n_extra=1):
    """Binary dataset where 'signal' determines the label exactly, 'helper'
    correlates with it, and 'noise_*' columns are pure noise."""
    rng = np.random.default_rng(seed)
    signal = rng.normal(0.0, 1.0, n_rows)
    labels = (signal > 0.0).astype(int)
    helper = signal + rng.normal(0.0, 0.8, n_rows)
    cols = [signal, helper]
    names = ["signal", "helper"]
    for i in range(n_extra):
        cols.append(rng.normal(0.0, 1.0, n_rows))
        names.append(f"noise_{i}")
    return Dataset(np.column_stack(cols), labels, tuple(names))


@pytest.fixture
def signal_noise_data():
    return make_signal_noise_dataset()


class ConstantModel:
    """predict_proba returns a fixed probability for every row."""

    kind = "constant"

    def __init__(self, proba, n_features):
        self.proba = float(proba)
        self.n_features = n_features

    def predict_proba(self, x):
        return np.full(np.atleast_2d(x).shape[0], self.proba)

    def predict(self, x):
        return (self.predict_proba(x) >= 0.5).astype(int)


class LinearProbaModel:
    """Sigmoid of a fixed linear score; handy as a smooth test function."""

    kind = "linear"

    def __init__(self, weights, bias=0.0):
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)
        self.n_features = len(self.weights)

    def predict_proba(self, x):
        z = np.atleast_2d(np.asarray(x, dtype=float)) @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-z))

    def predict(self, x):
        return (self.predict_proba(x) >= 0.5).astype(int)
