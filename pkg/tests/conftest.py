import numpy as np
import pytest

from misa.config import ModelConfig
from misa.data import SynthConfig, collate, generate_synthetic
from misa.model import MISA

DIMS = {"l": 5, "v": 4, "a": 3}


def tiny_data(task="regression", seed=0, n=16, **kw):
    cfg = SynthConfig(n_train=n, n_dev=8, n_test=8, dims=dict(DIMS), t_range=(1, 4), task=task, seed=seed, **kw)
    return generate_synthetic(cfg)


def tiny_model(variant="full", task="regression", hidden=6, seed=0, dtype=None, **kw):
    cfg = ModelConfig(input_dims=dict(DIMS), hidden=hidden, n_heads=2, activation=kw.pop("activation", "tanh"),
                      dropout=kw.pop("dropout", 0.0), task=task, variant=variant, **kw)
    model = MISA(cfg, seed=seed)
    return model.astype(dtype) if dtype is not None else model


def tiny_batch(task="regression", n=4, seed=0, modalities=("l", "v", "a")):
    return collate(tiny_data(task, seed).train[:n], modalities, task)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
