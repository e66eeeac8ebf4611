import numpy as np
import pytest

from core.sharding import shard_partition
from models import create_model, make_synthetic_dataset
from netsim.channel import DropConfig
from schemas.experiment import ExperimentConfig


@pytest.fixture
def layout4():
    return shard_partition(10, 4)


@pytest.fixture
def lossless():
    return DropConfig(p_grad=0.0, p_param=0.0, seed=7)


@pytest.fixture
def ls_dataset():
    return make_synthetic_dataset(seed=3, kind="least_squares", n=512, f=8, noise=0.1)


@pytest.fixture
def ls_model():
    return create_model("least_squares", 8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    return ExperimentConfig.model_validate({
        "workers": 4,
        "iterations": 40,
        "batch_size": 8,
        "seed": 5,
        "model": {"kind": "least_squares"},
        "dataset": {"samples": 400, "features": 8, "noise": 0.1},
        "learning_rate": {"initial": 0.1},
    })
