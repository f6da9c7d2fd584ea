import json
from pathlib import Path

import numpy as np
import pytest

from models import QuantileGrid, SamplerConfig, SyntheticTruth

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def small_truth() -> SyntheticTruth:
    """Two-variable model with a short sample, quick enough for unit tests."""
    return SyntheticTruth(
        alpha=np.array([-0.1, 0.1]),
        b_mat=np.array([[0.8, 0.05], [0.1, 0.5]]),
        sigma_mat=np.array([[0.01, 0.002], [0.002, 0.1]]),
        grid=QuantileGrid(np.array([0.2, 0.4, 0.6, 0.8])),
        n=2_000,
        periods=16,
        seed=7,
        mu_bar=5.0,
        names=["ssr"],
    )


@pytest.fixture
def tiny_sampler() -> SamplerConfig:
    return SamplerConfig(burn_in=200, draws=150, log_every=100)


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration JSON next to the test's files and return its path."""

    def _write(payload: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload, indent=4))
        return path

    return _write


@pytest.fixture
def small_truth_file(tmp_path, small_truth) -> Path:
    path = tmp_path / "truth.json"
    small_truth.save(path)
    return path
