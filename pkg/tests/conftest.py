"""
Shared test fixtures
"""

import os

# keep test runs from writing into logs/
os.environ.setdefault("UBM_LOG_TO_FILE", "false")

import numpy as np
import pytest

from src.core.models import PositionWeights


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def geometric_weights():
    return PositionWeights.geometric(3, 0.5)
