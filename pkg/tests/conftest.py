import sys
from pathlib import Path

import numpy as np
import pytest

# Make the shared oracle helpers importable as `oracles` from any test module.
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240613)
