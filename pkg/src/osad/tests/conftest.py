"""Keep tracing off during tests and share the small worked-example fixtures."""
import os

os.environ.setdefault("LANGSMITH_TRACING", "false")

import numpy as np
import pytest

from src.osad.core.model import LdsModel, PatternMatrix


@pytest.fixture
def golden_model() -> LdsModel:
    return LdsModel(A=[[0.5, 0.3], [0.3, 0.2]], C=np.eye(2))


@pytest.fixture
def golden_pattern() -> PatternMatrix:
    return PatternMatrix([[1.0, 1.0], [2.0, 2.0]])
