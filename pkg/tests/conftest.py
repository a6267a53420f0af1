"""
Shared pytest fixtures
"""

import numpy as np
import pytest
from loguru import logger


@pytest.fixture
def rng():
    return np.random.default_rng(20190101)


@pytest.fixture(autouse=True)
def quiet_logs():
    """Keep loguru output out of test reports."""
    logger.remove()
    yield
    logger.remove()


@pytest.fixture
def csv_file(tmp_path):
    """Write text to a CSV file under tmp_path and return its path."""
    def _write(text: str, name: str = 'data.csv'):
        path = tmp_path / name
        path.write_text(text)
        return path
    return _write
