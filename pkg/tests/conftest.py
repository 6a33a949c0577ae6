import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, 'src'))
sys.path.insert(0, ROOT)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cube_mask():
    """8³ маска с кубом 4³ в центре"""
    from core.volume import BinaryMask

    data = np.zeros((8, 8, 8), dtype=bool)
    data[2:6, 2:6, 2:6] = True
    return BinaryMask(data)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: полноразмерные замеры времени и памяти (-m 'not slow' пропускает)")
