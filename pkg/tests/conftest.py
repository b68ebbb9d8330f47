import numpy as np
import pytest

from cslab.models import MapModel, leslie_gower


@pytest.fixture
def lg_flat() -> MapModel:
    "every a_ij = 1, the carrying simplex is the plane x1 + x2 + x3 = 1"
    return leslie_gower([2, 2, 2], np.ones((3, 3)))


@pytest.fixture
def lg_weak() -> MapModel:
    "weak competition, a stable interior equilibrium at (1, 1, 1)"
    a = np.full((3, 3), 0.5)
    np.fill_diagonal(a, 1.0)
    return leslie_gower([3, 3, 3], a)


@pytest.fixture
def lg_strong() -> MapModel:
    "strong competition, interior equilibrium at (1/5, 1/5, 1/5)"
    a = np.full((3, 3), 2.0)
    np.fill_diagonal(a, 1.0)
    return leslie_gower([2, 2, 2], a)


@pytest.fixture
def in_tmp(tmp_path, monkeypatch):
    "run inside tmp_path so caches and outputs stay out of the repo"
    monkeypatch.chdir(tmp_path)
    return tmp_path
