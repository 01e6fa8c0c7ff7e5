"""Shared fixtures."""
import numpy as np
import pytest

from sparse_dg.config import settings
from sparse_dg.services import output_writer, run_controller


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """Send every artifact of the test to a temporary directory."""
    monkeypatch.setattr(settings, "output_dir", str(tmp_path))
    monkeypatch.setattr(output_writer, "_writer", None)
    monkeypatch.setattr(run_controller, "_controller", None)
    return tmp_path


@pytest.fixture
def single_worker(monkeypatch):
    monkeypatch.setattr(settings, "workers", 1)
