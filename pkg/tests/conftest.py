"""
Shared fixtures for the lab tests.
"""

import os
import sys

import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from config import DEFAULT_TOLERANCES  # noqa: E402
from model import ModelParams  # noqa: E402


@pytest.fixture
def tolerances():
    return DEFAULT_TOLERANCES


@pytest.fixture
def small_params():
    """Three-site chain in regime E territory with generic boundary angles."""
    return ModelParams.from_reduced(3, 0.6, -0.2)


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """Run from an empty directory with no LAB_* variables leaking in."""
    for key in list(os.environ):
        if key.startswith('LAB_'):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path
