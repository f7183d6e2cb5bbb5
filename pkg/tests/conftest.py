"""Shared fixtures: the reference device and its environment."""

from __future__ import annotations

import pytest

from coems import Environment, reference_model


@pytest.fixture(scope="session")
def model():
    return reference_model()


@pytest.fixture(scope="session")
def env(model):
    return model.environment


@pytest.fixture(scope="session")
def room() -> Environment:
    return Environment(temperature_k=300.0)
