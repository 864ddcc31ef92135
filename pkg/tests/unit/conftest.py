"""Unit test fixtures."""

import pytest


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch):
    """Keep a developer's DSN and worker count out of unit tests."""
    monkeypatch.delenv("SENTRY_DSN", raising=False)
    monkeypatch.setenv("CAVITY_LB_THREADS", "1")
