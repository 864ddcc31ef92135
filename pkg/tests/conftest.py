"""Shared test fixtures for pytest."""

import pytest

from config.settings import get_settings
from core.cache import clear_all_caches
from policies.models import PolicySpec


@pytest.fixture(autouse=True)
def fresh_caches():
    """Start every test with empty fixed-point caches and freshly read settings."""
    get_settings.cache_clear()
    clear_all_caches()
    yield
    clear_all_caches()
    get_settings.cache_clear()


@pytest.fixture
def ll2():
    return PolicySpec.ll(2)


@pytest.fixture
def ll1():
    return PolicySpec.ll(1)


@pytest.fixture
def ll32():
    """LL(3,2): batches of two jobs to the two least loaded of three servers."""
    return PolicySpec.lldk(3, 2)


@pytest.fixture
def mix12():
    return PolicySpec.mix([1, 2], [0.5, 0.5])
