"""In-memory LRU memoisation for pure numerical results."""

import logging
import threading
from collections.abc import Callable
from functools import wraps
from typing import TypeVar

from cachetools import LRUCache  # type: ignore[import-untyped]
from cachetools.keys import hashkey  # type: ignore[import-untyped]

logger = logging.getLogger(__name__)

# Registry of all caches for bulk operations
_cache_registry: list[LRUCache] = []
_lock = threading.RLock()

_fixed_point_cache: LRUCache | None = None

T = TypeVar("T")


def create_lru_cache(maxsize: int) -> LRUCache:
    """Create an LRU cache and register it for bulk operations.

    Args:
        maxsize: Maximum number of entries in the cache

    Returns:
        LRUCache instance
    """
    cache = LRUCache(maxsize=maxsize)
    _cache_registry.append(cache)
    return cache


def clear_all_caches() -> None:
    """Clear all registered caches and reset lazy caches."""
    global _fixed_point_cache
    with _lock:
        for cache in _cache_registry:
            cache.clear()
        _cache_registry.clear()
        _fixed_point_cache = None


def get_fixed_point_cache() -> LRUCache:
    """Get or create the fixed-point cache using settings."""
    global _fixed_point_cache
    with _lock:
        if _fixed_point_cache is None:
            from config.settings import get_settings

            _fixed_point_cache = create_lru_cache(get_settings().fixed_point_cache_size)
        return _fixed_point_cache


def memoized(get_cache: Callable[[], LRUCache]) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """Decorator memoising a pure function in a lazily created LRU cache.

    Arguments must be hashable. Exceptions are not cached.

    Args:
        get_cache: Zero-argument callable returning the cache to use

    Returns:
        Decorator function
    """

    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        def wrapper(*args, **kwargs) -> T:
            cache = get_cache()
            key = hashkey(func.__name__, *args, **kwargs)
            with _lock:
                if key in cache:
                    return cache[key]  # type: ignore[no-any-return]

            result = func(*args, **kwargs)
            with _lock:
                cache[key] = result
            return result

        return wrapper

    return decorator
