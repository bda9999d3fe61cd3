"""
Simple in-memory cache for expanded generating series.

Batch runs expand the same b'_ell series for many assertions; this cache keeps
the longest expansion per (ell, modulus) and serves shorter requests by
truncation.
"""

from threading import Lock
from typing import Callable, Dict, Optional, Tuple

import structlog

from src.config.settings import get_settings
from src.services.series import TruncatedSeries


logger = structlog.get_logger()

CacheKey = Tuple[str, int, Optional[int]]


class SeriesCache:
    """
    Lightweight thread-safe cache of expanded series.

    Entries are keyed by (family, ell, modulus). When the cache is full the
    least recently used entry is evicted.
    """

    def __init__(self, max_size: int = 32):
        self.max_size = max_size
        self._cache: Dict[CacheKey, Tuple[TruncatedSeries, int]] = {}
        self._clock = 0
        self._lock = Lock()
        self.hits = 0
        self.misses = 0

    def _touch(self) -> int:
        self._clock += 1
        return self._clock

    def get(self, family: str, ell: int, trunc: int, modulus: Optional[int] = None) -> Optional[TruncatedSeries]:
        """Return a cached series of at least ``trunc`` coefficients, truncated to ``trunc``."""
        key = (family, ell, modulus)
        with self._lock:
            if key in self._cache:
                series, _ = self._cache[key]
                if series.trunc >= trunc:
                    self._cache[key] = (series, self._touch())
                    self.hits += 1
                    return series.truncate(trunc)
            self.misses += 1
            return None

    def set(self, family: str, ell: int, series: TruncatedSeries) -> None:
        """Store a series unless a longer one is already cached."""
        key = (family, ell, series.modulus)
        with self._lock:
            current = self._cache.get(key)
            if current is not None and current[0].trunc >= series.trunc:
                return
            if key not in self._cache and len(self._cache) >= self.max_size:
                oldest_key = min(self._cache.keys(), key=lambda k: self._cache[k][1])
                del self._cache[oldest_key]
            self._cache[key] = (series, self._touch())

    def get_or_compute(
        self,
        family: str,
        ell: int,
        trunc: int,
        modulus: Optional[int],
        compute: Callable[[int, int, Optional[int]], TruncatedSeries],
    ) -> TruncatedSeries:
        """Serve from the cache or expand with ``compute(ell, trunc, modulus)`` and store."""
        cached = self.get(family, ell, trunc, modulus)
        if cached is not None:
            logger.debug("series_cache_hit", family=family, ell=ell, trunc=trunc, modulus=modulus)
            return cached
        series = compute(ell, trunc, modulus)
        self.set(family, ell, series)
        return series

    def clear(self) -> None:
        """Clear all cached series."""
        with self._lock:
            self._cache.clear()
            self.hits = 0
            self.misses = 0

    def size(self) -> int:
        """Get current cache size."""
        return len(self._cache)


_series_cache: Optional[SeriesCache] = None
_series_cache_lock = Lock()


def get_series_cache() -> SeriesCache:
    """Process-wide cache sized from settings; concurrent first calls build one instance."""
    global _series_cache
    if _series_cache is None:
        with _series_cache_lock:
            if _series_cache is None:
                _series_cache = SeriesCache(max_size=get_settings().cache_max_entries)
    return _series_cache
