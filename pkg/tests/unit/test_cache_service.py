"""Unit tests for the expanded-series cache."""

import time
from concurrent.futures import ThreadPoolExecutor
from threading import Barrier

from src.services import cache_service
from src.services.cache_service import SeriesCache, get_series_cache
from src.services.partition_oracle import bprime_series
from src.services.series import make_series


class TestSeriesCache:
    """Longest-expansion caching keyed by family, ell and modulus."""

    def test_miss_then_hit(self):
        """A stored series serves later requests."""
        cache = SeriesCache(max_size=4)
        series = make_series([1, 2, 3, 4], 4)
        assert cache.get("bprime", 5, 4) is None
        cache.set("bprime", 5, series)
        assert cache.get("bprime", 5, 4) == series
        assert (cache.hits, cache.misses) == (1, 1)

    def test_shorter_requests_truncate(self):
        """A request for fewer coefficients is cut from the longer entry."""
        cache = SeriesCache()
        cache.set("bprime", 5, make_series([1, 1, 1, 2, 2], 5))
        assert cache.get("bprime", 5, 3).to_list() == [1, 1, 1]

    def test_longer_requests_miss(self):
        """A cached prefix cannot answer a longer request."""
        cache = SeriesCache()
        cache.set("bprime", 5, make_series([1, 1], 2))
        assert cache.get("bprime", 5, 10) is None

    def test_longer_entry_kept(self):
        """Storing a shorter series leaves the longer one in place."""
        cache = SeriesCache()
        cache.set("bprime", 5, make_series([1, 1, 1], 3))
        cache.set("bprime", 5, make_series([1], 1))
        assert cache.get("bprime", 5, 3) is not None

    def test_modulus_is_part_of_key(self):
        """Exact and modular expansions are cached separately."""
        cache = SeriesCache()
        cache.set("bprime", 5, make_series([1, 1], 2))
        assert cache.get("bprime", 5, 2, modulus=4) is None

    def test_least_recently_used_evicted(self):
        """The oldest untouched entry goes first."""
        cache = SeriesCache(max_size=2)
        cache.set("bprime", 3, make_series([1], 1))
        cache.set("bprime", 5, make_series([1], 1))
        cache.get("bprime", 3, 1)
        cache.set("bprime", 7, make_series([1], 1))
        assert cache.size() == 2
        assert cache.get("bprime", 5, 1) is None
        assert cache.get("bprime", 3, 1) is not None

    def test_get_or_compute(self):
        """compute runs once per key and range."""
        cache = SeriesCache()
        calls = []

        def compute(ell, trunc, modulus):
            calls.append((ell, trunc, modulus))
            return bprime_series(ell, trunc, modulus)

        first = cache.get_or_compute("bprime", 5, 100, 4, compute)
        second = cache.get_or_compute("bprime", 5, 50, 4, compute)
        assert len(calls) == 1
        assert second == first.truncate(50)

    def test_clear(self):
        """clear empties the cache and resets counters."""
        cache = SeriesCache()
        cache.set("bprime", 5, make_series([1], 1))
        cache.get("bprime", 5, 1)
        cache.clear()
        assert cache.size() == 0
        assert cache.hits == 0


class TestProcessCache:
    """The shared instance."""

    def test_singleton(self, fresh_cache):
        """get_series_cache returns one instance per process."""
        assert get_series_cache() is fresh_cache
        assert fresh_cache.size() == 0

    def test_concurrent_first_calls_share_one_instance(self, monkeypatch):
        """Threads racing on an empty slot all get the same cache."""
        built = []

        class SlowCache(SeriesCache):
            def __init__(self, max_size: int = 32):
                time.sleep(0.01)
                built.append(self)
                super().__init__(max_size)

        monkeypatch.setattr(cache_service, "_series_cache", None)
        monkeypatch.setattr(cache_service, "SeriesCache", SlowCache)
        barrier = Barrier(8)

        def first_call():
            barrier.wait()
            return get_series_cache()

        with ThreadPoolExecutor(max_workers=8) as pool:
            caches = list(pool.map(lambda _: first_call(), range(8)))

        assert len(built) == 1
        assert all(c is caches[0] for c in caches)
