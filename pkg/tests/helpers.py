"""Hypothesis strategies and small builders shared by the test modules."""

from hypothesis import strategies as st

from src.services.series import TruncatedSeries, make_series


def series_lists(min_size: int = 1, max_size: int = 24, unit: bool = False):
    """Coefficient lists; with ``unit`` the constant term is +-1."""
    coeffs = st.lists(st.integers(-50, 50), min_size=min_size, max_size=max_size)
    if not unit:
        return coeffs
    head = st.sampled_from([1, -1])
    tail = st.lists(st.integers(-50, 50), min_size=max(min_size - 1, 0), max_size=max_size - 1)
    return st.tuples(head, tail).map(lambda t: [t[0], *t[1]])


def as_series(coeffs, modulus=None) -> TruncatedSeries:
    return make_series(coeffs, len(coeffs), modulus)
