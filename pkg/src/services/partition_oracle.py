"""
Combinatorial partition counts by dynamic programming.

The counts never touch the q-series engine; they are the ground truth the
generating-function expansions are checked against by verify_oracle_agreement.
"""

import time
from typing import Iterable, Optional

import numpy as np
import structlog

from src.models.report_models import VerificationReport
from src.models.series_models import PartitionQuery, QProduct
from src.services.qfactory import expand_qproduct
from src.services.series import TruncatedSeries


logger = structlog.get_logger()


def _allowed_parts(ell: int, n: int, odd_only: bool = False) -> Iterable[int]:
    step = 2 if odd_only else 1
    return (k for k in range(1, n + 1, step) if k % ell)


def _knapsack(parts: Iterable[int], n: int, distinct: bool, modulus: Optional[int] = None) -> np.ndarray:
    """
    Count partitions of 0..n into the given parts.

    Distinct parts use the 0/1 recurrence, whose slice update reads only the
    previous table. Repeated parts divide by (1 - q^k) one part at a time.
    """
    table = np.zeros(n + 1, dtype=object if modulus is None else np.int64)
    table[0] = 1
    for k in parts:
        if k > n:
            break
        if distinct:
            table[k:] = table[k:] + table[: n + 1 - k]
            if modulus is not None:
                table[k:] %= modulus
        else:
            # Dividing by (1 - q^k) is a running sum along each class mod k.
            rows = -(-(n + 1) // k)
            padded = np.zeros(rows * k, dtype=table.dtype)
            padded[: n + 1] = table
            table = np.cumsum(padded.reshape(rows, k), axis=0).reshape(-1)[: n + 1]
            if modulus is not None:
                table %= modulus
    return table


def _validate(ell: int, n: int, variant: str) -> PartitionQuery:
    return PartitionQuery(ell=ell, n=n, variant=variant)


def count_bprime(ell: int, n: int) -> int:
    """Partitions of n into distinct parts, none divisible by ell."""
    q = _validate(ell, n, "distinct-parts")
    return int(_knapsack(_allowed_parts(q.ell, q.n), q.n, distinct=True)[q.n])


def count_bprime_oddparts(ell: int, n: int) -> int:
    """Partitions of n into odd parts, none divisible by ell."""
    q = _validate(ell, n, "odd-parts")
    return int(_knapsack(_allowed_parts(q.ell, q.n, odd_only=True), q.n, distinct=False)[q.n])


def count_bregular(ell: int, n: int) -> int:
    """Partitions of n with no part divisible by ell."""
    q = _validate(ell, n, "unrestricted-parts")
    return int(_knapsack(_allowed_parts(q.ell, q.n), q.n, distinct=False)[q.n])


def count(query: PartitionQuery) -> int:
    dispatch = {
        "distinct-parts": count_bprime,
        "odd-parts": count_bprime_oddparts,
        "unrestricted-parts": count_bregular,
    }
    return dispatch[query.variant](query.ell, query.n)


def bprime_table(ell: int, n_max: int, modulus: Optional[int] = None) -> np.ndarray:
    """b'_ell(0..n_max) in one pass, exact or reduced modulo ``modulus``."""
    _validate(ell, n_max, "distinct-parts")
    logger.debug("bprime_table", ell=ell, n_max=n_max, modulus=modulus)
    return _knapsack(_allowed_parts(ell, n_max), n_max, distinct=True, modulus=modulus)


def bregular_table(ell: int, n_max: int, modulus: Optional[int] = None) -> np.ndarray:
    """b_ell(0..n_max) in one pass."""
    _validate(ell, n_max, "unrestricted-parts")
    return _knapsack(_allowed_parts(ell, n_max), n_max, distinct=False, modulus=modulus)


def bprime_generating_product(ell: int) -> QProduct:
    """(q^2;q^2)(q^ell;q^ell) / ((q;q)(q^{2ell};q^{2ell}))."""
    return QProduct.from_tuples([(2, 2, 1), (ell, ell, 1), (1, 1, -1), (2 * ell, 2 * ell, -1)])


def bprime_series(ell: int, trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """Generating series sum b'_ell(n) q^n."""
    _validate(ell, 0, "distinct-parts")
    return expand_qproduct(bprime_generating_product(ell), trunc, modulus)


def bregular_series(ell: int, trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """Generating series sum b_ell(n) q^n = (q^ell;q^ell) / (q;q)."""
    _validate(ell, 0, "unrestricted-parts")
    return expand_qproduct(QProduct.from_tuples([(ell, ell, 1), (1, 1, -1)]), trunc, modulus)


def count_self_conjugate(n: int) -> int:
    """
    Self-conjugate partitions of n, counted by their Durfee-hook decomposition.

    A self-conjugate partition is a set of distinct odd hook lengths.
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return int(_knapsack(range(1, n + 1, 2), n, distinct=True)[n])


def verify_oracle_agreement(ell: int, bound: int) -> VerificationReport:
    """
    Generating-function coefficients against the knapsack counts for 0 <= n < bound.

    For odd ell the odd-part count is compared as well; the two families only
    coincide when ell is odd.
    """
    start = time.perf_counter()
    series = bprime_series(ell, bound).array
    table = bprime_table(ell, bound - 1)
    counts = [("distinct-part counts", table)]
    if ell % 2:
        odd = _knapsack(_allowed_parts(ell, bound - 1, odd_only=True), bound - 1, distinct=False)
        counts.append(("odd-part counts", odd))
    report_id = f"oracle-ell{ell}"
    anchor = f"sum b'_{ell}(n) q^n against direct counts"
    for label, other in counts:
        bad = np.flatnonzero(series != other)
        if len(bad):
            n = int(bad[0])
            return VerificationReport(
                id=report_id,
                order_checked=bound,
                status="fail",
                first_bad_exponent=n,
                lhs_coeff=int(series[n]),
                rhs_coeff=int(other[n]),
                elapsed_ms=int((time.perf_counter() - start) * 1000),
                anchor=anchor,
                detail=f"series and {label} differ at n={n}",
            )
    logger.info("oracle_agreement", ell=ell, bound=bound)
    return VerificationReport(
        id=report_id,
        order_checked=bound,
        status="pass",
        elapsed_ms=int((time.perf_counter() - start) * 1000),
        anchor=anchor,
        detail=f"series agrees with the {' and '.join(label for label, _ in counts)} for n < {bound}",
    )
