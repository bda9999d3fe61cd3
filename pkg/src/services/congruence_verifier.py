"""
Bounded verification of arithmetic-progression congruences for b'_ell.

Large scans read residues from the generating function expanded modulo M;
the dynamic-programming oracle cross-checks a prefix, and exact values spot
check the modular arithmetic. Every report states the range it covers and
nothing beyond it.
"""

import time
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
import structlog
from sympy import isprime, jacobi_symbol

from src.config.settings import get_settings
from src.models.report_models import VerificationReport
from src.models.series_models import APAssertion, LegendreQuery, QProduct
from src.services.cache_service import get_series_cache
from src.services.exceptions import IneligiblePrimeError, TruncationError
from src.services.partition_oracle import bprime_series, bprime_table, bregular_table
from src.services.qfactory import expand_qproduct, f1_distinguished_k
from src.services.series import TruncatedSeries, dissect, scale


logger = structlog.get_logger()

SPOT_CHECK_LIMIT = 1500
SPOT_CHECKS = 16


def _elapsed_ms(start: float) -> int:
    return int((time.perf_counter() - start) * 1000)


# ----------------------------------------------------------------------
# Quadratic symbols
# ----------------------------------------------------------------------


def legendre(a: int, p: int) -> int:
    """(a/p) by Euler's criterion: 1, 0 when p | a, or -1."""
    query = LegendreQuery(a=a, p=p)
    r = pow(query.a % query.p, (query.p - 1) // 2, query.p)
    if r == 0:
        return 0
    return 1 if r == 1 else -1


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for any integer n."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    twos = 0
    while n % 2 == 0:
        n //= 2
        twos += 1
    if twos:
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5) and twos % 2:
            result = -result
    if n == 1:
        return result
    return result * int(jacobi_symbol(a % n, n))


def legendre_values(p: int) -> Tuple[int, int]:
    return legendre(3, p), legendre(-5, p)


def eligible_prime(p: int) -> bool:
    """True iff (3/p) != (-5/p) for a prime p >= 5."""
    if p < 5 or not isprime(p):
        raise IneligiblePrimeError(f"p={p} must be a prime >= 5")
    three, minus_five = legendre_values(p)
    return three != minus_five


def _require_eligible(p: int) -> None:
    if not eligible_prime(p):
        three, minus_five = legendre_values(p)
        raise IneligiblePrimeError(
            f"p={p} is not eligible: (3/{p}) = {three} equals (-5/{p}) = {minus_five}"
        )


# ----------------------------------------------------------------------
# Residue streams
# ----------------------------------------------------------------------


def bprime_residues(ell: int, trunc: int, modulus: int) -> TruncatedSeries:
    """sum b'_ell(n) q^n modulo M, shared through the series cache."""
    return get_series_cache().get_or_compute("bprime", ell, trunc, modulus, bprime_series)


@lru_cache(maxsize=8)
def _exact_table(ell: int, n_max: int) -> np.ndarray:
    return bprime_table(ell, n_max)


def _spot_check(ell: int, modulus: int, indices: np.ndarray, residues: np.ndarray) -> Optional[int]:
    """First index among a fixed sample whose exact value disagrees with the residue stream."""
    small = np.flatnonzero(indices <= SPOT_CHECK_LIMIT)
    if len(small) == 0:
        return None
    rng = np.random.default_rng(ell * 1_000_003 + modulus)
    sample = np.sort(rng.choice(small, size=min(SPOT_CHECKS, len(small)), replace=False))
    table = _exact_table(ell, int(indices[small[-1]]))
    for pos in sample:
        if int(table[indices[pos]]) % modulus != int(residues[pos]):
            return int(indices[pos])
    return None


def _fail(
    report_id: str,
    order: int,
    witness: int,
    lhs: int,
    rhs: int,
    modulus: Optional[int],
    start: float,
    anchor: str,
    detail: str,
) -> VerificationReport:
    return VerificationReport(
        id=report_id,
        order_checked=order,
        status="fail",
        first_bad_exponent=witness,
        lhs_coeff=lhs,
        rhs_coeff=rhs,
        modulus=modulus,
        elapsed_ms=_elapsed_ms(start),
        anchor=anchor,
        detail=detail,
    )


def _log(report: VerificationReport) -> VerificationReport:
    logger.info(
        "congruence_verified",
        id=report.id,
        status=report.status,
        order=report.order_checked,
        modulus=report.modulus,
        witness=report.first_bad_exponent,
        elapsed_ms=report.elapsed_ms,
    )
    return report


# ----------------------------------------------------------------------
# Arithmetic progressions
# ----------------------------------------------------------------------


def _progression_label(a: APAssertion) -> str:
    return f"b'_{a.ell}({a.m}n+{a.r}) = {a.claimed} mod {a.modulus}"


def verify_ap(assertion: APAssertion, trunc: Optional[int] = None) -> VerificationReport:
    """
    Check b'_ell(m n + r) = claimed (mod M) for 0 <= n < bound.

    Witnesses are b'_ell indices m n + r, and order_checked is one past the
    largest index examined.

    Raises:
        TruncationError: ``trunc`` does not cover the largest index.
    """
    a = assertion
    start = time.perf_counter()
    report_id = a.id or f"ap-{a.m}n+{a.r}-mod{a.modulus}"
    order = a.max_index() + 1
    if trunc is not None and trunc < order:
        raise TruncationError(f"truncation {trunc} does not cover b'_{a.ell}({a.max_index()})")

    if a.modulus == 1:
        return _log(
            VerificationReport(
                id=report_id,
                order_checked=order,
                status="pass",
                modulus=1,
                elapsed_ms=_elapsed_ms(start),
                anchor=a.anchor,
                detail="every integer is 0 mod 1",
            )
        )

    indices = a.m * np.arange(a.bound, dtype=np.int64) + a.r
    notes = []
    values: Optional[np.ndarray] = None

    if a.source in ("series", "both"):
        values = bprime_residues(a.ell, order, a.modulus).array[indices]
        bad = _spot_check(a.ell, a.modulus, indices, values)
        if bad is not None:
            pos = int((bad - a.r) // a.m)
            return _log(
                _fail(report_id, order, bad, int(values[pos]), int(_exact_table(a.ell, bad)[bad]) % a.modulus,
                      a.modulus, start, a.anchor, "modular series disagrees with an exact spot check")
            )
        notes.append(f"series n < {a.bound}")

    if a.source in ("oracle", "both"):
        k = a.oracle_count() if a.source == "both" else a.bound
        oracle = bprime_table(a.ell, int(indices[k - 1]), modulus=a.modulus)[indices[:k]]
        if values is not None:
            mismatch = np.flatnonzero(values[:k] != oracle)
            if len(mismatch):
                i = int(mismatch[0])
                return _log(
                    _fail(report_id, order, int(indices[i]), int(values[i]), int(oracle[i]),
                          a.modulus, start, a.anchor, "series and oracle residue streams disagree")
                )
        else:
            values = oracle
            order = int(indices[k - 1]) + 1
            indices = indices[:k]
        notes.append(f"oracle n < {k}")

    bad = np.flatnonzero(values != a.claimed)
    if len(bad):
        i = int(bad[0])
        return _log(
            _fail(report_id, order, int(indices[i]), int(values[i]), a.claimed, a.modulus, start,
                  a.anchor, f"{_progression_label(a)} fails at n = {i}")
        )

    return _log(
        VerificationReport(
            id=report_id,
            order_checked=order,
            status="pass",
            modulus=a.modulus,
            elapsed_ms=_elapsed_ms(start),
            anchor=a.anchor,
            detail=f"{_progression_label(a)} holds for " + ", ".join(notes),
        )
    )


def parity_exponents(bound: int) -> np.ndarray:
    """Sorted values 15k^2 - 5k below ``bound`` over all integers k."""
    found = set()
    for sign in (1, -1):
        k = 0
        while (value := 15 * k * k - sign * 5 * k) < bound:
            found.add(value)
            k += 1
    return np.array(sorted(found), dtype=np.int64)


def verify_parity_characterization(bound: int) -> VerificationReport:
    """b'_5(2n+1) is odd exactly when n = 15k^2 - 5k, for 0 <= n < bound."""
    start = time.perf_counter()
    odd_part = dissect(bprime_residues(5, 2 * bound, 2), 2, 1).array[:bound]
    indicator = np.zeros(bound, dtype=np.int64)
    indicator[parity_exponents(bound)] = 1
    bad = np.flatnonzero(odd_part != indicator)
    anchor = "b'_5(2n+1) is odd iff n = 15k^2 - 5k"
    if len(bad):
        n = int(bad[0])
        return _log(
            _fail("parity", bound, n, int(odd_part[n]), int(indicator[n]), 2, start, anchor,
                  f"parity of b'_5({2 * n + 1}) disagrees with the characterization")
        )
    return _log(
        VerificationReport(
            id="parity",
            order_checked=bound,
            status="pass",
            modulus=2,
            elapsed_ms=_elapsed_ms(start),
            anchor=anchor,
            detail=f"{int(indicator.sum())} odd values among n < {bound}, all at n = 15k^2 - 5k",
        )
    )


# ----------------------------------------------------------------------
# Families for eligible primes
# ----------------------------------------------------------------------


def _offset(numerator: int) -> int:
    if numerator % 6:
        raise ArithmeticError(f"offset numerator {numerator} is not divisible by 6")
    return numerator // 6


def _require_reach(what: str, step: int, begin: int, n: int, bound: Optional[int]) -> None:
    """Raise unless the truncation reaches the first index (or ``bound`` indices) of a progression."""
    needed = begin + 1 if bound is None else begin + step * (bound - 1) + 1
    if needed > n:
        raise TruncationError(f"{what} needs truncation {needed}, got {n}")


def family_progressions(p: int, alpha: int) -> List[Tuple[str, int, int]]:
    """(label, step, start) of every progression the two families assert for one alpha."""
    q2a = p ** (2 * alpha)
    first = _offset(17 * q2a + 1)
    progressions = [
        (f"4*{p}^{2 * alpha}(5n+{j})+{first}", 20 * q2a, 4 * q2a * j + first) for j in (1, 3)
    ]
    second = _offset(17 * q2a * p * p + 1)
    progressions += [
        (f"4*{p}^{2 * alpha + 1}({p}n+{j})+{second}", 4 * q2a * p * p, 4 * q2a * p * j + second)
        for j in range(1, p)
    ]
    return progressions


def _scan_progressions(
    residues: np.ndarray, progressions: List[Tuple[str, int, int]], bound: Optional[int], claimed: int = 0
) -> Tuple[int, Optional[Tuple[int, int, str]]]:
    """Count indices checked and return the smallest failing (index, value, label)."""
    n_max = len(residues)
    checked = 0
    worst: Optional[Tuple[int, int, str]] = None
    for label, step, begin in progressions:
        idx = np.arange(begin, n_max, step, dtype=np.int64)
        if bound is not None:
            idx = idx[:bound]
        checked += len(idx)
        bad = idx[residues[idx] != claimed]
        if len(bad) and (worst is None or int(bad[0]) < worst[0]):
            worst = (int(bad[0]), int(residues[bad[0]]), label)
    return checked, worst


def verify_thm12_families(
    p: int, alpha_max: int, bound: Optional[int] = None, trunc: Optional[int] = None
) -> VerificationReport:
    """
    Both vanishing families mod 4 for an eligible prime p and alpha <= alpha_max.

    Every index below the truncation is checked, capped at ``bound`` terms per
    progression when given.

    Raises:
        TruncationError: some progression for alpha <= alpha_max starts at or
            beyond the truncation, or has fewer than ``bound`` indices below it.
    """
    _require_eligible(p)
    start = time.perf_counter()
    n = trunc or get_settings().max_trunc
    progressions = []
    for alpha in range(alpha_max + 1):
        for label, step, begin in family_progressions(p, alpha):
            _require_reach(f"alpha={alpha} progression {label}", step, begin, n, bound)
            progressions.append((label, step, begin))
    residues = bprime_residues(5, n, 4).array
    checked, worst = _scan_progressions(residues, progressions, bound)
    report_id = f"families-p{p}"
    anchor = f"b'_5 vanishes mod 4 on the families for p={p}"
    if worst is not None:
        return _log(
            _fail(report_id, n, worst[0], worst[1], 0, 4, start, anchor,
                  f"progression {worst[2]} fails at b'_5({worst[0]})")
        )
    return _log(
        VerificationReport(
            id=report_id,
            order_checked=n,
            status="pass",
            modulus=4,
            elapsed_ms=_elapsed_ms(start),
            anchor=anchor,
            detail=f"{checked} indices below {n} across {len(progressions)} progressions, alpha <= {alpha_max}",
        )
    )


def verify_inftystep(
    p: int, alpha: int, bound: Optional[int] = None, trunc: Optional[int] = None
) -> VerificationReport:
    """
    The step congruences behind the families, modulo 4:

    sum b'_5(4 p^{2a} n + (17 p^{2a}+1)/6) q^n = 2 p^a f4^3 f5 and
    sum b'_5(4 p^{2a+1} n + (17 p^{2a+2}+1)/6) q^n = 2 p^{a+1} f_{4p}^3 f_{5p}.

    Raises:
        TruncationError: either form starts at or beyond the truncation, or
            has fewer than ``bound`` indices below it.
    """
    _require_eligible(p)
    start = time.perf_counter()
    n = trunc or get_settings().max_trunc
    q2a = p ** (2 * alpha)
    forms = [
        (4 * q2a, _offset(17 * q2a + 1), 2 * p**alpha, 1),
        (4 * q2a * p, _offset(17 * q2a * p * p + 1), 2 * p ** (alpha + 1), p),
    ]
    for step, begin, _, _ in forms:
        _require_reach(f"alpha={alpha} step form {step}n+{begin}", step, begin, n, bound)
    residues = bprime_residues(5, n, 4).array
    report_id = f"inftystep-p{p}-a{alpha}"
    anchor = f"step congruences mod 4 for p={p}, alpha={alpha}"
    checked = 0
    for step, begin, factor, stretch in forms:
        idx = np.arange(begin, n, step, dtype=np.int64)
        if bound is not None:
            idx = idx[:bound]
        product = QProduct.from_tuples([(4 * stretch, 4 * stretch, 3), (5 * stretch, 5 * stretch, 1)])
        rhs = scale(expand_qproduct(product, len(idx), 4), factor).array
        bad = np.flatnonzero(residues[idx] != rhs)
        checked += len(idx)
        if len(bad):
            i = int(bad[0])
            return _log(
                _fail(report_id, n, int(idx[i]), int(residues[idx[i]]), int(rhs[i]), 4, start, anchor,
                      f"coefficient of q^{i} differs in the form with step {step}")
            )
    return _log(
        VerificationReport(
            id=report_id,
            order_checked=n,
            status="pass",
            modulus=4,
            elapsed_ms=_elapsed_ms(start),
            anchor=anchor,
            detail=f"{checked} coefficients below b'_5 index {n} match",
        )
    )


def eligibility_solutions(p: int) -> List[Tuple[int, int]]:
    """(k, m) with 0 <= k < p, |m| <= (p-1)/2 and 3(4k+2)^2 + 5(6m+1)^2 = 0 mod p."""
    half = (p - 1) // 2
    return [
        (k, m)
        for k in range(p)
        for m in range(-half, half + 1)
        if (3 * (4 * k + 2) ** 2 + 5 * (6 * m + 1) ** 2) % p == 0
    ]


def verify_eligibility_solutions(p: int) -> VerificationReport:
    """
    For an eligible p, the exponent congruence has the single solution
    k = (p-1)/2, m = (+-p-1)/6, and agrees with its unscaled form everywhere.
    """
    _require_eligible(p)
    start = time.perf_counter()
    half = (p - 1) // 2
    expected = [(half, f1_distinguished_k(p))]
    report_id = f"eligibility-p{p}"
    anchor = f"unique solution of the exponent congruence for p={p}"
    target = 17 * (p * p - 1) // 24
    for k in range(p):
        for m in range(-half, half + 1):
            unscaled = (2 * k * (k + 1) + 5 * (3 * m * m + m) // 2 - target) % p == 0
            scaled = (3 * (4 * k + 2) ** 2 + 5 * (6 * m + 1) ** 2) % p == 0
            if unscaled != scaled:
                return _log(_fail(report_id, p, k, int(unscaled), int(scaled), p, start, anchor,
                             f"the two forms disagree at k={k}, m={m}"))
    found = eligibility_solutions(p)
    if found != expected:
        witness = found[0][0] if found else half
        return _log(_fail(report_id, p, witness, len(found), 1, p, start, anchor,
                     f"solutions {found}, expected {expected}"))
    return _log(
        VerificationReport(
            id=report_id,
            order_checked=p,
            status="pass",
            modulus=p,
            elapsed_ms=_elapsed_ms(start),
            anchor=anchor,
            detail=f"only (k, m) = {expected[0]}",
        )
    )


# ----------------------------------------------------------------------
# Internal congruence mod 5
# ----------------------------------------------------------------------


def verify_internal_congruence(
    alpha_max: int, bound: Optional[int] = None, trunc: Optional[int] = None
) -> VerificationReport:
    """
    b'_5(5n+1) = b'_5(5^{2a+1} n + (5^{2a+1}+1)/6) mod 5 for a <= alpha_max.

    Raises:
        TruncationError: the progression for some alpha starts at or beyond
            the truncation, or has fewer than ``bound`` indices below it.
    """
    start = time.perf_counter()
    n = trunc or get_settings().max_trunc
    steps = [(alpha, 5 ** (2 * alpha + 1)) for alpha in range(alpha_max + 1)]
    for alpha, step in steps:
        begin = _offset(step + 1)
        _require_reach(f"alpha={alpha} progression {step}n+{begin}", step, begin, n, bound)
    residues = bprime_residues(5, n, 5).array
    checked = 0
    for alpha, step in steps:
        begin = _offset(step + 1)
        count = (n - 1 - begin) // step + 1
        if bound is not None:
            count = bound
        ns = np.arange(count, dtype=np.int64)
        lhs = residues[5 * ns + 1]
        rhs = residues[step * ns + begin]
        bad = np.flatnonzero(lhs != rhs)
        checked += count
        if len(bad):
            i = int(bad[0])
            return _log(
                _fail("internal", n, step * i + begin, int(lhs[i]), int(rhs[i]), 5, start,
                      "b'_5(5n+1) = b'_5(5^(2a+1)n + (5^(2a+1)+1)/6) mod 5",
                      f"alpha={alpha} fails at n={i}")
            )
    return _log(
        VerificationReport(
            id="internal",
            order_checked=n,
            status="pass",
            modulus=5,
            elapsed_ms=_elapsed_ms(start),
            anchor="b'_5(5n+1) = b'_5(5^(2a+1)n + (5^(2a+1)+1)/6) mod 5",
            detail=f"{checked} pairs for alpha <= {alpha_max}, all indices below {n}",
        )
    )


# ----------------------------------------------------------------------
# Parity congruences for general ell
# ----------------------------------------------------------------------


def verify_cuigu(ell: int, bound: int) -> VerificationReport:
    """
    b'_ell(ell n + (ell^2-1)/24) = b_ell(n) mod 2 for a prime ell >= 5 and n < bound.

    Witnesses are b'_ell indices ell n + (ell^2-1)/24, and order_checked is one
    past the largest index examined.
    """
    if ell < 5 or not isprime(ell):
        raise IneligiblePrimeError(f"ell={ell} must be a prime >= 5")
    start = time.perf_counter()
    offset = (ell * ell - 1) // 24
    order = ell * (bound - 1) + offset + 1
    lhs = bprime_residues(ell, order, 2).array[ell * np.arange(bound, dtype=np.int64) + offset]
    rhs = bregular_table(ell, bound - 1, modulus=2)
    report_id = f"cuigu-ell{ell}"
    anchor = f"b'_{ell}({ell}n+{offset}) = b_{ell}(n) mod 2"
    bad = np.flatnonzero(lhs != rhs)
    if len(bad):
        i = int(bad[0])
        return _log(_fail(report_id, order, ell * i + offset, int(lhs[i]), int(rhs[i]), 2, start,
                          anchor, f"parities differ at n={i}"))
    return _log(
        VerificationReport(
            id=report_id,
            order_checked=order,
            status="pass",
            modulus=2,
            elapsed_ms=_elapsed_ms(start),
            anchor=anchor,
            detail=f"holds for 0 <= n < {bound}",
        )
    )


def sellers_residues(ell: int) -> List[int]:
    """r in [1, ell-1] with 24r+1 a quadratic nonresidue mod ell."""
    return [r for r in range(1, ell) if legendre(24 * r + 1, ell) == -1]


def verify_sellers(ell: int, bound: int) -> VerificationReport:
    """b'_ell(ell n + r) is even whenever 24r+1 is a nonresidue mod the prime ell >= 3."""
    if ell < 3 or not isprime(ell):
        raise IneligiblePrimeError(f"ell={ell} must be an odd prime")
    start = time.perf_counter()
    residues = sellers_residues(ell)
    report_id = f"sellers-ell{ell}"
    anchor = f"b'_{ell}({ell}n+r) = 0 mod 2 when 24r+1 is a nonresidue mod {ell}"
    if not residues:
        return _log(
            VerificationReport(
                id=report_id,
                order_checked=ell * bound,
                status="pass",
                modulus=2,
                elapsed_ms=_elapsed_ms(start),
                anchor=anchor,
                detail=f"no r in [1, {ell - 1}] makes 24r+1 a nonresidue; nothing to check",
            )
        )
    order = ell * bound
    stream = bprime_residues(ell, order, 2).array
    progressions = [(f"{ell}n+{r}", ell, r) for r in residues]
    checked, worst = _scan_progressions(stream, progressions, bound)
    if worst is not None:
        return _log(_fail(report_id, order, worst[0], worst[1], 0, 2, start, anchor,
                          f"progression {worst[2]} fails at b'_{ell}({worst[0]})"))
    return _log(
        VerificationReport(
            id=report_id,
            order_checked=order,
            status="pass",
            modulus=2,
            elapsed_ms=_elapsed_ms(start),
            anchor=anchor,
            detail=f"r in {residues}, {checked} indices",
        )
    )
