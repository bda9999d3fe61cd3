"""
Expansion of q-product building blocks into truncated series.

Pochhammer products (q^a; q^b)_inf^e, their negated-base variants, eta-quotients,
the theta specializations f(-q^A, -q^B), the Rogers-Ramanujan quotient R(q)
and the individual summands of the p-dissections of (q;q)_inf and (q;q)_inf^3.

Products with a == b are built from the sparse Euler and Jacobi series and
then stretched with ``substitute_power``; every other factor is multiplied
out directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional

import numpy as np
import structlog
from sympy import isprime

from src.config.settings import get_settings
from src.models.series_models import EtaQuotient, QFactor, QProduct
from src.services.exceptions import ExpressionError, IneligiblePrimeError, TruncationError
from src.services.series import (
    TruncatedSeries,
    divide,
    invert,
    make_series,
    mul,
    one,
    power,
    scale,
    shift,
    substitute_power,
)


logger = structlog.get_logger()


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def _check_trunc(trunc: int) -> None:
    if trunc < 1:
        raise TruncationError(f"truncation order must be positive, got {trunc}")
    cap = get_settings().max_trunc
    if trunc > cap:
        raise TruncationError(f"truncation order {trunc} exceeds the configured cap {cap}")


# ----------------------------------------------------------------------
# Sparse classical series
# ----------------------------------------------------------------------


def pentagonal_series(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """(q;q)_inf as sum_k (-1)^k q^{k(3k-1)/2} over all integers k."""
    _check_trunc(trunc)
    coeffs = [0] * trunc
    coeffs[0] = 1
    k = 1
    while k * (3 * k - 1) // 2 < trunc:
        s = _sign(k)
        coeffs[k * (3 * k - 1) // 2] += s
        upper = k * (3 * k + 1) // 2
        if upper < trunc:
            coeffs[upper] += s
        k += 1
    return make_series(coeffs, trunc, modulus)


def jacobi_cube_series(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """(q;q)_inf^3 as sum_{n>=0} (-1)^n (2n+1) q^{n(n+1)/2}."""
    _check_trunc(trunc)
    coeffs = [0] * trunc
    n = 0
    while n * (n + 1) // 2 < trunc:
        coeffs[n * (n + 1) // 2] = _sign(n) * (2 * n + 1)
        n += 1
    return make_series(coeffs, trunc, modulus)


def _euler_power(p: int, trunc: int, modulus: Optional[int]) -> TruncatedSeries:
    """(q;q)_inf^p for p >= 1, built from cubes and pentagonal factors."""
    result = one(trunc, modulus)
    if p // 3:
        result = power(jacobi_cube_series(trunc, modulus), p // 3)
    if p % 3:
        result = mul(result, power(pentagonal_series(trunc, modulus), p % 3))
    return result


def _sparse_euler_pieces(b: int, p: int, trunc: int, modulus: Optional[int]) -> Iterator[TruncatedSeries]:
    """Sparse series whose product is (q^b;q^b)_inf^p."""
    length = -(-trunc // b)
    for _ in range(p // 3):
        yield substitute_power(jacobi_cube_series(length, modulus), b).truncate(trunc)
    for _ in range(p % 3):
        yield substitute_power(pentagonal_series(length, modulus), b).truncate(trunc)


# ----------------------------------------------------------------------
# Pochhammer products
# ----------------------------------------------------------------------


def _dense_product(a: int, b: int, trunc: int, modulus: Optional[int]) -> TruncatedSeries:
    """prod_{k>=0} (1 - q^{a+kb}) multiplied out factor by factor."""
    out = np.zeros(trunc, dtype=object if modulus is None else np.int64)
    out[0] = 1
    for m in range(a, trunc, b):
        out[m:] = out[m:] - out[: trunc - m]
        if modulus is not None:
            out[m:] %= modulus
    return TruncatedSeries(out, modulus)


def pochhammer(
    a: int,
    b: int,
    e: int,
    trunc: int,
    modulus: Optional[int] = None,
    *,
    negated: bool = False,
    dense: bool = False,
) -> TruncatedSeries:
    """
    Expand (q^a; q^b)_inf^e, or (-q^a; q^b)_inf^e when ``negated`` is set.

    Args:
        a: Exponent of the base monomial, at least 1.
        b: Step of the product, at least 1.
        e: Integer power; negative powers invert the positive power once.
        trunc: Truncation order of the result.
        modulus: Reduce coefficients modulo this value when given.
        negated: Use the base -q^a, expanded as (q^{2a};q^{2b}) / (q^a;q^b).
        dense: Force the factor-by-factor product even when a == b.

    Returns:
        TruncatedSeries: The expansion to ``trunc`` coefficients.
    """
    if a < 1 or b < 1:
        raise ValueError(f"Pochhammer parameters must be positive, got a={a}, b={b}")
    _check_trunc(trunc)
    if e == 0:
        return one(trunc, modulus)
    if negated:
        return mul(
            pochhammer(2 * a, 2 * b, e, trunc, modulus, dense=dense),
            pochhammer(a, b, -e, trunc, modulus, dense=dense),
        )

    if a == b and not dense:
        length = -(-trunc // b)
        base = _euler_power(abs(e), length, modulus)
        if e < 0:
            base = invert(base)
        return substitute_power(base, b).truncate(trunc)

    base = power(_dense_product(a, b, trunc, modulus), abs(e))
    return invert(base) if e < 0 else base


def _plain_factors(product: QProduct) -> List[QFactor]:
    """Rewrite negated bases as (q^{2a};q^{2b})^e (q^a;q^b)^{-e}."""
    plain = []
    for f in product.factors:
        if f.e == 0:
            continue
        if f.negated:
            plain.append(QFactor(a=2 * f.a, b=2 * f.b, e=f.e))
            plain.append(QFactor(a=f.a, b=f.b, e=-f.e))
        else:
            plain.append(f)
    return plain


def expand_qproduct(
    product: QProduct, trunc: int, modulus: Optional[int] = None
) -> TruncatedSeries:
    """
    Expand a product of Pochhammer factors.

    Numerator factors are multiplied in. In exact mode each denominator factor
    is divided out through the sparse recurrence; in modular mode it is
    inverted at reduced length and multiplied in.
    """
    _check_trunc(trunc)
    result = one(trunc, modulus)
    denominators = []
    for f in _plain_factors(product):
        if f.e > 0 or modulus is not None:
            result = mul(result, pochhammer(f.a, f.b, f.e, trunc, modulus))
        else:
            denominators.append(f)

    for f in denominators:
        if f.a == f.b:
            for piece in _sparse_euler_pieces(f.b, -f.e, trunc, modulus):
                result = divide(result, piece)
        else:
            result = divide(result, pochhammer(f.a, f.b, -f.e, trunc, modulus))

    logger.debug(
        "qproduct_expanded",
        product=product.describe(),
        trunc=trunc,
        mode="exact" if modulus is None else f"mod {modulus}",
    )
    return result


# ----------------------------------------------------------------------
# Theta functions and the Rogers-Ramanujan quotient
# ----------------------------------------------------------------------


def theta_f(A: int, B: int, trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """f(-q^A, -q^B) = (q^A;q^{A+B})(q^B;q^{A+B})(q^{A+B};q^{A+B}) by the triple product."""
    if A < 1 or B < 1:
        raise ValueError(f"theta arguments must be positive, got A={A}, B={B}")
    s = A + B
    return expand_qproduct(QProduct.from_tuples([(A, s, 1), (B, s, 1), (s, s, 1)]), trunc, modulus)


def bilateral_theta(A: int, B: int, trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """f(-q^A, -q^B) summed directly: sum_k (-1)^k q^{A k(k+1)/2 + B k(k-1)/2}."""
    if A < 1 or B < 1:
        raise ValueError(f"theta arguments must be positive, got A={A}, B={B}")
    _check_trunc(trunc)
    coeffs = [0] * trunc
    for direction, start in ((1, 0), (-1, 1)):
        k = start
        while True:
            j = direction * k
            exponent = (A * j * (j + 1) + B * j * (j - 1)) // 2
            if exponent >= trunc:
                break
            coeffs[exponent] += _sign(k)
            k += 1
    return make_series(coeffs, trunc, modulus)


RR_QUOTIENT = QProduct.from_tuples([(1, 5, 1), (4, 5, 1), (2, 5, -1), (3, 5, -1)])


def rr_quotient(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """R(q) = (q;q^5)(q^4;q^5) / ((q^2;q^5)(q^3;q^5))."""
    return expand_qproduct(RR_QUOTIENT, trunc, modulus)


# ----------------------------------------------------------------------
# Eta-quotients
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class EtaExpansion:
    """q^E * S(q) with E = sum delta r_delta / 24 kept as an exact rational."""

    prefactor_exponent: Fraction
    series: TruncatedSeries
    combined: Optional[TruncatedSeries] = None

    def require_combined(self) -> TruncatedSeries:
        if self.combined is None:
            raise ExpressionError(
                f"prefactor q^({self.prefactor_exponent}) is not integral; no integral series exists"
            )
        return self.combined


def expand_eta_quotient(
    quotient: EtaQuotient, trunc: int, modulus: Optional[int] = None
) -> EtaExpansion:
    """Expand prod eta(delta z)^{r_delta}; the combined series is q^E S(q) when E is integral."""
    exponent = quotient.prefactor_exponent()
    if exponent.denominator == 1 and exponent < 0:
        raise ExpressionError(f"eta-quotient has a pole q^({exponent}) at infinity")
    series = expand_qproduct(quotient.to_qproduct(), trunc, modulus)
    combined = None
    if exponent.denominator == 1:
        combined = shift(series, int(exponent)).truncate(trunc)
    return EtaExpansion(prefactor_exponent=exponent, series=series, combined=combined)


# ----------------------------------------------------------------------
# p-dissection summands
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class DissectionTerm:
    """One summand of a p-dissection together with the residue class it should occupy."""

    label: str
    residue: int
    series: TruncatedSeries
    distinguished: bool = False


def _require_prime(p: int, minimum: int) -> None:
    if p < minimum or not isprime(p):
        raise IneligiblePrimeError(f"p={p} must be a prime >= {minimum}")


def f1_distinguished_k(p: int) -> int:
    """The k in [-(p-1)/2, (p-1)/2] with k = (+-p - 1)/6."""
    return (p - 1) // 6 if p % 6 == 1 else (-p - 1) // 6


def pdissection_terms_f1(p: int, trunc: int, modulus: Optional[int] = None) -> List[DissectionTerm]:
    """
    Summands of the p-dissection of (q;q)_inf for a prime p >= 5.

    The distinguished summand is (-1)^k0 q^{(p^2-1)/24} (q^{p^2};q^{p^2});
    every other k contributes (-1)^k q^{(3k^2+k)/2} f(-q^X, -q^Y) with
    X, Y = (3p^2 +- (6k+1)p)/2.
    """
    _require_prime(p, 5)
    _check_trunc(trunc)
    k0 = f1_distinguished_k(p)
    half = (p - 1) // 2
    c = (p * p - 1) // 24
    terms = [
        DissectionTerm(
            label=f"(-1)^{k0} q^{c} f_{p * p}",
            residue=c % p,
            series=scale(shift(pochhammer(p * p, p * p, 1, trunc, modulus), c).truncate(trunc), _sign(k0)),
            distinguished=True,
        )
    ]
    for k in range(-half, half + 1):
        if k == k0:
            continue
        x = (3 * p * p + (6 * k + 1) * p) // 2
        y = (3 * p * p - (6 * k + 1) * p) // 2
        s = (3 * k * k + k) // 2
        theta = theta_f(x, y, trunc, modulus)
        terms.append(
            DissectionTerm(
                label=f"(-1)^{k} q^{s} f(-q^{x},-q^{y})",
                residue=s % p,
                series=scale(shift(theta, s).truncate(trunc), _sign(k)),
            )
        )
    return terms


def pdissection_terms_f1_cubed(
    p: int, trunc: int, modulus: Optional[int] = None
) -> List[DissectionTerm]:
    """
    Summands of the p-dissection of (q;q)_inf^3 for a prime p >= 3.

    For k != (p-1)/2 the summand is
    (-1)^k q^{k(k+1)/2} sum_n (-1)^n (2pn+2k+1) q^{pn(pn+2k+1)/2};
    the remaining class collapses to p (-1)^{(p-1)/2} q^{(p^2-1)/8} f_{p^2}^3.
    """
    _require_prime(p, 3)
    _check_trunc(trunc)
    kd = (p - 1) // 2
    c = (p * p - 1) // 8
    distinguished = shift(pochhammer(p * p, p * p, 3, trunc, modulus), c).truncate(trunc)
    terms = [
        DissectionTerm(
            label=f"{p}(-1)^{kd} q^{c} f_{p * p}^3",
            residue=c % p,
            series=scale(distinguished, p * _sign(kd)),
            distinguished=True,
        )
    ]
    for k in range(p):
        if k == kd:
            continue
        base = k * (k + 1) // 2
        coeffs = [0] * trunc
        n = 0
        while base + p * n * (p * n + 2 * k + 1) // 2 < trunc:
            coeffs[base + p * n * (p * n + 2 * k + 1) // 2] = _sign(k + n) * (2 * p * n + 2 * k + 1)
            n += 1
        terms.append(
            DissectionTerm(
                label=f"(-1)^{k} q^{base} sum_n (-1)^n (2{p}n+{2 * k + 1}) q^(...)",
                residue=base % p,
                series=make_series(coeffs, trunc, modulus),
            )
        )
    return terms
