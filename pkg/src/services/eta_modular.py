"""
Eta-quotient modular form data.

Weight and admissibility sums, the character's upper argument, orders of
vanishing at the cusps c/d of Gamma_0(N), the B_k family with its divisor
table, and the density estimator for coefficient residues.
"""

import time
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import structlog
from sympy import divisors, factorint

from src.models.report_models import (
    DensityCheckpoint,
    DensityReport,
    ModularFormProfile,
    TableRow,
    VerificationReport,
)
from src.models.series_models import CuspClass, EtaQuotient
from src.services.congruence_verifier import bprime_residues, kronecker
from src.services.exceptions import ExpressionError, TruncationError
from src.services.qfactory import expand_eta_quotient
from src.services.series import TruncatedSeries, dissect


logger = structlog.get_logger()

BK_LEVEL = 360

# Divisors of 360 sharing one value of the normalized cusp quantity L.
TABLE_ROWS: Tuple[Tuple[int, ...], ...] = (
    (1, 2, 3, 6, 9, 18),
    (4, 8, 12, 24, 36, 72),
    (5, 10, 15, 30, 45, 90),
    (20, 40, 60, 120, 180, 360),
)


def weight(f: EtaQuotient) -> Fraction:
    return Fraction(sum(f.exponents.values()), 2)


def check_admissibility(f: EtaQuotient) -> Tuple[int, int, bool]:
    """(sum delta r, sum (N/delta) r, both = 0 mod 24 with integral weight)."""
    sum1 = sum(d * r for d, r in f.exponents.items())
    sum2 = sum((f.level // d) * r for d, r in f.exponents.items())
    admissible = sum1 % 24 == 0 and sum2 % 24 == 0 and weight(f).denominator == 1
    return sum1, sum2, admissible


def cusp_order(f: EtaQuotient, cusp: CuspClass) -> Fraction:
    """
    Order of vanishing at the cusp c/d:

    N/24 * sum gcd(d, delta)^2 r_delta / (gcd(d, N/d) d delta).
    Only d matters; c is carried for reporting.
    """
    N, d = f.level, cusp.d
    if N % d:
        raise ExpressionError(f"cusp denominator {d} does not divide the level {N}")
    total = sum(Fraction(gcd(d, delta) ** 2 * r, delta) for delta, r in f.exponents.items())
    return Fraction(N, 24) * total / (gcd(d, N // d) * d)


@dataclass(frozen=True)
class CharacterDiscriminant:
    """(-1)^l prod delta^{r_delta} as a sign and prime exponents, with its square class."""

    sign: int
    factors: Dict[int, int]
    square_class: int

    def value(self) -> Fraction:
        out = Fraction(self.sign)
        for p, e in self.factors.items():
            out *= Fraction(p) ** e
        return out


def character_discriminant(f: EtaQuotient) -> CharacterDiscriminant:
    """
    Upper argument of the character symbol.

    Exponents may be negative; the square class keeps each prime to the power
    e mod 2, which is all the Kronecker symbol depends on.
    """
    w = weight(f)
    if w.denominator != 1:
        raise ExpressionError(f"weight {w} is not integral; the character is undefined")
    factors: Dict[int, int] = {}
    for delta, r in f.exponents.items():
        for p, e in factorint(delta).items():
            factors[int(p)] = factors.get(int(p), 0) + e * r
    factors = {p: e for p, e in sorted(factors.items()) if e}
    sign = -1 if int(w) % 2 else 1
    square_class = sign
    for p, e in factors.items():
        if e % 2:
            square_class *= p
    return CharacterDiscriminant(sign=sign, factors=factors, square_class=square_class)


def evaluate_character(f: EtaQuotient, d: int) -> int:
    """chi(d) for d coprime to the level."""
    if gcd(d, f.level) != 1:
        raise ExpressionError(f"d={d} is not coprime to the level {f.level}")
    return kronecker(character_discriminant(f).square_class, d)


# ----------------------------------------------------------------------
# The B_k family
# ----------------------------------------------------------------------


def construct_A() -> EtaQuotient:
    """eta(12z)^5 / eta(60z)."""
    return EtaQuotient(level=60, exponents={12: 5, 60: -1})


def construct_Bk(k: int) -> EtaQuotient:
    """eta(12z) eta(30z)^3 / (eta(6z)^3 eta(60z)) * A(z)^{5^k} at level 360."""
    if k < 1:
        raise ExpressionError(f"B_k needs k >= 1, got {k}")
    return EtaQuotient(
        level=BK_LEVEL,
        exponents={6: -3, 12: 5 ** (k + 1) + 1, 30: 3, 60: -(5**k + 1)},
    )


def table_L(k: int, d: int) -> Fraction:
    """Normalized cusp quantity of B_k at the divisor d of 360."""
    g6, g12, g30, g60 = (gcd(d, x) for x in (6, 12, 30, 60))
    return (
        Fraction((5 ** (k + 2) + 5) * g12**2, g60**2)
        + Fraction(6 * g30**2, g60**2)
        - Fraction(30 * g6**2, g60**2)
        - 5**k
        - 1
    )


def table_row_closed_form(k: int, row: int) -> Fraction:
    """Closed form of L on one of the four rows of TABLE_ROWS."""
    if row == 0:
        return Fraction(24 * 5**k - 20)
    if row == 1:
        return Fraction(24 * 5**k - 2)
    head = Fraction(5 ** (k + 2) + 5, 25) - 5**k
    if row == 2:
        return head + Fraction(19, 5)
    if row == 3:
        return head + Fraction(1, 5)
    raise IndexError(f"row must be in 0..3, got {row}")


def cusp_order_to_L_factor(d: int, level: int = BK_LEVEL) -> Fraction:
    """Positive factor with cusp_order(B_k, d) = factor * table_L(k, d)."""
    g60 = gcd(d, 60)
    return Fraction(level * g60**2, 1440 * d * gcd(d, level // d))


def holomorphy_report(f: EtaQuotient, label: str = "", k: Optional[int] = None) -> ModularFormProfile:
    """
    Weight, admissibility, character and cusp orders at every divisor of the
    level. With ``k`` set the quotient is treated as B_k and the divisor
    table is filled in.
    """
    sum1, sum2, admissible = check_admissibility(f)
    w = weight(f)
    orders = {int(d): cusp_order(f, CuspClass(d=int(d))) for d in divisors(f.level)}

    character = {}
    if w.denominator == 1:
        disc = character_discriminant(f)
        character = {
            "character_sign": disc.sign,
            "character_factors": disc.factors,
            "character_square_class": disc.square_class,
        }

    table: Dict[int, Fraction] = {}
    rows: List[TableRow] = []
    if k is not None:
        table = {d: table_L(k, d) for d in orders}
        rows = [
            TableRow(
                divisors=list(row),
                values=[table[d] for d in row],
                closed_form=table_row_closed_form(k, i),
            )
            for i, row in enumerate(TABLE_ROWS)
        ]

    profile = ModularFormProfile(
        id=label or f.describe(),
        level=f.level,
        exponents=dict(f.exponents),
        weight=w,
        sum_delta=sum1,
        sum_level_over_delta=sum2,
        admissible=admissible,
        cusp_orders=orders,
        holomorphic=all(v >= 0 for v in orders.values()),
        table_L=table,
        table_rows=rows,
        **character,
    )
    logger.info(
        "holomorphy_report",
        id=profile.id,
        weight=str(w),
        admissible=admissible,
        holomorphic=profile.holomorphic,
    )
    return profile


def verify_bk_bridge(k: int, trunc: int = 600) -> VerificationReport:
    """
    B_k mod 5^{k+1} lives on exponents 6n+1 and carries b'_5(5n+1) there.

    The witness is the first exponent of the B_k expansion that breaks
    either property.
    """
    start = time.perf_counter()
    modulus = 5 ** (k + 1)
    combined = expand_eta_quotient(construct_Bk(k), trunc, modulus).require_combined()
    arr = combined.array
    report_id = f"bk-bridge-k{k}"
    anchor = f"B_{k} = sum b'_5(5n+1) q^(6n+1) mod {modulus}"

    off_class = np.flatnonzero((arr != 0) & (np.arange(trunc) % 6 != 1))
    carried = dissect(combined, 6, 1).array
    expected = bprime_residues(5, 5 * (len(carried) - 1) + 2, modulus).array[1::5][: len(carried)]
    mismatch = np.flatnonzero(carried != expected)

    witnesses = []
    if len(off_class):
        witnesses.append((int(off_class[0]), int(arr[off_class[0]]), 0))
    if len(mismatch):
        i = int(mismatch[0])
        witnesses.append((6 * i + 1, int(carried[i]), int(expected[i])))
    if witnesses:
        witness, lhs, rhs = min(witnesses)
        return VerificationReport(
            id=report_id,
            order_checked=trunc,
            status="fail",
            first_bad_exponent=witness,
            lhs_coeff=lhs,
            rhs_coeff=rhs,
            modulus=modulus,
            elapsed_ms=int((time.perf_counter() - start) * 1000),
            anchor=anchor,
            detail=f"B_{k} and the b'_5(5n+1) series differ at q^{witness}",
        )
    return VerificationReport(
        id=report_id,
        order_checked=trunc,
        status="pass",
        modulus=modulus,
        elapsed_ms=int((time.perf_counter() - start) * 1000),
        anchor=anchor,
        detail=f"{len(carried)} coefficients on 6n+1, all other exponents vanish",
    )


# ----------------------------------------------------------------------
# Density
# ----------------------------------------------------------------------


def _residue_hits(series: TruncatedSeries, modulus: int, residue: int) -> np.ndarray:
    return (np.asarray(series.array % modulus) == residue).astype(np.int64)


def density(
    series: TruncatedSeries,
    modulus: int,
    residue: int,
    checkpoints: Iterable[int],
    label: str = "density",
) -> DensityReport:
    """
    #{0 <= n < X : a(n) = r mod M} / X at each checkpoint X, as exact rationals.

    Raises:
        TruncationError: a checkpoint exceeds the series truncation.
    """
    if not 0 <= residue < modulus:
        raise ValueError(f"residue {residue} is outside [0, {modulus})")
    if series.modulus is not None and series.modulus % modulus:
        raise ValueError(f"a mod-{series.modulus} series has no residues mod {modulus}")
    xs = sorted(set(checkpoints))
    if not xs or xs[0] < 1:
        raise ValueError("checkpoints must be positive")
    if xs[-1] > series.trunc:
        raise TruncationError(f"checkpoint {xs[-1]} exceeds the series truncation {series.trunc}")

    running = np.cumsum(_residue_hits(series, modulus, residue))
    points = []
    for x in xs:
        count = int(running[x - 1])
        points.append(DensityCheckpoint(x=x, count=count, value=Fraction(count, x)))
    report = DensityReport(id=label, modulus=modulus, residue=residue, checkpoints=points)
    logger.info(
        "density_computed",
        id=label,
        modulus=modulus,
        residue=residue,
        values={p.x: str(p.value) for p in points},
    )
    return report


def recount_density(series: TruncatedSeries, report: DensityReport) -> bool:
    """Recount each checkpoint directly from the residue stream."""
    hits = _residue_hits(series, report.modulus, report.residue)
    return all(int(hits[: c.x].sum()) == c.count for c in report.checkpoints)
