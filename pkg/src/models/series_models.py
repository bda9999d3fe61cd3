"""
Pydantic models for the q-series objects the engine expands and checks.

These models validate the structural invariants of q-products, eta-quotients,
congruence assertions and number-theoretic queries before any series work
starts, so that malformed input fails fast with a ValidationError.
"""

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator
from sympy import isprime


class QFactor(BaseModel):
    """One Pochhammer factor (q^a; q^b)_inf^e, or (-q^a; q^b)_inf^e when negated."""

    model_config = {"frozen": True}

    a: int = Field(..., ge=1, description="Exponent of the base monomial q^a")
    b: int = Field(..., ge=1, description="Step of the product, (q^a; q^b)")
    e: int = Field(..., description="Integer power of the factor")
    negated: bool = Field(default=False, description="Base is -q^a instead of q^a")

    def label(self) -> str:
        base = f"-q^{self.a}" if self.negated else f"q^{self.a}"
        power = "" if self.e == 1 else f"^{self.e}"
        return f"({base};q^{self.b}){power}"


class QProduct(BaseModel):
    """A formal product of Pochhammer factors; the empty product is the constant 1."""

    factors: List[QFactor] = Field(default_factory=list, description="Pochhammer factors")

    model_config = {
        "json_schema_extra": {
            "example": {
                "factors": [
                    {"a": 2, "b": 2, "e": 1},
                    {"a": 5, "b": 5, "e": 1},
                    {"a": 1, "b": 1, "e": -1},
                    {"a": 10, "b": 10, "e": -1},
                ]
            }
        }
    }

    @classmethod
    def from_tuples(cls, triples: List[tuple]) -> "QProduct":
        """Build from (a, b, e) or (a, b, e, negated) tuples."""
        factors = []
        for t in triples:
            a, b, e = t[:3]
            negated = bool(t[3]) if len(t) > 3 else False
            factors.append(QFactor(a=a, b=b, e=e, negated=negated))
        return cls(factors=factors)

    def __mul__(self, other: "QProduct") -> "QProduct":
        return QProduct(factors=[*self.factors, *other.factors])

    def describe(self) -> str:
        if not self.factors:
            return "1"
        return "".join(f.label() for f in self.factors)


class EtaQuotient(BaseModel):
    """f(z) = prod over delta | N of eta(delta z)^{r_delta}."""

    level: int = Field(..., ge=1, description="Level N")
    exponents: Dict[int, int] = Field(..., description="Map delta -> r_delta over divisors of N")

    model_config = {
        "json_schema_extra": {
            "example": {"level": 60, "exponents": {"12": 5, "60": -1}}
        }
    }

    @model_validator(mode="after")
    def validate_divisors(self) -> "EtaQuotient":
        for delta in self.exponents:
            if delta < 1 or self.level % delta:
                raise ValueError(f"delta={delta} does not divide level {self.level}")
        if not any(self.exponents.values()):
            raise ValueError("an eta-quotient needs at least one nonzero exponent")
        return self

    @classmethod
    def from_factors(cls, exponents: Dict[int, int], level: Optional[int] = None) -> "EtaQuotient":
        """Build with the smallest level divisible by every delta unless one is given."""
        cleaned = {d: r for d, r in exponents.items() if r}
        if level is None:
            level = reduce(lcm, cleaned.keys(), 1)
        return cls(level=level, exponents=cleaned)

    def nonzero_items(self) -> List[tuple]:
        return sorted((d, r) for d, r in self.exponents.items() if r)

    def prefactor_exponent(self) -> Fraction:
        """Leading power of q: sum delta r_delta / 24."""
        return Fraction(sum(d * r for d, r in self.exponents.items()), 24)

    def to_qproduct(self) -> QProduct:
        return QProduct(factors=[QFactor(a=d, b=d, e=r) for d, r in self.nonzero_items()])

    def describe(self) -> str:
        parts = []
        for d, r in self.nonzero_items():
            parts.append(f"eta({d}z)" + ("" if r == 1 else f"^{r}"))
        return " ".join(parts) + f" [N={self.level}]"


class CuspClass(BaseModel):
    """A cusp c/d of Gamma_0(N), represented by a divisor d of the level."""

    d: int = Field(..., ge=1, description="Denominator, a divisor of the level")
    c: int = Field(default=1, description="Numerator coprime to d")

    @model_validator(mode="after")
    def validate_coprime(self) -> "CuspClass":
        if gcd(self.c, self.d) != 1:
            raise ValueError(f"gcd({self.c}, {self.d}) must be 1")
        return self


class PartitionQuery(BaseModel):
    """A request for one of the restricted partition counts."""

    ell: int = Field(..., ge=2, description="Regularity modulus")
    n: int = Field(..., ge=0, description="Number being partitioned")
    variant: Literal["distinct-parts", "odd-parts", "unrestricted-parts"] = Field(
        default="distinct-parts", description="Which ell-regular family to count"
    )


class LegendreQuery(BaseModel):
    """Arguments of a Legendre symbol (a/p) with p an odd prime."""

    a: int = Field(..., description="Upper argument")
    p: int = Field(..., ge=3, description="Odd prime")

    @field_validator("p")
    @classmethod
    def validate_odd_prime(cls, v: int) -> int:
        if v == 2 or not isprime(v):
            raise ValueError(f"{v} is not an odd prime")
        return v


class APAssertion(BaseModel):
    """The claim a(m n + r) = claimed (mod M) for 0 <= n < bound."""

    id: str = Field(default="", description="Optional identifier used in reports")
    ell: int = Field(default=5, ge=2, description="Regularity modulus of b'_ell")
    m: int = Field(..., ge=1, description="Progression modulus")
    r: int = Field(..., ge=0, description="Progression residue")
    modulus: int = Field(..., ge=1, description="Congruence modulus M")
    claimed: int = Field(default=0, ge=0, description="Claimed residue class")
    bound: int = Field(..., ge=1, description="Number of n values to check")
    oracle_bound: Optional[int] = Field(
        default=None, ge=1, description="n values cross-checked by the oracle; defaults to bound"
    )
    source: Literal["series", "oracle", "both"] = Field(default="series")
    anchor: str = Field(default="", description="Citation of the claim")

    @model_validator(mode="after")
    def validate_residues(self) -> "APAssertion":
        if self.r >= self.m:
            raise ValueError(f"residue r={self.r} must be below m={self.m}")
        if self.claimed >= self.modulus:
            raise ValueError(f"claimed={self.claimed} must be below M={self.modulus}")
        return self

    def max_index(self) -> int:
        return self.m * (self.bound - 1) + self.r

    def oracle_count(self) -> int:
        return min(self.bound, self.oracle_bound or self.bound)
