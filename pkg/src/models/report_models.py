"""
Report models produced by verification runs.

Every report serializes to JSON and parses back to an equal object; exact
rationals travel as "p/q" strings.
"""

from datetime import datetime, timezone
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, BeforeValidator, Field, PlainSerializer, model_validator


def _to_fraction(v: Any) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, str)):
        return Fraction(v)
    raise ValueError(f"cannot read {v!r} as an exact rational")


Rational = Annotated[Fraction, BeforeValidator(_to_fraction), PlainSerializer(str, return_type=str)]


class VerificationReport(BaseModel):
    """Outcome of checking one identity or congruence to a finite order."""

    kind: Literal["verification"] = "verification"
    id: str = Field(..., description="Identity or assertion id")
    order_checked: int = Field(..., ge=0, description="Number of coefficients compared")
    status: Literal["pass", "fail"] = Field(..., description="Verification status")
    first_bad_exponent: Optional[int] = Field(default=None, description="Smallest failing index")
    lhs_coeff: Optional[int] = Field(default=None, description="Left side at the witness")
    rhs_coeff: Optional[int] = Field(default=None, description="Right side at the witness")
    modulus: Optional[int] = Field(default=None, description="Modulus of the comparison")
    elapsed_ms: int = Field(default=0, ge=0, description="Wall time in milliseconds")
    anchor: str = Field(default="", description="Citation of the checked statement")
    detail: str = Field(default="", description="Verified range or failure explanation")

    model_config = {
        "json_schema_extra": {
            "example": {
                "kind": "verification",
                "id": "exact1",
                "order_checked": 500,
                "status": "pass",
                "elapsed_ms": 85,
                "anchor": "generating function of b'_5(5n+1)",
            }
        }
    }

    @model_validator(mode="after")
    def validate_witness(self) -> "VerificationReport":
        if self.status == "fail":
            if self.first_bad_exponent is None:
                raise ValueError("a failing report must carry a witness exponent")
            if not 0 <= self.first_bad_exponent < self.order_checked:
                raise ValueError("the witness must lie below order_checked")
        return self

    @property
    def passed(self) -> bool:
        return self.status == "pass"


class DensityCheckpoint(BaseModel):
    x: int = Field(..., ge=1, description="Checkpoint X")
    count: int = Field(..., ge=0, description="#{0 <= n < X : a(n) = r (mod M)}")
    value: Rational = Field(..., description="count / X")

    model_config = {"arbitrary_types_allowed": True}

    @model_validator(mode="after")
    def validate_value(self) -> "DensityCheckpoint":
        if self.count > self.x or self.value != Fraction(self.count, self.x):
            raise ValueError("density value must equal count / X with count <= X")
        return self


class DensityReport(BaseModel):
    """delta_r(F, M; X) at a list of checkpoints. Informational only."""

    kind: Literal["density"] = "density"
    id: str = Field(default="density", description="Label of the sampled series")
    modulus: int = Field(..., ge=1)
    residue: int = Field(..., ge=0)
    checkpoints: List[DensityCheckpoint] = Field(default_factory=list)
    convention: str = Field(
        default="counts indices 0 <= n < X and divides by X",
        description="Boundary convention of the count",
    )

    @model_validator(mode="after")
    def validate_monotone(self) -> "DensityReport":
        ordered = sorted(self.checkpoints, key=lambda c: c.x)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.count < prev.count:
                raise ValueError("counts must be nondecreasing in X")
        return self

    @property
    def passed(self) -> bool:
        return True


class TableRow(BaseModel):
    """One row of the B_k divisor table: divisors sharing one L value."""

    divisors: List[int]
    values: List[Rational] = Field(..., description="L at each divisor, in order")
    closed_form: Rational = Field(..., description="The row's closed form at this k")

    model_config = {"arbitrary_types_allowed": True}

    @property
    def matches(self) -> bool:
        return all(v == self.closed_form for v in self.values)


class ModularFormProfile(BaseModel):
    """Theorem-level data of an eta-quotient: weight, character, cusp orders."""

    kind: Literal["modular-profile"] = "modular-profile"
    id: str = Field(default="", description="Label, e.g. B_1")
    level: int = Field(..., ge=1)
    exponents: Dict[int, int]
    weight: Rational
    sum_delta: int = Field(..., description="sum delta r_delta")
    sum_level_over_delta: int = Field(..., description="sum (N/delta) r_delta")
    admissible: bool
    character_sign: int = Field(default=1, description="Sign of (-1)^l prod delta^r")
    character_factors: Dict[int, int] = Field(
        default_factory=dict, description="Prime exponents of prod delta^r_delta"
    )
    character_square_class: Optional[int] = Field(
        default=None, description="Squarefree representative of the upper argument"
    )
    cusp_orders: Dict[int, Rational] = Field(default_factory=dict)
    holomorphic: bool
    table_L: Dict[int, Rational] = Field(default_factory=dict)
    table_rows: List[TableRow] = Field(default_factory=list)

    model_config = {"arbitrary_types_allowed": True}

    @model_validator(mode="after")
    def validate_consistency(self) -> "ModularFormProfile":
        if self.admissible and self.weight.denominator != 1:
            raise ValueError("an admissible quotient must have integral weight")
        if self.cusp_orders and self.holomorphic != all(v >= 0 for v in self.cusp_orders.values()):
            raise ValueError("holomorphic must agree with the signs of the cusp orders")
        return self

    @property
    def passed(self) -> bool:
        return self.admissible and self.holomorphic and all(r.matches for r in self.table_rows)


Report = Annotated[
    Union[VerificationReport, DensityReport, ModularFormProfile], Field(discriminator="kind")
]


class RunManifest(BaseModel):
    """Aggregated outcome of one CLI command."""

    command: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    results: List[Report] = Field(default_factory=list)
    overall: Literal["pass", "fail"]
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    tool_version: str

    @model_validator(mode="after")
    def validate_overall(self) -> "RunManifest":
        expected = "pass" if all(r.passed for r in self.results) else "fail"
        if self.overall != expected:
            raise ValueError(f"overall must be {expected!r} for these results")
        return self

    @classmethod
    def build(
        cls, command: str, parameters: Dict[str, Any], results: List[Any], tool_version: str
    ) -> "RunManifest":
        overall = "pass" if all(r.passed for r in results) else "fail"
        return cls(
            command=command,
            parameters=parameters,
            results=results,
            overall=overall,
            tool_version=tool_version,
        )

    @property
    def exit_code(self) -> int:
        return 0 if self.overall == "pass" else 1
