"""
Models for the identity registry file.

An entry is either an identity (two expression sides and an optional modulus)
or an arithmetic-progression congruence handed to the congruence verifier.
"""

from typing import Any, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from src.models.series_models import APAssertion


class IdentityEntry(BaseModel):
    """One registry entry."""

    id: str = Field(..., min_length=1, description="Unique short key")
    kind: Literal["identity", "ap-congruence"] = Field(default="identity")
    lhs: Optional[Any] = Field(default=None, description="Left side: text or JSON expression tree")
    rhs: Optional[Any] = Field(default=None, description="Right side: text or JSON expression tree")
    modulus: Optional[int] = Field(default=None, ge=2, description="Compare modulo M when set")
    anchor: str = Field(default="", description="What the entry states")
    assertion: Optional[APAssertion] = Field(default=None, description="Congruence claim")

    model_config = {
        "json_schema_extra": {
            "example": {
                "id": "exact1",
                "kind": "identity",
                "lhs": "bprime(5)[5n+1]",
                "rhs": "f2 f5^3 / (f1^3 f10)",
                "anchor": "generating function of b'_5(5n+1)",
            }
        }
    }

    @model_validator(mode="after")
    def validate_kind(self) -> "IdentityEntry":
        if self.kind == "identity":
            if self.lhs is None or self.rhs is None:
                raise ValueError(f"identity {self.id!r} needs both lhs and rhs")
        elif self.assertion is None:
            raise ValueError(f"ap-congruence {self.id!r} needs an assertion")
        return self


class RegistryFile(BaseModel):
    """The registry document: a version tag and a list of entries with unique ids."""

    version: int = Field(default=1, ge=1)
    entries: List[IdentityEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_unique_ids(self) -> "RegistryFile":
        seen = set()
        for entry in self.entries:
            if entry.id in seen:
                raise ValueError(f"duplicate identity id {entry.id!r}")
            seen.add(entry.id)
        return self
