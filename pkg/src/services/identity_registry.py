"""
Identity registry and coefficient-wise verification.

The registry is a JSON file of entries, each an identity ``lhs = rhs``
(optionally modulo M) or an arithmetic-progression congruence. Identities are
checked by expanding both sides to a finite order and comparing coefficients;
a mismatch is reported with the smallest failing exponent.
"""

import fnmatch
import json
import time
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterator, List, Literal, Optional, Tuple, Union

import structlog
from pydantic import ValidationError

from src.config.settings import get_settings
from src.models.registry_models import IdentityEntry, RegistryFile
from src.models.report_models import VerificationReport
from src.services.congruence_verifier import verify_ap
from src.services.exceptions import RegistryError
from src.services.expression import Expr, evaluate, from_json
from src.services.qfactory import (
    DissectionTerm,
    pdissection_terms_f1,
    pdissection_terms_f1_cubed,
    pentagonal_series,
)
from src.services.series import add, compare, power


logger = structlog.get_logger()


def _elapsed_ms(start: float) -> int:
    return int((time.perf_counter() - start) * 1000)


class IdentityRegistry:
    """
    Read-only catalogue of identities and congruences.

    Entries are looked up by id; both expression sides are parsed once and
    reused across verifications.
    """

    def __init__(self, entries: List[IdentityEntry], source: str = "<memory>"):
        try:
            document = RegistryFile(entries=entries)
        except ValidationError as e:
            raise RegistryError(f"invalid registry {source}: {e}") from e
        self.source = source
        self._entries: Dict[str, IdentityEntry] = {e.id: e for e in document.entries}
        self._parsed: Dict[str, Tuple[Expr, Expr]] = {}

    @classmethod
    def load(cls, path: Union[str, Path]) -> "IdentityRegistry":
        """Read and validate a registry file."""
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
            document = RegistryFile.model_validate(raw)
        except OSError as e:
            raise RegistryError(f"cannot read registry {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise RegistryError(f"registry {path} is not valid JSON: {e}") from e
        except ValidationError as e:
            raise RegistryError(f"invalid registry {path}: {e}") from e

        logger.info("registry_loaded", path=str(path), entries=len(document.entries))
        return cls(document.entries, source=str(path))

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, identity_id: object) -> bool:
        return identity_id in self._entries

    def __iter__(self) -> Iterator[IdentityEntry]:
        return iter(self._entries[i] for i in self.ids())

    def get(self, identity_id: str) -> IdentityEntry:
        try:
            return self._entries[identity_id]
        except KeyError:
            raise RegistryError(f"unknown identity id {identity_id!r}", identity_id) from None

    def ids(self, pattern: str = "*") -> List[str]:
        """Sorted ids matching a shell-style glob."""
        return sorted(i for i in self._entries if fnmatch.fnmatchcase(i, pattern))

    def sides(self, entry: IdentityEntry) -> Tuple[Expr, Expr]:
        if entry.id not in self._parsed:
            self._parsed[entry.id] = (from_json(entry.lhs), from_json(entry.rhs))
        return self._parsed[entry.id]

    def verify_entry(
        self,
        entry: IdentityEntry,
        trunc: Optional[int] = None,
        modulus_override: Optional[int] = None,
    ) -> VerificationReport:
        """
        Verify one entry.

        Args:
            entry: The identity or congruence to check.
            trunc: Number of coefficients to compare; defaults to settings.default_order.
            modulus_override: Compare modulo this value instead of the entry's modulus.

        Returns:
            VerificationReport: pass, or fail with the smallest failing exponent.
        """
        if entry.kind == "ap-congruence":
            assertion = entry.assertion.model_copy(update={"id": entry.id, "anchor": entry.anchor})
            if modulus_override is not None:
                assertion = assertion.model_copy(
                    update={"modulus": modulus_override, "claimed": assertion.claimed % modulus_override}
                )
            return verify_ap(assertion)

        n = trunc or get_settings().default_order
        modulus = modulus_override or entry.modulus
        start = time.perf_counter()
        lhs_node, rhs_node = self.sides(entry)
        result = compare(evaluate(lhs_node, n, modulus), evaluate(rhs_node, n, modulus))
        mode = "exactly" if modulus is None else f"mod {modulus}"

        if result.agree:
            report = VerificationReport(
                id=entry.id,
                order_checked=result.compared,
                status="pass",
                modulus=modulus,
                elapsed_ms=_elapsed_ms(start),
                anchor=entry.anchor,
                detail=f"coefficients of q^0..q^{result.compared - 1} agree {mode}",
            )
        else:
            report = VerificationReport(
                id=entry.id,
                order_checked=result.compared,
                status="fail",
                first_bad_exponent=result.first_bad_exponent,
                lhs_coeff=result.lhs_coeff,
                rhs_coeff=result.rhs_coeff,
                modulus=modulus,
                elapsed_ms=_elapsed_ms(start),
                anchor=entry.anchor,
                detail=f"sides differ {mode} at q^{result.first_bad_exponent}",
            )

        logger.info(
            "identity_verified",
            id=entry.id,
            status=report.status,
            order=report.order_checked,
            modulus=modulus,
            witness=report.first_bad_exponent,
            elapsed_ms=report.elapsed_ms,
        )
        return report

    def verify(
        self, identity_id: str, trunc: Optional[int] = None, modulus_override: Optional[int] = None
    ) -> VerificationReport:
        return self.verify_entry(self.get(identity_id), trunc, modulus_override)


@lru_cache()
def _load_cached(path: str) -> IdentityRegistry:
    return IdentityRegistry.load(path)


def get_registry(path: Optional[Union[str, Path]] = None) -> IdentityRegistry:
    """Registry at ``path``, or the configured one; loaded once per path."""
    return _load_cached(str(path or get_settings().registry_path))


def verify_identity(
    identity_id: str, trunc: Optional[int] = None, modulus_override: Optional[int] = None
) -> VerificationReport:
    """Verify a registered identity by id against the configured registry."""
    return get_registry().verify(identity_id, trunc, modulus_override)


# ----------------------------------------------------------------------
# p-dissections
# ----------------------------------------------------------------------


def _first_outside_class(term: DissectionTerm, p: int, residue: int) -> Optional[int]:
    support = term.series.support()
    bad = support[support % p != residue]
    return int(bad[0]) if len(bad) else None


def verify_p_dissection(
    p: int, target: Literal["f1", "f1cubed"] = "f1", trunc: Optional[int] = None
) -> VerificationReport:
    """
    Check the p-dissection of (q;q)_inf (p >= 5) or (q;q)_inf^3 (p >= 3).

    Three checks run in order: the summands add up to the product, the
    distinguished summand lives in the class (p^2-1)/24 (resp. (p^2-1)/8)
    mod p, and every other summand lives in its own class, never that one.
    """
    n = trunc or get_settings().default_order
    start = time.perf_counter()
    if target == "f1":
        terms = pdissection_terms_f1(p, n)
        expected = pentagonal_series(n)
        c = (p * p - 1) // 24 % p
    elif target == "f1cubed":
        terms = pdissection_terms_f1_cubed(p, n)
        expected = power(pentagonal_series(n), 3)
        c = (p * p - 1) // 8 % p
    else:
        raise ValueError(f"unknown dissection target {target!r}")

    report_id = f"pdissect-{target}-p{p}"
    anchor = f"{p}-dissection of (q;q)_inf" + ("^3" if target == "f1cubed" else "")
    total = terms[0].series
    for term in terms[1:]:
        total = add(total, term.series)

    failure: Optional[Tuple[int, str]] = None
    result = compare(total, expected)
    if not result.agree:
        failure = (result.first_bad_exponent, "summands do not add up to the product")

    if failure is None:
        for term in terms:
            if term.distinguished and term.residue != c:
                failure = (0, f"distinguished summand is tagged {term.residue}, expected {c} mod {p}")
            elif not term.distinguished and term.residue == c:
                failure = (0, f"summand {term.label} falls in the distinguished class {c} mod {p}")
            else:
                bad = _first_outside_class(term, p, term.residue)
                if bad is not None:
                    failure = (bad, f"summand {term.label} has q^{bad} outside class {term.residue} mod {p}")
            if failure is not None:
                break

    if failure is None:
        classes = sorted({t.residue for t in terms if not t.distinguished})
        report = VerificationReport(
            id=report_id,
            order_checked=n,
            status="pass",
            elapsed_ms=_elapsed_ms(start),
            anchor=anchor,
            detail=f"{len(terms)} summands; distinguished class {c} mod {p}; other classes {classes}",
        )
    else:
        witness, why = failure
        report = VerificationReport(
            id=report_id,
            order_checked=n,
            status="fail",
            first_bad_exponent=witness,
            lhs_coeff=int(total.array[witness]),
            rhs_coeff=int(expected.array[witness]),
            elapsed_ms=_elapsed_ms(start),
            anchor=anchor,
            detail=why,
        )

    logger.info("p_dissection_verified", p=p, target=target, status=report.status, order=n)
    return report

