"""
Unit tests for Pydantic models.

These tests cover validation of q-series inputs, report invariants and the
JSON round trip of run manifests.
"""

from fractions import Fraction

import pytest
from pydantic import ValidationError

from src.models.registry_models import IdentityEntry, RegistryFile
from src.models.report_models import (
    DensityCheckpoint,
    DensityReport,
    ModularFormProfile,
    RunManifest,
    VerificationReport,
)
from src.models.series_models import (
    APAssertion,
    CuspClass,
    EtaQuotient,
    LegendreQuery,
    PartitionQuery,
    QFactor,
    QProduct,
)


class TestQProduct:
    """Pochhammer factors and products."""

    def test_factor_label(self):
        """Labels follow the usual notation."""
        assert QFactor(a=1, b=5, e=1).label() == "(q^1;q^5)"
        assert QFactor(a=2, b=2, e=-3, negated=True).label() == "(-q^2;q^2)^-3"

    def test_factor_bounds(self):
        """a and b must be positive."""
        with pytest.raises(ValidationError):
            QFactor(a=0, b=1, e=1)
        with pytest.raises(ValidationError):
            QFactor(a=1, b=0, e=1)

    def test_from_tuples_and_product(self):
        """Products concatenate their factors."""
        left = QProduct.from_tuples([(1, 1, 1)])
        right = QProduct.from_tuples([(2, 2, -1, True)])
        combined = left * right
        assert len(combined.factors) == 2
        assert combined.factors[1].negated

    def test_empty_product(self):
        """The empty product describes itself as 1."""
        assert QProduct().describe() == "1"


class TestEtaQuotient:
    """Eta-quotient validation."""

    def test_divisors_must_divide_level(self):
        """delta = 7 does not divide 60."""
        with pytest.raises(ValidationError):
            EtaQuotient(level=60, exponents={7: 1})

    def test_needs_nonzero_exponent(self):
        """An all-zero exponent map is rejected."""
        with pytest.raises(ValidationError):
            EtaQuotient(level=12, exponents={12: 0})

    def test_from_factors_uses_lcm(self):
        """The default level is the lcm of the deltas."""
        quotient = EtaQuotient.from_factors({12: 5, 60: -1, 5: 0})
        assert quotient.level == 60
        assert quotient.exponents == {12: 5, 60: -1}

    def test_prefactor(self):
        """sum delta r / 24."""
        assert EtaQuotient(level=1, exponents={1: 1}).prefactor_exponent() == Fraction(1, 24)

    def test_string_keys_from_json(self):
        """JSON object keys are coerced to integers."""
        quotient = EtaQuotient.model_validate({"level": 60, "exponents": {"12": 5, "60": -1}})
        assert quotient.exponents == {12: 5, 60: -1}


class TestQueries:
    """Small query models."""

    def test_cusp_coprime(self):
        """c/d needs gcd(c, d) = 1."""
        assert CuspClass(d=6, c=5).d == 6
        with pytest.raises(ValidationError):
            CuspClass(d=6, c=3)

    def test_partition_query(self):
        """ell >= 2 and n >= 0."""
        assert PartitionQuery(ell=5, n=0).variant == "distinct-parts"
        with pytest.raises(ValidationError):
            PartitionQuery(ell=1, n=3)
        with pytest.raises(ValidationError):
            PartitionQuery(ell=5, n=3, variant="overpartitions")

    def test_legendre_query(self):
        """p must be an odd prime."""
        assert LegendreQuery(a=3, p=7).p == 7
        with pytest.raises(ValidationError):
            LegendreQuery(a=3, p=15)


class TestAPAssertion:
    """Arithmetic-progression claims."""

    def test_residue_below_step(self):
        """r < m."""
        with pytest.raises(ValidationError):
            APAssertion(m=5, r=5, modulus=2, bound=10)

    def test_claimed_below_modulus(self):
        """claimed < M."""
        with pytest.raises(ValidationError):
            APAssertion(m=5, r=3, modulus=2, claimed=2, bound=10)

    def test_indices(self):
        """The largest index and the oracle prefix."""
        a = APAssertion(m=20, r=7, modulus=4, bound=2000, oracle_bound=200)
        assert a.max_index() == 20 * 1999 + 7
        assert a.oracle_count() == 200
        assert APAssertion(m=20, r=7, modulus=4, bound=50, oracle_bound=200).oracle_count() == 50


class TestReports:
    """Report invariants."""

    def test_failing_report_needs_witness(self):
        """status=fail without a witness is invalid."""
        with pytest.raises(ValidationError):
            VerificationReport(id="x", order_checked=10, status="fail")

    def test_witness_below_order(self):
        """The witness lies inside the checked range."""
        with pytest.raises(ValidationError):
            VerificationReport(id="x", order_checked=10, status="fail", first_bad_exponent=10)

    def test_density_value_consistent(self):
        """value = count / X."""
        with pytest.raises(ValidationError):
            DensityCheckpoint(x=10, count=5, value=Fraction(1, 3))

    def test_density_counts_monotone(self):
        """Counts cannot decrease with X."""
        with pytest.raises(ValidationError):
            DensityReport(
                modulus=2,
                residue=0,
                checkpoints=[
                    DensityCheckpoint(x=10, count=5, value=Fraction(1, 2)),
                    DensityCheckpoint(x=20, count=4, value=Fraction(1, 5)),
                ],
            )

    def test_fraction_serialization(self):
        """Rationals travel as p/q strings."""
        checkpoint = DensityCheckpoint(x=10_000, count=9949, value=Fraction(9949, 10_000))
        data = checkpoint.model_dump(mode="json")
        assert data["value"] == "9949/10000"
        assert DensityCheckpoint.model_validate(data) == checkpoint

    def test_profile_holomorphic_consistency(self):
        """holomorphic must match the cusp order signs."""
        with pytest.raises(ValidationError):
            ModularFormProfile(
                level=1,
                exponents={1: 1},
                weight=Fraction(1, 2),
                sum_delta=1,
                sum_level_over_delta=1,
                admissible=False,
                cusp_orders={1: Fraction(-1, 24)},
                holomorphic=True,
            )


class TestRunManifest:
    """Aggregated command output."""

    def _reports(self):
        passing = VerificationReport(id="a", order_checked=10, status="pass")
        failing = VerificationReport(
            id="b", order_checked=10, status="fail", first_bad_exponent=3, lhs_coeff=1, rhs_coeff=0
        )
        return passing, failing

    def test_overall_and_exit_code(self):
        """One failure fails the run."""
        passing, failing = self._reports()
        assert RunManifest.build("verify", {}, [passing], "1.0.0").exit_code == 0
        manifest = RunManifest.build("verify", {}, [passing, failing], "1.0.0")
        assert manifest.overall == "fail"
        assert manifest.exit_code == 1

    def test_overall_is_checked(self):
        """A manifest cannot claim pass over a failing report."""
        _, failing = self._reports()
        with pytest.raises(ValidationError):
            RunManifest(command="verify", results=[failing], overall="pass", tool_version="1.0.0")

    def test_json_round_trip(self):
        """Mixed report kinds parse back through the discriminator."""
        passing, _ = self._reports()
        density = DensityReport(
            modulus=2,
            residue=0,
            checkpoints=[DensityCheckpoint(x=4, count=3, value=Fraction(3, 4))],
        )
        manifest = RunManifest.build("density", {"mod": 2}, [passing, density], "1.0.0")
        parsed = RunManifest.model_validate_json(manifest.model_dump_json())
        assert parsed == manifest
        assert isinstance(parsed.results[1], DensityReport)


class TestRegistryModels:
    """Registry entries and files."""

    def test_identity_needs_both_sides(self):
        """An identity without rhs is invalid."""
        with pytest.raises(ValidationError):
            IdentityEntry(id="x", lhs="f1")

    def test_congruence_needs_assertion(self):
        """An ap-congruence carries its claim."""
        with pytest.raises(ValidationError):
            IdentityEntry(id="x", kind="ap-congruence")

    def test_duplicate_ids(self):
        """Ids are unique within a file."""
        entry = {"id": "dup", "lhs": "f1", "rhs": "f1"}
        with pytest.raises(ValidationError):
            RegistryFile(entries=[entry, entry])
