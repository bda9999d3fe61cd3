"""
Unit tests for the congruence verifier.

The scans run at small truncations here; the full-range runs live in the
slow acceptance suite.
"""

import pytest
from pydantic import ValidationError

from src.models.series_models import APAssertion
from src.services import congruence_verifier
from src.services.congruence_verifier import (
    eligibility_solutions,
    eligible_prime,
    family_progressions,
    kronecker,
    legendre,
    parity_exponents,
    sellers_residues,
    verify_ap,
    verify_cuigu,
    verify_eligibility_solutions,
    verify_inftystep,
    verify_internal_congruence,
    verify_parity_characterization,
    verify_sellers,
    verify_thm12_families,
)
from src.services.exceptions import IneligiblePrimeError, TruncationError
from src.services.partition_oracle import bprime_table


class TestSymbols:
    """Legendre and Kronecker symbols and the eligibility test."""

    def test_legendre(self):
        """Residues, nonresidues and multiples of p."""
        assert legendre(2, 7) == 1
        assert legendre(3, 7) == -1
        assert legendre(14, 7) == 0
        assert legendre(-5, 13) == -1

    def test_legendre_needs_odd_prime(self):
        """p = 9 is rejected at validation."""
        with pytest.raises(ValidationError):
            legendre(2, 9)

    def test_kronecker(self):
        """Kronecker extends Jacobi to even and negative n."""
        assert kronecker(5, 7) == -1
        assert kronecker(5, 11) == 1
        assert kronecker(3, 4) == 1
        assert kronecker(3, 2) == -1
        assert kronecker(2, 8) == 0

    @pytest.mark.parametrize("p", [7, 11, 13])
    def test_eligible(self, p):
        """(3/p) differs from (-5/p)."""
        assert eligible_prime(p)

    def test_seventeen_is_not_eligible(self):
        """(3/17) = (-5/17) = -1."""
        assert not eligible_prime(17)
        with pytest.raises(IneligiblePrimeError):
            verify_thm12_families(17, 0, trunc=1000)

    def test_eligibility_needs_prime(self):
        """Composite and small inputs raise."""
        with pytest.raises(IneligiblePrimeError):
            eligible_prime(9)
        with pytest.raises(IneligiblePrimeError):
            eligible_prime(3)


class TestArithmeticProgressions:
    """verify_ap on single progressions."""

    def test_mod4_progression_passes(self, fresh_cache):
        """b'_5(20n+7) = 0 mod 4 by series and oracle."""
        report = verify_ap(
            APAssertion(id="cong-d5-20n+7", m=20, r=7, modulus=4, bound=300, oracle_bound=100, source="both")
        )
        assert report.passed
        assert report.order_checked == 20 * 299 + 8
        assert "oracle n < 100" in report.detail

    def test_mod8_probe_fails(self, fresh_cache):
        """The same progression is not 0 mod 8: b'_5(7) = 4."""
        report = verify_ap(APAssertion(m=20, r=7, modulus=8, bound=50))
        assert not report.passed
        assert report.first_bad_exponent == 7
        assert report.lhs_coeff == 4
        assert report.rhs_coeff == 0

    def test_oracle_only(self):
        """source=oracle reads the knapsack table alone."""
        report = verify_ap(APAssertion(m=5, r=3, modulus=2, bound=100, source="oracle"))
        assert report.passed
        assert report.order_checked == 5 * 99 + 4

    def test_modulus_one_is_trivial(self):
        """Everything is 0 mod 1."""
        assert verify_ap(APAssertion(m=3, r=1, modulus=1, bound=10)).passed

    def test_truncation_must_cover_bound(self):
        """A truncation below the largest index raises."""
        with pytest.raises(TruncationError):
            verify_ap(APAssertion(m=20, r=7, modulus=4, bound=100), trunc=500)

    def test_default_id(self):
        """Unnamed assertions get a descriptive id."""
        report = verify_ap(APAssertion(m=5, r=4, modulus=2, bound=20))
        assert report.id == "ap-5n+4-mod2"


class TestParity:
    """b'_5(2n+1) is odd exactly on 15k^2 - 5k."""

    def test_exponents(self):
        """Generalized pentagonal-type values below 100."""
        assert parity_exponents(100).tolist() == [0, 10, 20, 50, 70]

    @pytest.mark.parametrize(
        "bound,expected",
        [(11, [0, 10]), (20, [0, 10]), (21, [0, 10, 20]), (71, [0, 10, 20, 50, 70])],
    )
    def test_exponents_between_branches(self, bound, expected):
        """Values from both signs of k are kept when only one branch is below the bound."""
        assert parity_exponents(bound).tolist() == expected

    @pytest.mark.parametrize("bound", [11, 15, 20, 70])
    def test_characterization_matches_direct_counts(self, bound, fresh_cache):
        """The indicator agrees with the parity of knapsack counts at every bound."""
        odd = [int(v) % 2 for v in bprime_table(5, 2 * bound - 1)[1::2]]
        indicator = [0] * bound
        for n in parity_exponents(bound).tolist():
            indicator[n] = 1
        assert indicator == odd
        assert verify_parity_characterization(bound).passed

    def test_characterization(self, fresh_cache):
        """The characterization holds below 20000."""
        report = verify_parity_characterization(20_000)
        assert report.passed
        assert report.modulus == 2


class TestFamilies:
    """Mod-4 families for eligible primes."""

    def test_progressions_for_seven(self):
        """alpha = 0 gives 20n+7, 20n+15 and six steps of 196 from 139."""
        progressions = family_progressions(7, 0)
        assert [(step, begin) for _, step, begin in progressions[:2]] == [(20, 7), (20, 15)]
        assert [begin for _, _, begin in progressions[2:]] == [139 + 28 * j for j in range(1, 7)]
        assert all(step == 196 for _, step, _ in progressions[2:])

    @pytest.mark.parametrize("p,alpha", [(7, 1), (11, 0), (13, 0)])
    def test_families_hold(self, p, alpha, fresh_cache):
        """Both families vanish mod 4 below 20000."""
        report = verify_thm12_families(p, alpha, trunc=20_000)
        assert report.passed
        assert report.order_checked == 20_000

    @pytest.mark.parametrize("p,alpha", [(7, 2), (11, 1), (13, 1)])
    def test_families_beyond_truncation_raise(self, p, alpha):
        """An alpha whose progressions start past the truncation is refused, not skipped."""
        with pytest.raises(TruncationError, match=f"alpha={alpha}"):
            verify_thm12_families(p, alpha, trunc=20_000)

    def test_families_bound_beyond_truncation_raises(self):
        """200 terms of step 196 from 167 do not fit below 5000."""
        with pytest.raises(TruncationError, match="needs truncation"):
            verify_thm12_families(7, 0, bound=200, trunc=5_000)

    def test_families_bound_within_truncation(self, fresh_cache):
        """20 terms per progression fit below 5000."""
        assert verify_thm12_families(7, 0, bound=20, trunc=5_000).passed

    @pytest.mark.parametrize("p", [7, 11])
    def test_step_congruences(self, p, fresh_cache):
        """The step forms match 2 p^a f4^3 f5 mod 4."""
        assert verify_inftystep(p, 0, trunc=8_000).passed

    def test_step_forms_beyond_truncation_raise(self):
        """alpha = 2 for p = 13 starts at 80923, past the truncation."""
        with pytest.raises(TruncationError, match="alpha=2"):
            verify_inftystep(13, 2, trunc=10_000)

    @pytest.mark.parametrize("p,expected", [(7, [(3, 1)]), (11, [(5, -2)]), (13, [(6, 2)])])
    def test_unique_solution(self, p, expected):
        """Only k = (p-1)/2, m = (+-p-1)/6 solves the exponent congruence."""
        assert eligibility_solutions(p) == expected
        assert verify_eligibility_solutions(p).passed


class TestInternalCongruence:
    """b'_5(5n+1) recurs mod 5 along 5^(2a+1) n + (5^(2a+1)+1)/6."""

    def test_holds(self, fresh_cache):
        """alpha <= 2 below 50000."""
        report = verify_internal_congruence(2, trunc=50_000)
        assert report.passed
        assert report.modulus == 5

    def test_alpha_beyond_truncation_raises(self):
        """alpha = 3 begins at 13021, so a truncation of 10000 cannot check it."""
        with pytest.raises(TruncationError, match="alpha=3"):
            verify_internal_congruence(3, trunc=10_000)

    def test_bound_beyond_truncation_raises(self):
        """Ten terms of step 3125 from 521 need more than 20000 coefficients."""
        with pytest.raises(TruncationError, match="needs truncation 28647"):
            verify_internal_congruence(2, bound=10, trunc=20_000)

    def test_bound_counts_pairs(self, fresh_cache):
        """With a bound every alpha contributes exactly that many pairs."""
        report = verify_internal_congruence(1, bound=30, trunc=5_000)
        assert report.passed
        assert report.detail.startswith("60 pairs")


class TestParityFamilies:
    """Cui-Gu and Sellers parity statements."""

    @pytest.mark.parametrize("ell", [5, 7])
    def test_cuigu(self, ell, fresh_cache):
        """b'_ell(ell n + (ell^2-1)/24) = b_ell(n) mod 2."""
        report = verify_cuigu(ell, 300)
        assert report.passed
        assert report.id == f"cuigu-ell{ell}"
        assert report.order_checked == ell * 299 + (ell * ell - 1) // 24 + 1

    def test_cuigu_witness_is_bprime_index(self, monkeypatch, fresh_cache):
        """A parity mismatch at n is reported at the index ell n + (ell^2-1)/24."""
        real = congruence_verifier.bregular_table

        def flipped(ell, n_max, modulus=None):
            table = real(ell, n_max, modulus=modulus).copy()
            table[4] = (table[4] + 1) % 2
            return table

        monkeypatch.setattr(congruence_verifier, "bregular_table", flipped)
        report = verify_cuigu(7, 50)
        assert not report.passed
        assert report.first_bad_exponent == 7 * 4 + 2
        assert report.order_checked == 7 * 49 + 3

    def test_cuigu_needs_prime_at_least_five(self):
        """ell = 3 is outside the statement."""
        with pytest.raises(IneligiblePrimeError):
            verify_cuigu(3, 10)

    def test_sellers_residues(self):
        """24r+1 is a nonresidue mod 5 for r = 3, 4 and never mod 3."""
        assert sellers_residues(5) == [3, 4]
        assert sellers_residues(3) == []

    def test_sellers_holds(self, fresh_cache):
        """b'_5(5n+3) and b'_5(5n+4) are even."""
        report = verify_sellers(5, 400)
        assert report.passed

    def test_sellers_vacuous(self):
        """With no residues there is nothing to check."""
        report = verify_sellers(3, 100)
        assert report.passed
        assert "nothing to check" in report.detail
