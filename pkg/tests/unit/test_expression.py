"""
Unit tests for expression parsing, JSON trees and evaluation.
"""

import pytest

from src.services.exceptions import ExpressionError, ExpressionParseError, NonUnitError
from src.services.expression import (
    Add,
    BPrime,
    Const,
    Dissect,
    Div,
    Eta,
    Monomial,
    Mul,
    Pow,
    QProd,
    RogersRamanujan,
    Sub,
    Subs,
    Theta,
    evaluate,
    evaluate_text,
    from_json,
    parse_expression,
    to_json,
)
from src.services.series import reduce_mod
from tests.conftest import BPRIME5_OPENING


class TestParsing:
    """Text grammar to expression nodes."""

    def test_euler_shorthand(self):
        """f_k, f{k} and fk all mean (q^k;q^k)_inf."""
        expected = QProd(((5, 5, 1, False),))
        assert parse_expression("f5") == expected
        assert parse_expression("f_5") == expected
        assert parse_expression("f_{5}") == expected

    def test_products_fold(self):
        """Quotients of Pochhammer factors collapse into one product node."""
        node = parse_expression("(q^2;q^2)(q^5;q^5)^3 / ((q;q)^3 (q^10;q^10))")
        assert node == QProd(
            ((2, 2, 1, False), (5, 5, 3, False), (1, 1, -3, False), (10, 10, -1, False))
        )

    def test_pochhammer_variants(self):
        """Bare q, braces, an infinity subscript and a negated base."""
        assert parse_expression("(q;q)_inf") == QProd(((1, 1, 1, False),))
        assert parse_expression("(q^{3};q^{7})") == QProd(((3, 7, 1, False),))
        assert parse_expression("(-q;q^2)") == QProd(((1, 2, 1, True),))

    def test_rogers_ramanujan(self):
        """R(q) and R(q^m)."""
        assert parse_expression("R(q)") == RogersRamanujan()
        assert parse_expression("R(q^5)") == Subs(RogersRamanujan(), 5)

    def test_coefficient_and_monomial(self):
        """11q is 11 times q; q^2 is a single monomial."""
        assert parse_expression("11q") == Mul(Const(11), Monomial(1))
        assert parse_expression("q^2") == Monomial(2)

    def test_sum_and_difference(self):
        """Left-associative + and -."""
        node = parse_expression("1/R(q)^5 - 11q - q^2 R(q)^5")
        assert isinstance(node, Sub)
        assert isinstance(node.left, Sub)
        assert node.left.left == Div(Const(1), Pow(RogersRamanujan(), 5))

    def test_eta_quotient(self):
        """eta factors merge into one exponent map."""
        assert parse_expression("eta(12z)^5 / eta(60z)") == Eta(((12, 5), (60, -1)))
        assert parse_expression("eta(z)") == Eta(((1, 1),))

    def test_theta(self):
        """f(-q^A,-q^B) and theta(A,B) are the same node."""
        assert parse_expression("f(-q,-q^4)") == Theta(1, 4)
        assert parse_expression("theta(1,4)") == Theta(1, 4)

    def test_dissection_suffix(self):
        """a[5n+1] and dissect(a,5,1)."""
        assert parse_expression("bprime(5)[5n+1]") == Dissect(BPrime(5), 5, 1)
        assert parse_expression("dissect(bprime(5),5,1)") == Dissect(BPrime(5), 5, 1)
        assert parse_expression("bprime(5)[4n]") == Dissect(BPrime(5), 4, 0)


class TestParseErrors:
    """Errors carry the position of the offending character."""

    @pytest.mark.parametrize(
        "text,position",
        [
            ("f1 + )", 5),
            ("q2", 1),
            ("bprime(1)", 7),
            ("f1[5n+7]", 2),
            ("", 0),
            ("f1 f2 )", 6),
        ],
    )
    def test_error_position(self, text, position):
        """The reported position points at the bad token."""
        with pytest.raises(ExpressionParseError) as exc_info:
            parse_expression(text)
        assert exc_info.value.position == position

    def test_pointer(self):
        """The caret sits under the error."""
        with pytest.raises(ExpressionParseError) as exc_info:
            parse_expression("f1 + )")
        assert exc_info.value.pointer() == "f1 + )\n     ^"

    def test_parse_error_is_expression_error(self):
        """Callers may catch the general expression error."""
        with pytest.raises(ExpressionError):
            parse_expression("f0")


class TestJson:
    """JSON tree form."""

    def test_tree_round_trip(self):
        """A mixed tree survives serialization."""
        node = parse_expression("bprime(5)[20n+11] - 3 f2^2 f5 / (f1 R(q^5)) + eta(12z)^5/eta(60z)")
        assert from_json(to_json(node)) == node

    def test_string_arguments(self):
        """String leaves are parsed with the text grammar."""
        node = from_json({"op": "add", "args": ["f2 f5^3 / (f1^3 f10)", {"op": "q", "k": 3}]})
        assert isinstance(node, Add)
        assert node.right == Monomial(3)

    def test_scale(self):
        """scale multiplies by an integer."""
        node = from_json({"op": "scale", "c": 4, "arg": {"op": "rr"}})
        assert node == Mul(Const(4), RogersRamanujan())

    @pytest.mark.parametrize(
        "obj",
        [
            {"op": "frobnicate"},
            {"op": "add", "args": [1]},
            {"op": "dissect", "arg": 1, "t": 3, "j": 3},
            {"op": "qprod", "factors": [{"a": 0, "b": 1, "e": 1}]},
            {"op": "theta", "A": 1},
            [1, 2],
        ],
    )
    def test_malformed_trees(self, obj):
        """Malformed trees raise ExpressionError."""
        with pytest.raises(ExpressionError):
            from_json(obj)


class TestEvaluation:
    """Expanding expressions to truncated series."""

    def test_bprime_opening(self, fresh_cache):
        """bprime(5) expands to the known opening coefficients."""
        assert evaluate_text("bprime(5)", len(BPRIME5_OPENING)).to_list() == BPRIME5_OPENING

    def test_quintic_rogers_ramanujan(self):
        """1/R^5 - 11q - q^2 R^5 = f1^6 / f5^6."""
        lhs = evaluate_text("1/R(q)^5 - 11q - q^2 R(q)^5", 300)
        rhs = evaluate_text("f1^6 / f5^6", 300)
        assert lhs == rhs

    def test_bprime_five_dissection(self, fresh_cache):
        """sum b'_5(5n+1) q^n = f2 f5^3 / (f1^3 f10)."""
        lhs = evaluate_text("bprime(5)[5n+1]", 200)
        rhs = evaluate_text("f2 f5^3 / (f1^3 f10)", 200)
        assert lhs == rhs

    def test_eta_matches_product(self):
        """A weight-2 eta-quotient with zero prefactor is its q-product."""
        assert evaluate_text("eta(12z)^5/eta(60z)", 200) == evaluate_text("f12^5 / f60", 200)

    def test_modular_matches_exact(self, fresh_cache):
        """Evaluating mod 4 equals reducing the exact value."""
        text = "f2 f5^3 / (f1^3 f10) + bprime(5)[4n+3]"
        assert evaluate_text(text, 150, 4) == reduce_mod(evaluate_text(text, 150), 4)

    def test_substitution_reaches_truncation(self):
        """R(q^5) is known to the requested order."""
        series = evaluate_text("R(q^5)", 12)
        assert series.trunc == 12
        assert series.to_list()[:6] == [1, 0, 0, 0, 0, -1]

    def test_division_by_non_unit(self):
        """q has no inverse."""
        with pytest.raises(NonUnitError):
            evaluate(Div(Const(1), Monomial(1)), 10)
