"""
Truncated integer power series.

A ``TruncatedSeries`` holds the coefficients a(0), ..., a(N-1) of a formal power
series known exactly below the truncation order N. Coefficients are either
exact Python integers (stored in numpy object arrays) or residues modulo a
machine-word modulus M (stored in int64 arrays).

Values are immutable: every operation allocates a fresh, read-only result and
returns the tightest truncation order that is still sound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import structlog

from src.config.settings import get_settings
from src.services.exceptions import ModeMismatchError, NonUnitError, TruncationError


logger = structlog.get_logger()

MAX_MODULUS = 1 << 31
_RECURRENCE_BUDGET = 400_000


@dataclass(frozen=True)
class SeriesComparison:
    """Outcome of a coefficient-wise comparison over the common prefix."""

    agree: bool
    compared: int
    first_bad_exponent: Optional[int] = None
    lhs_coeff: Optional[int] = None
    rhs_coeff: Optional[int] = None


class TruncatedSeries:
    """An immutable power series known exactly for exponents below ``trunc``."""

    __slots__ = ("_coeffs", "_modulus")

    def __init__(self, coeffs: np.ndarray, modulus: Optional[int] = None):
        if len(coeffs) == 0:
            raise TruncationError("a series needs a positive truncation order")
        coeffs.flags.writeable = False
        self._coeffs = coeffs
        self._modulus = modulus

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    @property
    def trunc(self) -> int:
        return len(self._coeffs)

    @property
    def modulus(self) -> Optional[int]:
        return self._modulus

    @property
    def is_exact(self) -> bool:
        return self._modulus is None

    @property
    def coeff_mode(self) -> str:
        return "exact" if self._modulus is None else f"modular({self._modulus})"

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the coefficient array."""
        return self._coeffs

    def coeff(self, n: int) -> int:
        """Return a(n); exponents at or beyond the truncation order are an error."""
        if n < 0 or n >= self.trunc:
            raise TruncationError(
                f"coefficient q^{n} requested but series is only known below q^{self.trunc}"
            )
        return int(self._coeffs[n])

    def __getitem__(self, n: int) -> int:
        return self.coeff(n)

    def __len__(self) -> int:
        return self.trunc

    def to_list(self) -> list[int]:
        return [int(v) for v in self._coeffs]

    def support(self) -> np.ndarray:
        """Exponents with a nonzero coefficient."""
        return np.flatnonzero(self._coeffs)

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self._coeffs))

    def __repr__(self) -> str:
        shown = []
        for n, c in enumerate(self._coeffs[:8]):
            c = int(c)
            if c:
                shown.append(f"{c}" if n == 0 else f"{c}*q^{n}")
        body = " + ".join(shown) if shown else "0"
        return f"TruncatedSeries({body} + O(q^{self.trunc}), {self.coeff_mode})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        if self._modulus != other._modulus:
            return False
        return compare(self, other).agree

    __hash__ = None  # type: ignore[assignment]

    # ------------------------------------------------------------------
    # Operators
    # ------------------------------------------------------------------

    def __add__(self, other: Union[TruncatedSeries, int]) -> TruncatedSeries:
        return add(self, _coerce(other, self))

    __radd__ = __add__

    def __sub__(self, other: Union[TruncatedSeries, int]) -> TruncatedSeries:
        return sub(self, _coerce(other, self))

    def __rsub__(self, other: Union[TruncatedSeries, int]) -> TruncatedSeries:
        return sub(_coerce(other, self), self)

    def __neg__(self) -> TruncatedSeries:
        return neg(self)

    def __mul__(self, other: Union[TruncatedSeries, int]) -> TruncatedSeries:
        if isinstance(other, int):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: TruncatedSeries) -> TruncatedSeries:
        return divide(self, other)

    def __pow__(self, e: int) -> TruncatedSeries:
        return power(self, e)

    def truncate(self, n: int) -> TruncatedSeries:
        """Keep only the first ``n`` coefficients."""
        if n < 1:
            raise TruncationError("truncation order must be positive")
        if n >= self.trunc:
            return self
        return TruncatedSeries(self._coeffs[:n].copy(), self._modulus)


# ----------------------------------------------------------------------
# Construction
# ----------------------------------------------------------------------


def _empty(n: int, modulus: Optional[int]) -> np.ndarray:
    if modulus is None:
        return np.zeros(n, dtype=object)
    return np.zeros(n, dtype=np.int64)


def _check_modulus(modulus: int) -> None:
    if modulus < 2:
        raise ValueError(f"modulus must be at least 2, got {modulus}")
    if modulus > MAX_MODULUS:
        raise ValueError(
            f"modulus {modulus} exceeds machine-word residues (max {MAX_MODULUS}); use exact mode"
        )


def make_series(
    coeffs: Iterable[int], trunc: int, modulus: Optional[int] = None
) -> TruncatedSeries:
    """Build a series from its leading coefficients, zero-padded to ``trunc``."""
    if trunc <= 0:
        raise TruncationError(f"truncation order must be positive, got {trunc}")
    values = [int(c) for c in coeffs]
    if len(values) > trunc:
        raise TruncationError(f"{len(values)} coefficients exceed truncation order {trunc}")
    out = _empty(trunc, modulus)
    if modulus is None:
        out[: len(values)] = values
    else:
        _check_modulus(modulus)
        out[: len(values)] = [v % modulus for v in values]
    return TruncatedSeries(out, modulus)


def zero(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    return make_series([], trunc, modulus)


def one(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    return make_series([1], trunc, modulus)


def monomial(k: int, trunc: int, coeff: int = 1, modulus: Optional[int] = None) -> TruncatedSeries:
    """The series coeff*q^k; a monomial at or beyond ``trunc`` is simply zero."""
    if k < 0:
        raise ValueError("negative exponents are not supported")
    if k >= trunc:
        return zero(trunc, modulus)
    return make_series([0] * k + [coeff], trunc, modulus)


def from_array(values: np.ndarray, modulus: Optional[int] = None) -> TruncatedSeries:
    """Wrap a freshly computed coefficient array (copied into the right dtype)."""
    if modulus is None:
        arr = np.empty(len(values), dtype=object)
        arr[:] = [int(v) for v in values]
    else:
        _check_modulus(modulus)
        arr = np.asarray(values, dtype=np.int64) % modulus
    return TruncatedSeries(arr, modulus)


def _coerce(other: Union[TruncatedSeries, int], like: TruncatedSeries) -> TruncatedSeries:
    if isinstance(other, TruncatedSeries):
        return other
    return make_series([other], like.trunc, like.modulus)


def _check_compatible(a: TruncatedSeries, b: TruncatedSeries) -> None:
    if a.modulus != b.modulus:
        raise ModeMismatchError(f"cannot combine {a.coeff_mode} with {b.coeff_mode} series")


# ----------------------------------------------------------------------
# Ring operations
# ----------------------------------------------------------------------


def add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    _check_compatible(a, b)
    n = min(a.trunc, b.trunc)
    out = a.array[:n] + b.array[:n]
    if a.modulus is not None:
        out %= a.modulus
    return TruncatedSeries(out, a.modulus)


def neg(a: TruncatedSeries) -> TruncatedSeries:
    out = -a.array
    if a.modulus is not None:
        out %= a.modulus
    return TruncatedSeries(out, a.modulus)


def sub(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return add(a, neg(b))


def scale(a: TruncatedSeries, c: int) -> TruncatedSeries:
    if a.modulus is None:
        return TruncatedSeries(a.array * int(c), None)
    out = (a.array * (int(c) % a.modulus)) % a.modulus
    return TruncatedSeries(out, a.modulus)


def _shift_add_product(sparse: np.ndarray, dense: np.ndarray, n: int, modulus: Optional[int]) -> np.ndarray:
    out = _empty(n, modulus)
    for i in np.flatnonzero(sparse[:n]):
        i = int(i)
        c = sparse[i]
        if modulus is None:
            out[i:] += c * dense[: n - i]
        else:
            out[i:] = (out[i:] + c * dense[: n - i]) % modulus
    return out


def _fft_product(x: np.ndarray, y: np.ndarray, n: int, modulus: int, limb_bits: int) -> np.ndarray:
    """
    Exact truncated product of residue arrays through float FFTs.

    Residues are split into limbs of ``limb_bits`` bits so each partial
    convolution stays far below 2^53 and rounds back to the exact integer.
    """
    size = 1 << (2 * n - 1).bit_length()
    limbs = max(1, -(-(modulus - 1).bit_length() // limb_bits))
    mask = (1 << limb_bits) - 1
    xs = [np.fft.rfft((x[:n] >> (limb_bits * i)) & mask, size) for i in range(limbs)]
    ys = [np.fft.rfft((y[:n] >> (limb_bits * i)) & mask, size) for i in range(limbs)]
    out = np.zeros(n, dtype=np.int64)
    for s in range(2 * limbs - 1):
        acc = sum(xs[i] * ys[s - i] for i in range(max(0, s - limbs + 1), min(s, limbs - 1) + 1))
        part = np.rint(np.fft.irfft(acc, size)[:n]).astype(np.int64) % modulus
        weight = pow(2, limb_bits * s, modulus)
        out = (out + part * weight) % modulus
    return out


def _product_array(x: np.ndarray, y: np.ndarray, n: int, modulus: Optional[int]) -> np.ndarray:
    settings = get_settings()
    nnz_x = int(np.count_nonzero(x[:n]))
    nnz_y = int(np.count_nonzero(y[:n]))
    sparse, dense = (x, y) if nnz_x <= nnz_y else (y, x)
    nnz = min(nnz_x, nnz_y)
    if modulus is None or nnz <= settings.sparse_cutoff or n <= 64:
        return _shift_add_product(sparse, dense, n, modulus)
    return _fft_product(x, y, n, modulus, settings.fft_limb_bits)


def mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated at the smaller truncation order."""
    _check_compatible(a, b)
    n = min(a.trunc, b.trunc)
    return TruncatedSeries(_product_array(a.array, b.array, n, a.modulus), a.modulus)


def _unit_inverse(c: int, modulus: Optional[int]) -> int:
    if modulus is None:
        if c not in (1, -1):
            raise NonUnitError(f"constant term {c} is not a unit over the integers")
        return c
    try:
        return pow(c, -1, modulus)
    except ValueError as e:
        raise NonUnitError(f"constant term {c} is not invertible mod {modulus}") from e


def _divide_by_recurrence(num: np.ndarray, den: np.ndarray, n: int, modulus: Optional[int]) -> np.ndarray:
    """Solve den * out = num term by term, walking only the nonzero terms of den."""
    inv0 = _unit_inverse(int(den[0]), modulus)
    terms = [(int(i), int(den[i])) for i in np.flatnonzero(den[:n]) if i > 0]
    numerator = [int(v) for v in num[:n]]
    out = [0] * n
    for m in range(n):
        acc = numerator[m]
        for i, c in terms:
            if i > m:
                break
            acc -= c * out[m - i]
        acc *= inv0
        out[m] = acc if modulus is None else acc % modulus
    arr = _empty(n, modulus)
    arr[:] = out
    return arr


def _invert_newton(a: np.ndarray, n: int, modulus: Optional[int]) -> np.ndarray:
    """Newton iteration g <- g(2 - a g), doubling the known precision each round."""
    g = _empty(1, modulus)
    g[0] = _unit_inverse(int(a[0]), modulus)
    k = 1
    while k < n:
        k2 = min(2 * k, n)
        padded = _empty(k2, modulus)
        padded[:k] = g
        err = _product_array(a[:k2], padded, k2, modulus)
        err = -err
        err[0] += 2
        if modulus is not None:
            err %= modulus
        g = _product_array(padded, err, k2, modulus)
        k = k2
    return g


def _prefers_recurrence(den: np.ndarray, n: int, modulus: Optional[int]) -> bool:
    nnz = int(np.count_nonzero(den[:n]))
    if modulus is None:
        return nnz <= max(n // 4, 8)
    return n * nnz <= _RECURRENCE_BUDGET


def invert(a: TruncatedSeries) -> TruncatedSeries:
    """Multiplicative inverse up to truncation; the constant term must be a unit."""
    n = a.trunc
    if _prefers_recurrence(a.array, n, a.modulus):
        identity = _empty(n, a.modulus)
        identity[0] = 1
        out = _divide_by_recurrence(identity, a.array, n, a.modulus)
    else:
        out = _invert_newton(a.array, n, a.modulus)
    return TruncatedSeries(out, a.modulus)


def divide(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """a / b; walks the recurrence directly when b is sparse."""
    _check_compatible(a, b)
    n = min(a.trunc, b.trunc)
    if _prefers_recurrence(b.array, n, a.modulus):
        return TruncatedSeries(_divide_by_recurrence(a.array, b.array, n, a.modulus), a.modulus)
    return mul(a.truncate(n), invert(b.truncate(n)))


def power(a: TruncatedSeries, e: int) -> TruncatedSeries:
    """Repeated squaring; negative exponents invert the positive power once."""
    if e < 0:
        return invert(power(a, -e))
    result = one(a.trunc, a.modulus)
    base = a
    while e:
        if e & 1:
            result = mul(result, base)
        e >>= 1
        if e:
            base = mul(base, base)
    return result


# ----------------------------------------------------------------------
# Exponent manipulation
# ----------------------------------------------------------------------


def substitute_power(a: TruncatedSeries, m: int) -> TruncatedSeries:
    """Replace q by q^m; the output truncation is trunc*m, capped globally."""
    if m < 1:
        raise ValueError(f"substitution power must be positive, got {m}")
    if m == 1:
        return a
    cap = get_settings().max_trunc
    n = min(a.trunc * m, max(cap, a.trunc))
    out = _empty(n, a.modulus)
    count = len(range(0, n, m))
    out[::m] = a.array[:count]
    return TruncatedSeries(out, a.modulus)


def dissect(a: TruncatedSeries, t: int, j: int) -> TruncatedSeries:
    """Return A_j from A(q) = sum_j q^j A_j(q^t), i.e. the coefficients a(tn + j)."""
    if t < 1:
        raise ValueError(f"dissection modulus must be positive, got {t}")
    if not 0 <= j < t:
        raise ValueError(f"residue {j} is outside [0, {t})")
    length = (a.trunc - j + t - 1) // t
    if length <= 0:
        raise TruncationError(f"no coefficient of class {j} mod {t} below q^{a.trunc}")
    return TruncatedSeries(a.array[j::t].copy(), a.modulus)


def shift(a: TruncatedSeries, k: int) -> TruncatedSeries:
    """Multiply by q^k."""
    if k < 0:
        raise ValueError("negative shifts are not supported")
    if k == 0:
        return a
    cap = get_settings().max_trunc
    n = min(a.trunc + k, max(cap, a.trunc))
    out = _empty(n, a.modulus)
    out[k:] = a.array[: n - k]
    return TruncatedSeries(out, a.modulus)


def reduce_mod(a: TruncatedSeries, modulus: int) -> TruncatedSeries:
    """Reduce coefficients into [0, M); a modular series may be reduced to a divisor of its modulus."""
    _check_modulus(modulus)
    if a.modulus is not None:
        if a.modulus % modulus:
            raise ModeMismatchError(f"cannot reduce a mod-{a.modulus} series modulo {modulus}")
        return TruncatedSeries(a.array % modulus, modulus)
    out = (a.array % modulus).astype(np.int64)
    return TruncatedSeries(out, modulus)


def coeff(a: TruncatedSeries, n: int) -> int:
    return a.coeff(n)


def compare(a: TruncatedSeries, b: TruncatedSeries) -> SeriesComparison:
    """Compare coefficient-wise over the common prefix, reporting the smallest mismatch."""
    _check_compatible(a, b)
    n = min(a.trunc, b.trunc)
    bad = np.flatnonzero(a.array[:n] != b.array[:n])
    if len(bad) == 0:
        return SeriesComparison(agree=True, compared=n)
    first = int(bad[0])
    return SeriesComparison(
        agree=False,
        compared=n,
        first_bad_exponent=first,
        lhs_coeff=int(a.array[first]),
        rhs_coeff=int(b.array[first]),
    )


def linear_combination(terms: Sequence[tuple[int, TruncatedSeries]]) -> TruncatedSeries:
    """sum c_i * s_i over a non-empty list of (coefficient, series) pairs."""
    if not terms:
        raise ValueError("linear_combination needs at least one term")
    total = scale(terms[0][1], terms[0][0])
    for c, s in terms[1:]:
        total = add(total, scale(s, c))
    return total
