"""Rational all-pass approximation of the delay term exp(-L*s)."""

from math import factorial

from .polytf import Polynomial, RationalTF


class OrderOutOfRangeError(ValueError):
    """Approximation order outside the supported 1..12 range."""


MAX_ORDER = 12  # (2r)! leaves the exactly-representable integer range just above this


def pade_coefficients(r: int):
    """Exact integer coefficients c_k = (2r-k)! / (k! (r-k)!) for k = 0..r."""
    if not 1 <= r <= MAX_ORDER:
        raise OrderOutOfRangeError(f"order must be in 1..{MAX_ORDER}, got {r}")
    return [factorial(2 * r - k) // (factorial(k) * factorial(r - k)) for k in range(r + 1)]


def pade_tf(r: int, L: float) -> RationalTF:
    """Diagonal (r, r) rational approximation of exp(-L*s).

    num = sum_k c_k (-L s)^k, den = sum_k c_k (L s)^k.  The result is
    all-pass (|num(jw)| = |den(jw)|), equals 1 at s = 0, and its denominator
    is Hurwitz for every supported order.
    """
    if L <= 0:
        raise ValueError(f"delay must be positive, got {L}")
    c = pade_coefficients(r)
    num = [ck * (-L) ** k for k, ck in enumerate(c)]
    den = [ck * L**k for k, ck in enumerate(c)]
    return RationalTF(Polynomial(num), Polynomial(den))
