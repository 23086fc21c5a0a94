"""
Exact arithmetic on lattice points a − b·θ.

θ is turned into a Fraction once, so that comparisons such as ℓʲᵢ = s are
decided on rationals rather than floats.
"""

from fractions import Fraction


def exact_theta(theta: float) -> Fraction:
    return Fraction(theta).limit_denominator(10 ** 6)


def lattice_value(a: int, b: int, theta: Fraction) -> Fraction:
    """The point a − b·θ."""
    return a - b * theta


def shifted_value(lam: int, index: int, theta: Fraction) -> Fraction:
    """ℓ = λ − index·θ for a 1-based particle index."""
    return lam - index * theta
