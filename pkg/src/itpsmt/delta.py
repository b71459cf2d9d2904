"""Exact rationals extended with a symbolic infinitesimal.

A value ``q + k*eps`` stands for a rational arbitrarily close to ``q`` from
above (k > 0) or below (k < 0).  Comparison is lexicographic, arithmetic is
componentwise; that is all the simplex and the strict-bound machinery need.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class Delta:
    q: Fraction
    eps: Fraction = Fraction(0)

    def __add__(self, other: "Delta") -> "Delta":
        return Delta(self.q + other.q, self.eps + other.eps)

    def __sub__(self, other: "Delta") -> "Delta":
        return Delta(self.q - other.q, self.eps - other.eps)

    def __neg__(self) -> "Delta":
        return Delta(-self.q, -self.eps)

    def scale(self, c: Fraction) -> "Delta":
        return Delta(self.q * c, self.eps * c)

    def key(self) -> tuple[Fraction, Fraction]:
        return (self.q, self.eps)

    def __lt__(self, other: "Delta") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "Delta") -> bool:
        return self.key() <= other.key()

    def is_zero(self) -> bool:
        return self.q == 0 and self.eps == 0

    def is_negative(self) -> bool:
        return self.key() < (Fraction(0), Fraction(0))

    def __repr__(self) -> str:
        if self.eps == 0:
            return str(self.q)
        return f"{self.q}{'+' if self.eps > 0 else '-'}{abs(self.eps)}*eps"


DZERO = Delta(Fraction(0))


def dq(x) -> Delta:
    """Embed a plain rational/int as a Delta."""
    return Delta(Fraction(x))
