"""Canonical residue intervals.

A residue system is parameterised by a half-open interval

    I = [-1 + e, e),   0 < e <= 1

so that the canonical residues mod n are the integers in n*I.  Two
choices of e are supported:

    standard   e = 1      ->  [0, n)
    symmetric  e = 1/2    ->  [-n/2, n/2)

For even n the symmetric interval contains -n/2 but not n/2.  Scaled
ranges x in c*n*I (c a positive rational) appear throughout as closure
bounds for partially reduced values.
"""

from __future__ import annotations

from fractions import Fraction

STANDARD = "standard"
SYMMETRIC = "symmetric"

STYLES = (STANDARD, SYMMETRIC)


def excess(style: str) -> Fraction:
    """Right endpoint e of the interval for this style."""
    if style == STANDARD:
        return Fraction(1)
    if style == SYMMETRIC:
        return Fraction(1, 2)
    raise ValueError(f"unknown interval style: {style!r}")


def red(x: int, n: int, style: str = STANDARD) -> int:
    """Canonical residue of x mod n inside n*I."""
    r = x % n
    if style == SYMMETRIC and r >= (n + 1) // 2:
        r -= n
    return r


def bounds(n, scale=1, style: str = STANDARD) -> tuple[Fraction, Fraction]:
    """Exact endpoints [lo, hi) of the scaled range scale*n*I."""
    e = excess(style)
    c = Fraction(scale) * Fraction(n)
    return (-1 + e) * c, e * c


def contains(x: int, n, scale=1, style: str = STANDARD) -> bool:
    """True iff x lies in scale*n*I (half-open)."""
    lo, hi = bounds(n, scale, style)
    return lo <= x < hi
