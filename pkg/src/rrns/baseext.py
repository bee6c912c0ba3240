"""Chinese-remainder base extension through a redundant modulus.

Given pseudo-residue lifts a_1..a_k of x over base M_1..M_k (each
a_i in phi*M_i*I) plus the exact residue x0 = x mod M0, the wrap count

    q = (sum_i a_i * (M/M_i) - x) / M

is an integer recoverable from residues alone:

    q  =  red< x0 * (-M^-1)  +  sum_i a_i * M_i^-1 >_M0

lifted out of M0 using q in k*phi*I (standard) or (k*phi+1)*I
(symmetric).  The M0 capacity for that lift is checked when the context
is built, never per call.  Extension to a target modulus T needs no
coprimality between T and M0*M.
"""

from __future__ import annotations

from math import gcd, prod

from .intervals import STANDARD, red
from .params import redundant_capacity_check


def _inv(a: int, n: int) -> int:
    return pow(a, -1, n)


class ExtensionContext:
    __slots__ = ("base", "m", "m0", "style", "phi", "neg_m_inv", "lane_inv",
                 "lane_weight")

    def __init__(self, base, m0: int, style: str = STANDARD, phi=1):
        self.base = tuple(int(n) for n in base)
        self.m = prod(self.base)
        self.m0 = int(m0)
        self.style = style
        self.phi = phi
        redundant_capacity_check(self.m0, len(self.base), phi, style).enforce()
        for n in self.base:
            if gcd(n, self.m0) != 1:
                raise ValueError(f"base modulus {n} shares a factor with M0 = {m0}")
        self.neg_m_inv = red(-_inv(self.m, self.m0), self.m0, style)
        self.lane_inv = tuple(red(_inv(n, self.m0), self.m0, style)
                              for n in self.base)
        self.lane_weight = tuple(self.m // n for n in self.base)


def compute_q(alphas, x0: int, ctx: ExtensionContext) -> int:
    """Lifted integer wrap count of the given pseudo-residue vector."""
    t = red(x0, ctx.m0, ctx.style) * ctx.neg_m_inv
    for a, inv in zip(alphas, ctx.lane_inv):
        t += red(a, ctx.m0, ctx.style) * inv
    return red(t, ctx.m0, ctx.style)


def reconstruct(alphas, ctx: ExtensionContext, q: int) -> int:
    """Exact integer sum_i a_i*(M/M_i) - q*M represented by the lifts."""
    return sum(a * w for a, w in zip(alphas, ctx.lane_weight)) - q * ctx.m


def extend_to(alphas, x0: int, ctx: ExtensionContext, target: int,
              target_style: str | None = None) -> int:
    """Residue of the represented x modulo an arbitrary target modulus."""
    q = compute_q(alphas, x0, ctx)
    style = target_style or ctx.style
    t = -q * red(ctx.m, target, style)
    for a, w in zip(alphas, ctx.lane_weight):
        t += red(a, target, style) * red(w, target, style)
    return red(t, target, style)


def mixed_radix_digits(x: int, radix: int, style: str = STANDARD) -> tuple[int, int]:
    """(a, b) with x = a + radix*b, a canonical mod radix for the style."""
    a = red(x, radix, style)
    b, rem = divmod(x - a, radix)
    assert rem == 0
    return a, b


def mixed_radix_combine(a: int, b: int, radix: int) -> int:
    return a + radix * b
