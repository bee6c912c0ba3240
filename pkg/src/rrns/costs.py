"""Simple-operation cost model.

Every table read and every native modular operation on a redundant lane
counts as one simple operation.  With layer sizes (k_t, l_t) the exact
recurrences are

    A_1 = M_1 = MM_1 = 1,  R_1 = 0
    A_{t+1}  = (k+l) A_t + 1
    M_{t+1}  = (k+l) MM_t + 1
    R_{t+1}  = (k+l) MM_t + 2(k+l+1) + (2kl+k+l) M_t + 2kl A_t + (k+l) R_t
    MM_t     = M_t + R_t

for add, multiply, Montgomery reduce, and full Montgomery multiply.
The closed-form approximations for a three-level tower are reported
alongside but never used as the acceptance reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt


@dataclass(frozen=True)
class LevelCosts:
    add: int
    mul: int
    reduce: int

    @property
    def mont(self) -> int:
        return self.mul + self.reduce


BOTTOM = LevelCosts(add=1, mul=1, reduce=0)


def predict(layer_sizes) -> list[LevelCosts]:
    """Exact per-level costs; entry 0 is the bottom, entry t covers the
    layer with sizes layer_sizes[t-1] = (k, l)."""
    out = [BOTTOM]
    for k, l in layer_sizes:
        lo = out[-1]
        kl = k + l
        add = kl * lo.add + 1
        mul = kl * lo.mont + 1
        reduce_ = (kl * lo.mont + 2 * (kl + 1) + (2 * k * l + k + l) * lo.mul
                   + 2 * k * l * lo.add + kl * lo.reduce)
        out.append(LevelCosts(add=add, mul=mul, reduce=reduce_))
    return out


def simplified_mont3(k: int, k1: int) -> int:
    """Closed-form estimate of the level-3 Montgomery multiply count."""
    return 24 * k * k1 * k1 + 8 * k * k * k1


def optimal_bottom_width(bits: int, t: int) -> float:
    """Bottom base size k1 minimizing the simplified count."""
    return sqrt(bits / (3 * t))


def simplified_min_ops(bits: int, t: int) -> float:
    """Simplified count at the optimal k1."""
    return 16 * sqrt(3) * (bits / t) ** 1.5
