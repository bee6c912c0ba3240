"""Modular exponentiation through the carry-free Montgomery core.

Left-to-right square-and-multiply over stack representations.  Batches
run in lockstep: every element squares each round, and the conditional
multiply is applied through an elementwise select, so shorter exponents
simply coast on the Montgomery unit.
"""

from __future__ import annotations

import numpy as np


def mod_exp_batch(stack, bases, exponents) -> list[int]:
    if len(bases) != len(exponents):
        raise ValueError("bases and exponents must pair up")
    n = stack.modulus
    if n is None:
        raise RuntimeError("no modulus installed; call set_modulus")
    exps = [int(e) for e in exponents]
    if any(e < 0 for e in exps):
        raise ValueError("exponents must be non-negative")
    m = stack.montgomery_factor
    count = len(bases)
    xbar = stack.montgomery_product(
        stack.encode([int(b) % n for b in bases]),
        stack.encode([m * m % n] * count))
    z = stack.encode([m % n] * count)  # Montgomery-domain one
    top = max((e.bit_length() for e in exps), default=0)
    for i in range(top - 1, -1, -1):
        z = stack.montgomery_product(z, z)
        cond = np.array([(e >> i) & 1 for e in exps], dtype=bool)
        if cond.any():
            z = stack.select(cond, stack.montgomery_product(z, xbar), z)
    out = stack.montgomery_product(z, stack.encode([1] * count))
    return [v % n for v in stack.decode(out)]


def mod_exp(stack, base: int, exponent: int) -> int:
    return mod_exp_batch(stack, [base], [exponent])[0]
