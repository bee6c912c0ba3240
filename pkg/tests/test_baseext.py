from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from rrns import intervals, oracle
from rrns.baseext import (ExtensionContext, compute_q, extend_to,
                          mixed_radix_combine, mixed_radix_digits, reconstruct)
from rrns.params import BoundViolation


def canonical_digits(x, base, style):
    m = 1
    for n in base:
        m *= n
    return [intervals.red(x * oracle.modinv(m // n, n), n, style) for n in base]


def test_context_validation():
    ExtensionContext((16, 15), 7, "symmetric", 1)
    with pytest.raises(BoundViolation):
        ExtensionContext((16, 15), 2, "symmetric", 1)
    with pytest.raises(ValueError):
        ExtensionContext((16, 15), 9, "standard", 1)  # shares factor 3


def test_remark_base_q_exhaustive():
    # B = (16,15), M0 = 7, symmetric, exact digits: q always in {-1, 0, 1}
    ctx = ExtensionContext((16, 15), 7, "symmetric", 1)
    for x in range(-120, 120):
        d = canonical_digits(x, (16, 15), "symmetric")
        q = compute_q(d, intervals.red(x, 7, "symmetric"), ctx)
        assert q in (-1, 0, 1)
        assert reconstruct(d, ctx, q) == x


def test_wrap_matches_oracle():
    ctx = ExtensionContext((16, 15, 13, 11), 149, "standard", 2)
    m = 16 * 15 * 13 * 11
    for x in (0, 1, 999, m - 1, m // 3):
        d = canonical_digits(x, ctx.base, "standard")
        lifts = [a + n for a, n in zip(d, ctx.base)]  # phi = 2 lifts
        q = compute_q(lifts, x % 149, ctx)
        assert q == oracle.wrap_count(lifts, ctx.base, x)
        assert reconstruct(lifts, ctx, q) == x


def test_extend_to_non_coprime_target():
    ctx = ExtensionContext((16, 15), 7, "symmetric", 1)
    for x in (-100, -31, 0, 55, 119):
        d = canonical_digits(x, ctx.base, "symmetric")
        x0 = intervals.red(x, 7, "symmetric")
        assert extend_to(d, x0, ctx, 8) == intervals.red(x, 8, "symmetric")
        assert extend_to(d, x0, ctx, 13) == intervals.red(x, 13, "symmetric")


_CASES = [
    ((16, 15, 13, 11), "standard"),
    ((16, 15, 13, 11), "symmetric"),
    ((251, 256), "standard"),
    ((31,), "symmetric"),
]


@settings(max_examples=200, deadline=None)
@given(case=st.sampled_from(_CASES),
       phi=st.sampled_from([1, 2, F(19, 2), 18]),
       data=st.data())
def test_q_bound_property(case, phi, data):
    base, style = case
    ctx = ExtensionContext(base, 1297, style, phi)
    m, k = ctx.m, len(base)
    lo, hi = intervals.bounds(m, 1, style)
    x = data.draw(st.integers(int(lo), int(hi) - 1))
    digits = canonical_digits(x, base, style)
    lifts = []
    for d, n in zip(digits, base):
        jlo, jhi = intervals.bounds(n, phi, style)
        # admissible lift: any d + j*n inside phi*n*I
        joff = data.draw(st.integers(0, int((jhi - jlo) // n) - 1))
        a = d + ((int(jlo) - d) // n + joff) * n
        if not intervals.contains(a, n, phi, style):
            a += n
        assert intervals.contains(a, n, phi, style)
        lifts.append(a)
    q = compute_q(lifts, intervals.red(x, 1297, style), ctx)
    scale = k * F(phi) + (1 if style == "symmetric" else 0)
    assert intervals.contains(q, 1, scale, style)
    assert reconstruct(lifts, ctx, q) == x
    assert q == oracle.wrap_count(lifts, base, x)


def test_mixed_radix():
    assert mixed_radix_digits(4300, 253) == (252, 16)
    assert mixed_radix_combine(252, 16, 253) == 4300
    a, b = mixed_radix_digits(-1, 253, "symmetric")
    assert (a, b) == (-1, 0)
    for x in (-2150, -17, 0, 300, 4300):
        a, b = mixed_radix_digits(x, 253, "symmetric")
        assert a + 253 * b == x
        assert intervals.contains(a, 253, 1, "symmetric")
