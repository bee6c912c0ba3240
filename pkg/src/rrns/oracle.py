"""Big-integer reference arithmetic.

Every operation here is written directly on Python ints, independent of
the table-driven engine, so the two can be checked against each other.
Engine modules must not import this module; tests and the boundary
encode/decode helpers are the only intended consumers.
"""

from __future__ import annotations


def modinv(a: int, n: int) -> int:
    return pow(a, -1, n)


def red(x: int, n: int, style: str = "standard") -> int:
    # shifted-mod formulation, deliberately different from intervals.red
    if style == "symmetric":
        h = n >> 1
        return (x + h) % n - h
    return x % n


def crt(residues, moduli) -> int:
    """x in [0, prod(moduli)) matching every residue; moduli pairwise coprime."""
    x, m = 0, 1
    for r, n in zip(residues, moduli):
        t = ((r - x) * modinv(m, n)) % n
        x += m * t
        m *= n
    return x


def mont_reduce(h: int, n: int, m: int, style: str = "standard") -> int:
    """Exact (h + u*n)/m with u = red(-h/n mod m); congruent to h/m mod n."""
    u = red(-h * modinv(n, m), m, style)
    z, rem = divmod(h + u * n, m)
    assert rem == 0
    return z


def mont_product(x: int, y: int, n: int, m: int, style: str = "standard") -> int:
    return mont_reduce(x * y, n, m, style)


def wrap_count(lifts, moduli, x: int) -> int:
    """q with sum(lift_i * M/M_i) = x + q*M, computed from the lifts directly."""
    m = 1
    for n in moduli:
        m *= n
    s = sum(a * (m // n) for a, n in zip(lifts, moduli))
    q, rem = divmod(s - x, m)
    assert rem == 0
    return q


def powmod(base: int, exp: int, n: int) -> int:
    return pow(base, exp, n)
