"""Deterministic primality and descending prime scans used by the builder."""

from __future__ import annotations

# Witness set proven deterministic for all n < 3.3 * 10**24, which covers
# every candidate the builder ever tests (lane capacities stay below 2**80).
_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def sqrt_mod(a: int, p: int) -> int | None:
    """A square root of a modulo an odd prime p, or None if a is a
    non-residue.  Returns the smaller of the two roots."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        r = pow(a, (p + 1) // 4, p)
        return min(r, p - r)
    # Tonelli-Shanks for p = 1 mod 4
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    c = pow(z, q, p)
    r = pow(a, (q + 1) // 2, p)
    t = pow(a, q, p)
    m = s
    while t != 1:
        i, tt = 0, t
        while tt != 1:
            tt = tt * tt % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        r = r * b % p
        t = t * b * b % p
        c = b * b % p
        m = i
    return min(r, p - r)


def largest_primes_below(bound: int, count: int, residue_class: tuple[int, int] | None = None) -> list[int]:
    """The `count` largest primes p < bound, descending; optionally p % m == r."""
    out: list[int] = []
    n = bound - 1
    while len(out) < count and n >= 2:
        if residue_class is None or n % residue_class[0] == residue_class[1]:
            if is_prime(n):
                out.append(n)
        n -= 1
    if len(out) < count:
        raise ValueError(f"only {len(out)} primes below {bound}")
    return out
