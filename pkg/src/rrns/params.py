"""Layer parameter derivation and bound checks, all in exact rationals.

A layer over lower arithmetic with per-product output bound ph (the
lower reduce maps its inputs into ph*n*I) and k left moduli carries

    U    = ph * k * S          wrap-term bound, u in U*M*I
    phi  = U / eps             closure bound for products
    phih = U + 1 - eps         tighter bound when one operand is exact
    B    = floor(M * eps * (1 - eps) / (e * U))   largest supported modulus

Preconditions and the postponed-accumulation inequalities are checked
exactly with Fractions; every violation raises BoundViolation carrying a
stable check name so callers can surface which inequality failed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor

from .intervals import SYMMETRIC, excess


class BoundViolation(ValueError):
    """A named build-time inequality does not hold."""

    def __init__(self, name: str, detail: str):
        super().__init__(f"{name}: {detail}")
        self.name = name
        self.detail = detail


@dataclass(frozen=True)
class LayerParams:
    style: str
    eps: Fraction
    U: Fraction
    phi: Fraction
    phihat: Fraction
    capacity: int  # B, the largest modulus the layer can serve

    @property
    def e(self) -> Fraction:
        return excess(self.style)


def derive_params(m: int, k: int, lower_phihat, eps, style: str,
                  sign_scale: int = 1) -> LayerParams:
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise BoundViolation("eps-range", f"eps = {eps} outside (0, 1)")
    e = excess(style)
    U = Fraction(lower_phihat) * k * sign_scale
    phi = U / eps
    phihat = U + 1 - eps
    capacity = floor(Fraction(m) * eps * (1 - eps) / (e * U))
    if capacity < 1:
        raise BoundViolation("capacity", f"B = {capacity} < 1")
    return LayerParams(style=style, eps=eps, U=U, phi=phi, phihat=phihat,
                       capacity=capacity)


@dataclass(frozen=True)
class Check:
    """One named inequality lhs <= rhs, evaluated exactly."""
    name: str
    lhs: Fraction
    rhs: Fraction

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs

    def enforce(self):
        if not self.ok:
            raise BoundViolation(self.name, f"{self.lhs} > {self.rhs}")

    def as_record(self) -> dict:
        return {"name": self.name, "lhs": str(self.lhs), "rhs": str(self.rhs),
                "ok": self.ok}


def right_product_check(m: int, m_right: int, eps, style: str) -> Check:
    e = excess(style)
    return Check("right-base-product", Fraction(m) * (1 - Fraction(eps)) / e,
                 Fraction(m_right))


def redundant_capacity_check(m0: int, n_lanes: int, lane_phi,
                             style: str) -> Check:
    """M0 large enough to lift the wrap count of an n_lanes extension whose
    inputs are bounded by lane_phi."""
    need = ceil(n_lanes * Fraction(lane_phi))
    if style == SYMMETRIC:
        need += 1
    return Check("redundant-capacity", Fraction(need), Fraction(m0))


def modulus_capacity_check(n: int, capacity: int) -> Check:
    return Check("modulus-capacity", Fraction(n), Fraction(capacity))


def postponed_right_check(phi1, mu_phi, k: int, delta) -> Check:
    """Single trailing reduction after the right-lane accumulation:
    phi1 + k * mu_phi * delta <= phi1^2, delta = max M_i / M_j."""
    phi1 = Fraction(phi1)
    lhs = phi1 + k * Fraction(mu_phi) * Fraction(delta)
    return Check("postponed-right", lhs, phi1 * phi1)


def postponed_left_check(phi1, eta_phi, l: int, omega, delta_p) -> Check:
    """Single trailing reduction after the left-lane accumulation:
    omega + l * eta_phi * delta' <= phi1^2, omega = max M0 / M_i,
    delta' = max M_j / M_i."""
    phi1 = Fraction(phi1)
    lhs = Fraction(omega) + l * Fraction(eta_phi) * Fraction(delta_p)
    return Check("postponed-left", lhs, phi1 * phi1)
