"""Stack construction: base partitioning, layer geometry, bound checks,
accumulation planning, and precomputation of reduction constants.

A stack is one or two layers over the bottom table moduli.  A layer's
geometry fixes its left base (the residues that carry the value), right
base (the Montgomery scratch base), redundant modulus, and interval
parameters.  Constants depend on the served modulus n and are recomputed
deterministically from the geometry, so artifacts store only the
configuration plus digests of the derived data.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, prod
from pathlib import Path

from .intervals import STANDARD, STYLES, SYMMETRIC, red
from .params import (BoundViolation, Check, LayerParams, derive_params,
                     modulus_capacity_check, right_product_check,
                     redundant_capacity_check)
from .primes import is_prime, largest_primes_below, sqrt_mod
from .tables import TableSet
from . import costs


def _inv(a: int, n: int) -> int:
    return pow(a % n, -1, n)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# ---------------------------------------------------------------------------
# configuration

FLAG_NAMES = ("fuse_left_scaling", "fuse_right_scaling",
              "postponed_reduction_left", "postponed_reduction_right")


@dataclass(frozen=True)
class Flags:
    fuse_left_scaling: bool = False
    fuse_right_scaling: bool = False
    postponed_reduction_left: bool = False
    postponed_reduction_right: bool = False

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in FLAG_NAMES}


@dataclass(frozen=True)
class LayerSpec:
    eps: Fraction
    base_count: int | None = None
    residue_class: tuple[int, int] | None = None
    moduli: tuple[int, ...] | None = None
    partition: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    redundant_cofactor: int | None = None


@dataclass(frozen=True)
class BuildConfig:
    word_size: int
    style: str
    bottom_redundant: int
    bottom_moduli: tuple[int, ...]
    bottom_partition: tuple[tuple[int, ...], tuple[int, ...]] | None
    layers: tuple[LayerSpec, ...]
    flags: Flags


def _require_keys(obj: dict, where: str, required: set, optional: set):
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: expected an object")
    keys = set(obj)
    missing = required - keys
    unknown = keys - required - optional
    if missing:
        raise ValueError(f"{where}: missing {sorted(missing)}")
    if unknown:
        raise ValueError(f"{where}: unknown {sorted(unknown)}")


def _as_int(v, where: str) -> int:
    if isinstance(v, bool):
        raise ValueError(f"{where}: expected an integer")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        return int(v, 10)
    raise ValueError(f"{where}: expected an integer or decimal string")


def _as_moduli(v, where: str) -> tuple[int, ...]:
    if not isinstance(v, list) or not v:
        raise ValueError(f"{where}: expected a non-empty list")
    return tuple(_as_int(x, where) for x in v)


def _parse_partition(v, where: str):
    if v == "auto" or v is None:
        return None
    _require_keys(v, where, {"left", "right"}, set())
    return (_as_moduli(v["left"], where + ".left"),
            _as_moduli(v["right"], where + ".right"))


def load_config(src) -> BuildConfig:
    if isinstance(src, (str, Path)):
        obj = json.loads(Path(src).read_text())
    else:
        obj = src
    _require_keys(obj, "config", {"word_size", "style", "bottom", "layers"},
                  {"flags"})
    t = _as_int(obj["word_size"], "word_size")
    style = obj["style"]
    if style not in STYLES:
        raise ValueError(f"style: expected one of {sorted(STYLES)}")
    bot = obj["bottom"]
    _require_keys(bot, "bottom", {"redundant", "moduli"}, {"partition"})
    redundant = _as_int(bot["redundant"], "bottom.redundant")
    moduli = _as_moduli(bot["moduli"], "bottom.moduli")
    bottom_partition = _parse_partition(bot.get("partition"),
                                        "bottom.partition")
    raw_layers = obj["layers"]
    if not isinstance(raw_layers, list) or not 1 <= len(raw_layers) <= 2:
        raise ValueError("layers: expected a list of one or two layers")
    layers = []
    for idx, lay in enumerate(raw_layers):
        where = f"layers[{idx}]"
        if idx == 0:
            _require_keys(lay, where, {"eps"}, set())
            layers.append(LayerSpec(eps=Fraction(lay["eps"])))
            continue
        _require_keys(lay, where, {"eps", "base", "redundant_cofactor"}, set())
        base = lay["base"]
        count = rc = mods = part = None
        if isinstance(base, dict) and "rule" in base:
            _require_keys(base, where + ".base", {"rule", "count"},
                          {"residue_class"})
            if base["rule"] != "largest-primes":
                raise ValueError(f"{where}.base.rule: unknown rule")
            count = _as_int(base["count"], where + ".base.count")
            if base.get("residue_class") is not None:
                m, r = base["residue_class"]
                rc = (_as_int(m, where), _as_int(r, where))
        else:
            _require_keys(base, where + ".base", {"moduli"}, {"partition"})
            mods = _as_moduli(base["moduli"], where + ".base.moduli")
            part = _parse_partition(base.get("partition"),
                                    where + ".base.partition")
        layers.append(LayerSpec(
            eps=Fraction(lay["eps"]), base_count=count, residue_class=rc,
            moduli=mods, partition=part,
            redundant_cofactor=_as_int(lay["redundant_cofactor"],
                                       where + ".redundant_cofactor")))
    fl = obj.get("flags", {})
    _require_keys(fl, "flags", set(), set(FLAG_NAMES))
    for name, v in fl.items():
        if not isinstance(v, bool):
            raise ValueError(f"flags.{name}: expected a boolean")
    return BuildConfig(word_size=t, style=style, bottom_redundant=redundant,
                       bottom_moduli=moduli, bottom_partition=bottom_partition,
                       layers=tuple(layers), flags=Flags(**fl))


def config_to_dict(cfg: BuildConfig) -> dict:
    def part(p):
        if p is None:
            return "auto"
        return {"left": [str(v) for v in p[0]],
                "right": [str(v) for v in p[1]]}

    layers = [{"eps": str(cfg.layers[0].eps)}]
    for lay in cfg.layers[1:]:
        if lay.moduli is not None:
            base = {"moduli": [str(v) for v in lay.moduli],
                    "partition": part(lay.partition)}
        else:
            base = {"rule": "largest-primes", "count": lay.base_count,
                    "residue_class": list(lay.residue_class)
                    if lay.residue_class else None}
        layers.append({"eps": str(lay.eps), "base": base,
                       "redundant_cofactor": lay.redundant_cofactor})
    return {"word_size": cfg.word_size, "style": cfg.style,
            "bottom": {"redundant": cfg.bottom_redundant,
                       "moduli": list(cfg.bottom_moduli),
                       "partition": part(cfg.bottom_partition)},
            "layers": layers, "flags": cfg.flags.as_dict()}


# ---------------------------------------------------------------------------
# base partitioning

def partition_base(moduli, eps, style: str):
    """Split moduli into (left, right) maximizing prod(left) subject to
    prod(right) >= prod(left) * (1 - eps) / e.  Exhaustive for up to 20
    moduli with a deterministic tie-break (lexicographically smallest left
    tuple in descending order); greedy with repair and swap passes above.
    """
    mods = tuple(sorted(moduli, reverse=True))
    n = len(mods)
    if n < 2:
        raise ValueError("a base needs at least two moduli")
    eps = Fraction(eps)
    tau = (1 - eps) / Fraction(1) if style == STANDARD else (1 - eps) * 2
    total = prod(mods)

    def feasible(m_left: int, m_right: int) -> bool:
        return m_right * tau.denominator >= tau.numerator * m_left

    if n <= 20:
        prods = [1] * (1 << n)
        for mask in range(1, 1 << n):
            low = (mask & -mask).bit_length() - 1
            prods[mask] = prods[mask ^ (1 << low)] * mods[low]
        best_m, best_mask, best_left = 0, 0, None
        for mask in range(1, (1 << n) - 1):
            m = prods[mask]
            if m < best_m or not feasible(m, total // m):
                continue
            cand = tuple(mods[i] for i in range(n) if mask >> i & 1)
            if m > best_m or (best_left is not None and cand < best_left):
                best_m, best_mask, best_left = m, mask, cand
        if best_left is None:
            raise BoundViolation("right-base-product",
                                 "no feasible left/right split exists")
        left = best_left
        right = tuple(mods[i] for i in range(n) if not best_mask >> i & 1)
        return left, right

    left, right = [], []
    pl = pr = 1
    for v in mods:
        if pl <= pr:
            left.append(v)
            pl *= v
        else:
            right.append(v)
            pr *= v
    while not feasible(pl, pr):
        if len(left) < 2:
            raise BoundViolation("right-base-product",
                                 "no feasible left/right split exists")
        v = min(left)
        left.remove(v)
        right.append(v)
        pl //= v
        pr *= v
    improved = True
    while improved:
        improved = False
        for v in sorted(right, reverse=True):
            if feasible(pl * v, pr // v):
                right.remove(v)
                left.append(v)
                pl *= v
                pr //= v
                improved = True
        for li in sorted(left):
            hit = False
            for rj in sorted(right, reverse=True):
                if rj > li and feasible(pl // li * rj, pr // rj * li):
                    left.remove(li)
                    right.remove(rj)
                    left.append(rj)
                    right.append(li)
                    pl = pl // li * rj
                    pr = pr // rj * li
                    improved = hit = True
                    break
            if hit:
                break
    return (tuple(sorted(left, reverse=True)),
            tuple(sorted(right, reverse=True)))


# ---------------------------------------------------------------------------
# accumulation plans

@dataclass(frozen=True)
class AccumulationPlan:
    """Group sizes per stage.  Stage 0 partitions the term list in order;
    each later stage partitions the previous stage's group outputs."""
    stages: tuple[tuple[int, ...], ...]

    @property
    def reductions(self) -> int:
        return sum(len(stage) for stage in self.stages)

    def as_record(self) -> list:
        return [list(stage) for stage in self.stages]


def plan_site(site: str, sigmas: list, budget: Fraction,
              stage2_sigma: Fraction, postponed: bool) -> AccumulationPlan:
    """First-fit staging of accumulation terms under the exact budget;
    with postponed=True require a single trailing reduction instead."""
    sigmas = [Fraction(s) for s in sigmas]
    total = sum(sigmas)
    if postponed:
        if total > budget:
            raise BoundViolation(f"postponed-{site}",
                                 f"accumulated expansion {total} > {budget}")
        return AccumulationPlan(stages=((len(sigmas),),))
    stages = []
    cur = sigmas
    while True:
        groups = []
        acc = Fraction(0)
        size = 0
        for s in cur:
            if s > budget:
                raise BoundViolation(
                    "accumulation-budget",
                    f"single term expansion {s} > {budget} at {site} site")
            if size and acc + s > budget:
                groups.append(size)
                acc = Fraction(0)
                size = 0
            acc += s
            size += 1
        groups.append(size)
        stages.append(tuple(groups))
        if len(groups) == 1:
            return AccumulationPlan(stages=tuple(stages))
        cur = [stage2_sigma] * len(groups)


# ---------------------------------------------------------------------------
# layer geometry

@dataclass(frozen=True)
class LayerGeometry:
    style: str
    left: tuple[int, ...]
    right: tuple[int, ...]
    m0: int
    m0_factors: tuple[int, int] | None  # (radix, quotient), radix * quotient = m0
    lower_factor: int                   # Montgomery divisor of lane arithmetic
    lower_phi: Fraction
    lower_phihat: Fraction
    params: LayerParams
    eta_phi: Fraction
    fuse_left: bool
    fuse_right: bool
    plan_right: AccumulationPlan | None
    plan_left: AccumulationPlan | None
    checks: tuple[Check, ...]
    m: int
    m_right: int

    @property
    def exact_lanes(self) -> bool:
        return self.lower_factor == 1

    @property
    def dynamical_range(self) -> int:
        return self.m0 * self.m * self.m_right


def build_layer_geometry(*, style: str, eps, left, right, m0: int,
                         m0_factors, lower_factor: int, lower_phi,
                         lower_phihat, fuse_left: bool, fuse_right: bool,
                         postponed_left: bool,
                         postponed_right: bool) -> LayerGeometry:
    left = tuple(sorted(left, reverse=True))
    right = tuple(sorted(right, reverse=True))
    lower_phi = Fraction(lower_phi)
    lower_phihat = Fraction(lower_phihat)
    m = prod(left)
    m_right = prod(right)
    k, l = len(left), len(right)
    params = derive_params(m, k, lower_phihat, eps, style)
    if fuse_left:
        bad = [Mi for Mi in left
               if not (is_prime(Mi) and Mi % 4 == 3)]
        if style != SYMMETRIC or bad:
            raise BoundViolation(
                "scaling-fusion-unsupported",
                "left-scaling fusion needs symmetric intervals and prime "
                f"left moduli congruent 3 mod 4; offending: {bad or style}")
    eta_phi = lower_phi if fuse_right else lower_phihat
    checks = [right_product_check(m, m_right, eps, style),
              redundant_capacity_check(m0, l, eta_phi, style)]
    for c in checks:
        c.enforce()
    exact = lower_factor == 1
    if exact:
        plan_right = plan_left = None
    else:
        if m0_factors is None:
            raise ValueError("a stacked layer needs a factored redundant "
                             "modulus for digit extraction")
        radix, quot = m0_factors
        if radix * quot != m0:
            raise ValueError("redundant factors do not multiply to m0")
        if m0.bit_length() > 31:
            raise ValueError("redundant modulus too wide for native lanes")
        budget = lower_phi * lower_phi
        min_l, min_r = min(left), min(right)
        sig_right = ([lower_phi]
                     + [lower_phihat * Fraction(Mi, min_r) for Mi in left])
        sig_left = ([Fraction(radix, min_l), Fraction(quot + 1, min_l)]
                    + [eta_phi * Fraction(Mj, min_l) for Mj in right])
        plan_right = plan_site("right", sig_right, budget, lower_phihat,
                               postponed_right)
        plan_left = plan_site("left", sig_left, budget, lower_phihat,
                              postponed_left)
        if postponed_right:
            checks.append(Check("postponed-right", sum(sig_right), budget))
        if postponed_left:
            checks.append(Check("postponed-left", sum(sig_left), budget))
    return LayerGeometry(
        style=style, left=left, right=right, m0=m0, m0_factors=m0_factors,
        lower_factor=lower_factor, lower_phi=lower_phi,
        lower_phihat=lower_phihat, params=params, eta_phi=eta_phi,
        fuse_left=fuse_left, fuse_right=fuse_right, plan_right=plan_right,
        plan_left=plan_left, checks=tuple(checks), m=m, m_right=m_right)


def layer_record(geom: LayerGeometry, extra_checks=()) -> dict:
    rec = {
        "eps": str(geom.params.eps),
        "left": [str(v) for v in geom.left],
        "right": [str(v) for v in geom.right],
        "redundant": str(geom.m0),
        "redundant_factors": list(geom.m0_factors) if geom.m0_factors
        else None,
        "lower_factor": str(geom.lower_factor),
        "wrap_bound": str(geom.params.U),
        "closure_bound": str(geom.params.phi),
        "exact_operand_bound": str(geom.params.phihat),
        "eta_bound": str(geom.eta_phi),
        "capacity": str(geom.params.capacity),
        "fuse_left_scaling": geom.fuse_left,
        "fuse_right_scaling": geom.fuse_right,
        "plans": None if geom.plan_right is None else {
            "right": geom.plan_right.as_record(),
            "left": geom.plan_left.as_record()},
        "checks": [c.as_record() for c in
                   tuple(geom.checks) + tuple(extra_checks)],
    }
    return rec


# ---------------------------------------------------------------------------
# reduction constants

@dataclass(frozen=True)
class LayerConstants:
    """Style-canonical constant values for one served modulus.  acc_*
    fields are premultiplied by the lane Montgomery factor so they can be
    used directly as accumulation-term multipliers."""
    modulus: int
    signs: tuple[int, ...]
    h_left: tuple[int, ...]
    h_right: tuple[int, ...]
    hinv_left: tuple[int, ...]
    hinv_right: tuple[int, ...]
    c: tuple[int, ...] | None
    d00: int
    d0i: tuple[int, ...]
    dj0: tuple[int, ...]
    dji: tuple[tuple[int, ...], ...]
    e: tuple[int, ...] | None
    f00: int
    f0j: tuple[int, ...]
    gi0: tuple[int, ...]
    gij: tuple[tuple[int, ...], ...]
    acc_dj0: tuple[int, ...]
    acc_dji: tuple[tuple[int, ...], ...]
    acc_gij: tuple[tuple[int, ...], ...]
    acc_gi0_a: tuple[int, ...]
    acc_gi0_b: tuple[int, ...] | None
    acc_one_left: tuple[int, ...]
    acc_one_right: tuple[int, ...]

    def as_record(self) -> dict:
        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            return v
        return {name: plain(getattr(self, name))
                for name in self.__dataclass_fields__}


def layer_constants(geom: LayerGeometry, n: int) -> LayerConstants:
    st = geom.style
    ml = geom.lower_factor
    left, right, m0 = geom.left, geom.right, geom.m0
    big_m, big_mp = geom.m, geom.m_right
    if n < 2:
        raise ValueError("served modulus must be at least 2")
    if gcd(n, big_m * big_mp) != 1:
        raise BoundViolation("coprimality",
                             f"modulus {n} shares a factor with the base")

    signs, h_left, k_left = [], [], []
    for Mi in left:
        if geom.fuse_left:
            found = False
            for s in (1, -1):
                kv = (-n * s * (big_m // Mi)) % Mi
                hv = kv * _inv(ml, Mi) % Mi
                rt = sqrt_mod(hv, Mi)
                if rt is not None:
                    signs.append(s)
                    k_left.append(red(kv, Mi, st))
                    h_left.append(red(rt, Mi, st))
                    found = True
                    break
            if not found:
                raise BoundViolation(
                    "scaling-fusion-unsupported",
                    f"no admissible sign on lane {Mi} for modulus {n}")
        else:
            signs.append(1)
            h = _inv(ml, Mi)
            h_left.append(red(h, Mi, st))
            k_left.append(red(ml * h * h, Mi, st))
    h_right = []
    for Mj in right:
        h = (big_mp // Mj) % Mj if geom.fuse_right else _inv(ml, Mj)
        h_right.append(red(h, Mj, st))

    c = None
    if not geom.fuse_left:
        c = tuple(red(-_inv(n, Mi) * kv * _inv(big_m // Mi, Mi) * s * ml,
                      Mi, st)
                  for Mi, kv, s in zip(left, k_left, signs))
    d00 = red(_inv(big_m, m0), m0, st)
    d0i = tuple(red(s * n * _inv(Mi, m0), m0, st)
                for s, Mi in zip(signs, left))
    dj0 = tuple(red(ml * hj * _inv(big_m, Mj), Mj, st)
                for hj, Mj in zip(h_right, right))
    dji = tuple(tuple(red(s * _inv(Mi, Mj) * n * _inv(hj, Mj), Mj, st)
                      for s, Mi in zip(signs, left))
                for hj, Mj in zip(h_right, right))
    e = None
    if not geom.fuse_right:
        e = tuple(red(hj * _inv(big_mp // Mj, Mj) * ml, Mj, st)
                  for hj, Mj in zip(h_right, right))
    f00 = red(-_inv(big_mp, m0), m0, st)
    f0j = tuple(red(_inv(Mj, m0), m0, st) for Mj in right)
    gi0 = tuple(red(-big_mp * _inv(hi, Mi), Mi, st)
                for hi, Mi in zip(h_left, left))
    gij = tuple(tuple(red((big_mp // Mj) * _inv(hi, Mi), Mi, st)
                      for Mj in right)
                for hi, Mi in zip(h_left, left))

    acc_dj0 = tuple(red(ml * v, Mj, st) for v, Mj in zip(dj0, right))
    acc_dji = tuple(tuple(red(ml * v, Mj, st) for v in row)
                    for row, Mj in zip(dji, right))
    acc_gij = tuple(tuple(red(ml * v, Mi, st) for v in row)
                    for row, Mi in zip(gij, left))
    acc_gi0_a = tuple(red(ml * v, Mi, st) for v, Mi in zip(gi0, left))
    acc_gi0_b = None
    if geom.m0_factors is not None:
        radix = geom.m0_factors[0]
        acc_gi0_b = tuple(red(ml * v * radix, Mi, st)
                          for v, Mi in zip(gi0, left))
    acc_one_left = tuple(red(ml, Mi, st) for Mi in left)
    acc_one_right = tuple(red(ml, Mj, st) for Mj in right)

    return LayerConstants(
        modulus=n, signs=tuple(signs), h_left=tuple(h_left),
        h_right=tuple(h_right),
        hinv_left=tuple(red(_inv(h, Mi), Mi, st)
                        for h, Mi in zip(h_left, left)),
        hinv_right=tuple(red(_inv(h, Mj), Mj, st)
                         for h, Mj in zip(h_right, right)),
        c=c, d00=d00, d0i=d0i, dj0=dj0, dji=dji, e=e, f00=f00, f0j=f0j,
        gi0=gi0, gij=gij, acc_dj0=acc_dj0, acc_dji=acc_dji, acc_gij=acc_gij,
        acc_gi0_a=acc_gi0_a, acc_gi0_b=acc_gi0_b,
        acc_one_left=acc_one_left, acc_one_right=acc_one_right)


# ---------------------------------------------------------------------------
# stack assembly

@dataclass
class StackArtifacts:
    config: BuildConfig
    tables: TableSet
    bottom_order: tuple[int, ...]
    base_geom: LayerGeometry
    base_targets: tuple[int, ...] | None
    base_consts: list[LayerConstants] | None
    tower_geom: LayerGeometry | None
    manifest: dict


def _check_pairwise_coprime(moduli, where: str):
    mods = list(moduli)
    for i in range(len(mods)):
        for j in range(i + 1, len(mods)):
            if gcd(mods[i], mods[j]) != 1:
                raise BoundViolation(
                    "coprimality",
                    f"{where}: {mods[i]} and {mods[j]} share a factor")


def _normalize_partition(pool, explicit, where: str):
    left, right = explicit
    if sorted(left + right) != sorted(pool):
        raise ValueError(f"{where}: partition does not cover the base")
    return (tuple(sorted(left, reverse=True)),
            tuple(sorted(right, reverse=True)))


def build_stack_artifacts(cfg: BuildConfig) -> StackArtifacts:
    t, style = cfg.word_size, cfg.style
    word = 1 << t
    for v in (cfg.bottom_redundant,) + cfg.bottom_moduli:
        if not 2 <= v <= word:
            raise ValueError(f"bottom modulus {v} does not fit {t}-bit words")
    _check_pairwise_coprime((cfg.bottom_redundant,) + cfg.bottom_moduli,
                            "bottom")
    spec0 = cfg.layers[0]
    if cfg.bottom_partition is not None:
        left0, right0 = _normalize_partition(cfg.bottom_moduli,
                                             cfg.bottom_partition,
                                             "bottom.partition")
        right_product_check(prod(left0), prod(right0), spec0.eps,
                            style).enforce()
    else:
        left0, right0 = partition_base(cfg.bottom_moduli, spec0.eps, style)
    single = len(cfg.layers) == 1
    fl = cfg.flags
    geom0 = build_layer_geometry(
        style=style, eps=spec0.eps, left=left0, right=right0,
        m0=cfg.bottom_redundant, m0_factors=None, lower_factor=1,
        lower_phi=Fraction(1), lower_phihat=Fraction(1),
        fuse_left=single and fl.fuse_left_scaling,
        fuse_right=single and fl.fuse_right_scaling,
        postponed_left=False, postponed_right=False)
    bottom_order = (cfg.bottom_redundant,) + geom0.left + geom0.right
    tables = TableSet(t, style, bottom_order)

    base_targets = base_consts = tower_geom = None
    tower_extra_checks = ()
    if not single:
        spec1 = cfg.layers[1]
        b1 = geom0.params.capacity
        if spec1.moduli is not None:
            pool = spec1.moduli
            for v in pool:
                modulus_capacity_check(v, b1).enforce()
        else:
            pool = tuple(largest_primes_below(b1, spec1.base_count,
                                              spec1.residue_class))
            if len(pool) < spec1.base_count:
                raise ValueError("not enough primes below the layer capacity")
        _check_pairwise_coprime(pool, "stacked base")
        lower_dyn = geom0.dynamical_range
        for v in pool:
            if gcd(v, lower_dyn) != 1:
                raise BoundViolation(
                    "coprimality",
                    f"stacked modulus {v} shares a factor with the bottom")
        cof = spec1.redundant_cofactor
        if cof not in geom0.right:
            raise ValueError("redundant_cofactor must be one of the lower "
                             "right-base moduli")
        if spec1.partition is not None:
            left1, right1 = _normalize_partition(pool, spec1.partition,
                                                 "base.partition")
        else:
            left1, right1 = partition_base(pool, spec1.eps, style)
        tower_geom = build_layer_geometry(
            style=style, eps=spec1.eps, left=left1, right=right1,
            m0=cfg.bottom_redundant * cof,
            m0_factors=(cof, cfg.bottom_redundant),
            lower_factor=geom0.m, lower_phi=geom0.params.phi,
            lower_phihat=geom0.params.phihat,
            fuse_left=fl.fuse_left_scaling, fuse_right=fl.fuse_right_scaling,
            postponed_left=fl.postponed_reduction_left,
            postponed_right=fl.postponed_reduction_right)
        base_targets = tower_geom.left + tower_geom.right
        cap = modulus_capacity_check(max(base_targets), b1)
        cap.enforce()
        tower_extra_checks = (cap,)
        base_consts = [layer_constants(geom0, s) for s in base_targets]

    sizes = [(len(geom0.left), len(geom0.right))]
    if tower_geom is not None:
        sizes.append((len(tower_geom.left), len(tower_geom.right)))
    predicted = costs.predict(sizes)

    manifest = {
        "format": "rrns-stack",
        "version": 1,
        "word_size": t,
        "style": style,
        "bottom": {"redundant": cfg.bottom_redundant,
                   "order": list(bottom_order),
                   "left": list(geom0.left), "right": list(geom0.right)},
        "layers": ([layer_record(geom0)] +
                   ([layer_record(tower_geom, tower_extra_checks)]
                    if tower_geom is not None else [])),
        "flags": fl.as_dict(),
        "predicted_costs": [{"add": c.add, "mul": c.mul,
                             "reduce": c.reduce, "montgomery": c.mont}
                            for c in predicted],
        "config": config_to_dict(cfg),
        "tables_sha256": sha256_hex(tables.dump()),
        "base_constants_sha256": (
            sha256_hex(canonical_json(
                [c.as_record() for c in base_consts]).encode())
            if base_consts is not None else None),
    }
    return StackArtifacts(config=cfg, tables=tables,
                          bottom_order=bottom_order, base_geom=geom0,
                          base_targets=base_targets, base_consts=base_consts,
                          tower_geom=tower_geom, manifest=manifest)
