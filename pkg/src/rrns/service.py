"""HTTP service wrapping the stack: build, persist, exponentiate,
benchmark, and self-check against the integer oracle.

Errors carry a machine-readable kind: "invalid_config" for malformed
requests, "bound_violation" with the failed check's name for rejected
builds or moduli, "state" for operations that need a modulus installed,
and "not_found" for missing artifact directories.  Self-test mismatches
are reported in the response body, not as transport errors.
"""

from __future__ import annotations

import random
import time
from math import gcd
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, costs, modexp, oracle
from .builder import load_config
from .params import BoundViolation
from .stack import MODULUS_NAME, Stack

app = FastAPI(title="rrns", version=__version__)

_CACHE: dict[str, Stack] = {}


def _error(status: int, kind: str, message: str, name: str | None = None):
    detail = {"kind": kind, "message": message}
    if name is not None:
        detail["name"] = name
    return HTTPException(status_code=status, detail=detail)


def _parse_int(text: str, where: str) -> int:
    try:
        s = text.strip().lower()
        return int(s, 16) if s.startswith("0x") else int(s, 10)
    except ValueError:
        raise _error(400, "invalid_config",
                     f"{where}: expected a decimal or 0x-hex integer")


def _load_stack(directory: str, fresh: bool = False) -> Stack:
    """Load a stack artifact, caching by directory and file mtimes.

    Callers that mutate the stack's modulus without saving must pass
    fresh=True so the cached instance stays consistent with disk.
    """
    p = Path(directory)
    if not (p / "manifest.json").exists():
        raise _error(404, "not_found", f"no stack artifact at {directory}")
    key = str(p.resolve())
    mtime = max((p / name).stat().st_mtime_ns
                for name in ("manifest.json", "tables.rrns")
                if (p / name).exists())
    if (p / MODULUS_NAME).exists():
        mtime = max(mtime, (p / MODULUS_NAME).stat().st_mtime_ns)
    cache_key = f"{key}:{mtime}"
    if fresh or cache_key not in _CACHE:
        try:
            stack = Stack.load(p)
        except BoundViolation as exc:
            raise _error(422, "bound_violation", exc.detail, exc.name)
        except ValueError as exc:
            raise _error(400, "invalid_config", str(exc))
        if fresh:
            return stack
        _CACHE.clear()
        _CACHE[cache_key] = stack
    return _CACHE[cache_key]


class BuildRequest(BaseModel):
    config: dict
    directory: str


class CheckRecord(BaseModel):
    name: str
    lhs: str
    rhs: str
    ok: bool


class BuildResponse(BaseModel):
    directory: str
    word_size: int
    style: str
    layer_count: int
    capacity: str
    checks: list[CheckRecord]
    predicted_costs: list[dict]
    tables_sha256: str


@app.post("/stacks/build", response_model=BuildResponse)
def build_stack(req: BuildRequest) -> BuildResponse:
    try:
        cfg = load_config(req.config)
        stack = Stack.build(cfg)
    except BoundViolation as exc:
        raise _error(422, "bound_violation", exc.detail, exc.name)
    except ValueError as exc:
        raise _error(400, "invalid_config", str(exc))
    stack.save(req.directory)
    man = stack.art.manifest
    checks = [CheckRecord(**c) for lay in man["layers"]
              for c in lay["checks"]]
    return BuildResponse(
        directory=str(Path(req.directory)),
        word_size=man["word_size"], style=man["style"],
        layer_count=len(man["layers"]),
        capacity=man["layers"][-1]["capacity"],
        checks=checks, predicted_costs=man["predicted_costs"],
        tables_sha256=man["tables_sha256"])


class SetModulusRequest(BaseModel):
    directory: str
    modulus: str


class SetModulusResponse(BaseModel):
    directory: str
    modulus: str
    capacity: str
    montgomery_factor_bits: int


@app.post("/stacks/set-modulus", response_model=SetModulusResponse)
def set_modulus(req: SetModulusRequest) -> SetModulusResponse:
    stack = _load_stack(req.directory)
    n = _parse_int(req.modulus, "modulus")
    try:
        stack.set_modulus(n)
    except BoundViolation as exc:
        raise _error(422, "bound_violation", exc.detail, exc.name)
    except ValueError as exc:
        raise _error(400, "invalid_config", str(exc))
    stack.save(req.directory)
    return SetModulusResponse(
        directory=req.directory, modulus=hex(n),
        capacity=str(stack.top_geom.params.capacity),
        montgomery_factor_bits=stack.montgomery_factor.bit_length())


class ExpRequest(BaseModel):
    directory: str
    bases: list[str] = Field(min_length=1)
    exponents: list[str] = Field(min_length=1)
    modulus: str | None = None
    verify: bool = False


class Operations(BaseModel):
    table: int
    native: int
    total: int


class ExpResponse(BaseModel):
    results: list[str]
    operations: Operations
    elapsed_seconds: float
    verified: bool | None
    mismatches: int | None


@app.post("/exp", response_model=ExpResponse)
def exponentiate(req: ExpRequest) -> ExpResponse:
    if req.modulus is not None:
        # in-memory modulus, leaves the stored artifact untouched
        stack = _load_stack(req.directory, fresh=True)
        try:
            stack.set_modulus(_parse_int(req.modulus, "modulus"))
        except BoundViolation as exc:
            raise _error(422, "bound_violation", exc.detail, exc.name)
        except ValueError as exc:
            raise _error(400, "invalid_config", str(exc))
    else:
        stack = _load_stack(req.directory)
        if stack.modulus is None:
            raise _error(409, "state",
                         "no modulus installed; run set-modulus first")
    bases = [_parse_int(b, "bases") for b in req.bases]
    exps = [_parse_int(e, "exponents") for e in req.exponents]
    if len(bases) != len(exps):
        raise _error(400, "invalid_config",
                     "bases and exponents must pair up")
    stack.reset_counters()
    t0 = time.monotonic()
    out = modexp.mod_exp_batch(stack, bases, exps)
    elapsed = time.monotonic() - t0
    c = stack.counters
    verified = mism = None
    if req.verify:
        n = stack.modulus
        mism = sum(1 for b, e, v in zip(bases, exps, out)
                   if v != oracle.powmod(b % n, e, n))
        verified = mism == 0
    return ExpResponse(results=[hex(v) for v in out],
                       operations=Operations(**c),
                       elapsed_seconds=elapsed,
                       verified=verified, mismatches=mism)


class BenchRequest(BaseModel):
    directory: str
    products: int = Field(default=100, ge=1, le=100000)
    batch: int = Field(default=1, ge=1, le=4096)


class BenchResponse(BaseModel):
    products: int
    batch: int
    measured_per_product: Operations
    predicted_montgomery: int
    overhead_percent: float
    elapsed_seconds: float


@app.post("/bench", response_model=BenchResponse)
def bench(req: BenchRequest) -> BenchResponse:
    stack = _load_stack(req.directory)
    if stack.modulus is None:
        raise _error(409, "state",
                     "no modulus installed; run set-modulus first")
    n = stack.modulus
    rng = random.Random(2024)
    xs = [rng.randrange(n) for _ in range(req.batch)]
    ys = [rng.randrange(n) for _ in range(req.batch)]
    ex, ey = stack.encode(xs), stack.encode(ys)
    stack.reset_counters()
    t0 = time.monotonic()
    for _ in range(req.products):
        ex = stack.montgomery_product(ex, ey)
    elapsed = time.monotonic() - t0
    c = stack.counters
    per = {k: v // (req.products * req.batch) for k, v in c.items()}
    predicted = stack.art.manifest["predicted_costs"][-1]["montgomery"]
    overhead = 100.0 * (per["total"] - predicted) / predicted
    return BenchResponse(products=req.products, batch=req.batch,
                         measured_per_product=Operations(**per),
                         predicted_montgomery=predicted,
                         overhead_percent=overhead,
                         elapsed_seconds=elapsed)


class SelftestRequest(BaseModel):
    directory: str | None = None
    config: dict | None = None
    trials: int = Field(default=64, ge=1, le=100000)
    seed: int = 7


class SelftestResponse(BaseModel):
    trials: int
    moduli_tested: int
    congruence_failures: int
    closure_failures: int
    roundtrip_failures: int


@app.post("/selftest", response_model=SelftestResponse)
def selftest(req: SelftestRequest) -> SelftestResponse:
    if (req.directory is None) == (req.config is None):
        raise _error(400, "invalid_config",
                     "pass exactly one of directory or config")
    if req.directory is not None:
        stack = _load_stack(req.directory, fresh=True)
    else:
        try:
            stack = Stack.build(load_config(req.config))
        except BoundViolation as exc:
            raise _error(422, "bound_violation", exc.detail, exc.name)
        except ValueError as exc:
            raise _error(400, "invalid_config", str(exc))
    rng = random.Random(req.seed)
    g = stack.top_geom
    style = g.style
    phi = g.params.phi
    cap = g.params.capacity
    base_prod = g.m * g.m_right
    moduli = []
    if stack.modulus is not None:
        moduli.append(stack.modulus)
    while len(moduli) < 3:
        n = rng.randrange(max(2, cap // 2), cap + 1)
        if gcd(n, base_prod) == 1 and n not in moduli:
            moduli.append(n)
    congr = clos = rt = 0
    per = max(1, req.trials // len(moduli))
    for n in moduli:
        stack.set_modulus(n)
        minv = pow(stack.montgomery_factor, -1, n)
        lim = int(phi * n)
        xs, ys = [], []
        for _ in range(per):
            if style == "symmetric":
                xs.append(rng.randrange(-lim // 2, lim // 2))
                ys.append(rng.randrange(-lim // 2, lim // 2))
            else:
                xs.append(rng.randrange(lim))
                ys.append(rng.randrange(lim))
        ex, ey = stack.encode(xs), stack.encode(ys)
        for x, v in zip(xs, stack.decode(ex)):
            if v != oracle.red(x, g.dynamical_range, style):
                rt += 1
        vals = stack.decode(stack.montgomery_product(ex, ey))
        for x, y, v in zip(xs, ys, vals):
            if (v - x * y * minv) % n != 0:
                congr += 1
            if style == "symmetric":
                if not -phi * n <= 2 * v < phi * n:
                    clos += 1
            elif not 0 <= v < phi * n:
                clos += 1
    return SelftestResponse(trials=per * len(moduli),
                            moduli_tested=len(moduli),
                            congruence_failures=congr,
                            closure_failures=clos,
                            roundtrip_failures=rt)


class CostRequest(BaseModel):
    layers: list[list[int]] = Field(min_length=1)
    bits: int | None = None
    word_size: int | None = None


class CostResponse(BaseModel):
    levels: list[dict]
    simplified_level3: int | None
    optimal_bottom_width: float | None
    simplified_min_ops: float | None


@app.post("/cost", response_model=CostResponse)
def cost(req: CostRequest) -> CostResponse:
    sizes = []
    for pair in req.layers:
        if len(pair) != 2 or min(pair) < 1:
            raise _error(400, "invalid_config",
                         "layers: expected [k, l] pairs")
        sizes.append((pair[0], pair[1]))
    levels = [{"add": c.add, "mul": c.mul, "reduce": c.reduce,
               "montgomery": c.mont} for c in costs.predict(sizes)]
    simplified = None
    if len(sizes) == 2:
        simplified = costs.simplified_mont3(sizes[1][0], sizes[0][0])
    width = ops = None
    if req.bits is not None and req.word_size is not None:
        width = costs.optimal_bottom_width(req.bits, req.word_size)
        ops = costs.simplified_min_ops(req.bits, req.word_size)
    return CostResponse(levels=levels, simplified_level3=simplified,
                        optimal_bottom_width=width, simplified_min_ops=ops)


class ManifestResponse(BaseModel):
    manifest: dict


@app.get("/stacks/manifest", response_model=ManifestResponse)
def manifest(directory: str) -> ManifestResponse:
    stack = _load_stack(directory)
    return ManifestResponse(manifest=stack.art.manifest)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}
