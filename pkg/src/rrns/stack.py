"""Stack facade: build or load a layered stack, encode and decode values
at the big-integer boundary, run Montgomery products, and persist
artifacts.

Artifact directory layout:
    manifest.json   canonical JSON: geometry, checks, plans, digests
    tables.rrns     binary lookup tables
    modulus.json    served modulus and constant digest (once installed)

Only the boundary conversions here touch big-integer arithmetic; the hot
path stays inside the engines.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import oracle
from .builder import (BuildConfig, StackArtifacts, build_stack_artifacts,
                      canonical_json, layer_constants, load_config,
                      sha256_hex)
from .engine import TableLayerEngine, TowerEngine, TowerRep, encode_residues
from .intervals import red
from .params import modulus_capacity_check
from .tables import TableSet

MANIFEST_NAME = "manifest.json"
TABLES_NAME = "tables.rrns"
MODULUS_NAME = "modulus.json"


class Stack:
    def __init__(self, art: StackArtifacts):
        self.art = art
        self.tables = art.tables
        self.style = art.config.style
        self.base = TableLayerEngine(art.tables, art.base_geom,
                                     art.bottom_order)
        if art.tower_geom is not None:
            self.base.set_targets(art.base_targets, art.base_consts)
            self.tower = TowerEngine(self.base, art.tower_geom)
        else:
            self.tower = None
        self._modulus: int | None = None
        self._top_consts = None

    # -- construction -------------------------------------------------

    @classmethod
    def build(cls, config) -> "Stack":
        if not isinstance(config, BuildConfig):
            config = load_config(config)
        return cls(build_stack_artifacts(config))

    @classmethod
    def load(cls, directory) -> "Stack":
        p = Path(directory)
        manifest = json.loads((p / MANIFEST_NAME).read_text())
        art = build_stack_artifacts(load_config(manifest["config"]))
        if canonical_json(art.manifest) != canonical_json(manifest):
            raise ValueError(f"{p}: manifest does not match its config")
        blob = (p / TABLES_NAME).read_bytes()
        if sha256_hex(blob) != manifest["tables_sha256"]:
            raise ValueError(f"{p}: table digest mismatch")
        TableSet.load(blob, manifest["style"])  # format round-trip check
        stack = cls(art)
        mpath = p / MODULUS_NAME
        if mpath.exists():
            mrec = json.loads(mpath.read_text())
            stack.set_modulus(int(mrec["modulus"], 16))
            got = sha256_hex(canonical_json(
                stack._top_consts.as_record()).encode())
            if got != mrec["constants_sha256"]:
                raise ValueError(f"{p}: modulus constant digest mismatch")
        return stack

    def save(self, directory):
        p = Path(directory)
        p.mkdir(parents=True, exist_ok=True)
        (p / MANIFEST_NAME).write_text(canonical_json(self.art.manifest)
                                       + "\n")
        (p / TABLES_NAME).write_bytes(self.tables.dump())
        if self._modulus is not None:
            rec = {"modulus": hex(self._modulus),
                   "constants_sha256": sha256_hex(canonical_json(
                       self._top_consts.as_record()).encode())}
            (p / MODULUS_NAME).write_text(canonical_json(rec) + "\n")
        return p

    # -- geometry ------------------------------------------------------

    @property
    def top_geom(self):
        return (self.art.tower_geom if self.art.tower_geom is not None
                else self.art.base_geom)

    @property
    def montgomery_factor(self) -> int:
        return self.top_geom.m

    @property
    def modulus(self) -> int | None:
        return self._modulus

    def set_modulus(self, n: int):
        g = self.top_geom
        modulus_capacity_check(n, g.params.capacity).enforce()
        consts = layer_constants(g, n)
        if self.tower is not None:
            self.tower.set_constants(consts)
        else:
            self.base.set_targets((n,), [consts])
        self._modulus = n
        self._top_consts = consts
        return consts

    def _require_modulus(self):
        if self._modulus is None:
            raise RuntimeError("no modulus installed; call set_modulus")

    # -- counters ------------------------------------------------------

    @property
    def counters(self) -> dict:
        c = self.tables.counter
        return {"table": c.table, "native": c.native, "total": c.total}

    def reset_counters(self):
        self.tables.counter.reset()

    # -- boundary conversions -----------------------------------------

    def encode(self, values):
        """Encode an int, or a sequence of ints, into the top-layer
        representation."""
        self._require_modulus()
        batch = isinstance(values, (list, tuple))
        vals = list(values) if batch else [values]
        g = self.top_geom
        cs = self._top_consts
        st = self.style
        if self.tower is None:
            out = np.empty((len(vals), self.base.nb), dtype=np.int16)
            for r, x in enumerate(vals):
                x = int(x)
                out[r, self.base.m0_pos] = red(x, g.m0, st)
                for pos, mi, hv in zip(self.base.left_pos, g.left,
                                       cs.hinv_left):
                    out[r, pos] = red(x * hv, mi, st)
                for pos, mj, hv in zip(self.base.right_pos, g.right,
                                       cs.hinv_right):
                    out[r, pos] = red(x * hv, mj, st)
            return out if batch else out[0]
        lanes = np.empty((len(vals), self.tower.ntop, self.base.nb),
                         dtype=np.int16)
        x0 = np.empty((len(vals),), dtype=np.int64)
        order = self.base.order
        for r, x in enumerate(vals):
            x = int(x)
            x0[r] = red(x, g.m0, st)
            for s, (ms, hv) in enumerate(zip(g.left + g.right,
                                             cs.hinv_left + cs.hinv_right)):
                lanes[r, s] = encode_residues(red(x * hv, ms, st), order, st)
        rep = TowerRep(x0=x0, lanes=lanes)
        return rep if batch else TowerRep(x0=x0[0], lanes=lanes[0])

    def decode(self, rep):
        """Decode a representation back to the canonical integer in the
        stack's dynamical range."""
        self._require_modulus()
        g = self.top_geom
        cs = self._top_consts
        st = self.style
        order = list(self.base.order)
        if self.tower is None:
            arr = np.asarray(rep)
            batch = arr.ndim == 2
            rows = arr if batch else arr[None, :]
            out = []
            for row in rows:
                digits = [int(row[self.base.m0_pos])]
                moduli = [g.m0]
                for pos, mi, h in zip(self.base.left_pos, g.left,
                                      cs.h_left):
                    digits.append(red(h * int(row[pos]), mi, st))
                    moduli.append(mi)
                for pos, mj, h in zip(self.base.right_pos, g.right,
                                      cs.h_right):
                    digits.append(red(h * int(row[pos]), mj, st))
                    moduli.append(mj)
                d = g.dynamical_range
                out.append(red(oracle.crt(digits, moduli), d, st))
            return out if batch else out[0]
        batch = rep.lanes.ndim == 3
        x0s = np.atleast_1d(rep.x0)
        lanes = rep.lanes if batch else rep.lanes[None, ...]
        low_d = self.art.base_geom.dynamical_range
        out = []
        for r in range(lanes.shape[0]):
            digits = [int(x0s[r])]
            moduli = [g.m0]
            for s, (ms, h) in enumerate(zip(g.left + g.right,
                                            cs.h_left + cs.h_right)):
                alpha = red(oracle.crt([int(v) for v in lanes[r, s]], order),
                            low_d, st)
                digits.append(red(h * alpha, ms, st))
                moduli.append(ms)
            d = g.dynamical_range
            out.append(red(oracle.crt(digits, moduli), d, st))
        return out if batch else out[0]

    # -- arithmetic ----------------------------------------------------

    def montgomery_product(self, x, y):
        self._require_modulus()
        if self.tower is not None:
            return self.tower.montmul(x, y)
        w = self.base.alg1(x, y)
        return self.base.reduce(w[..., None, :])[..., 0, :]

    def select(self, cond, a, b):
        """Elementwise representation select; cond is a boolean batch."""
        cond = np.asarray(cond)
        if self.tower is not None:
            return TowerRep.where(cond, a, b)
        return np.where(cond[..., None], a, b)
