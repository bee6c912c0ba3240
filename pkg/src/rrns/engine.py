"""Carry-free execution engines.

TableLayerEngine runs the reduction algorithm for a layer whose lanes are
bottom table moduli; every arithmetic step is a table gather, so residues
stay exact and no staging is needed.  TowerEngine runs the same algorithm
one level up: its lane values are representations handled by a
TableLayerEngine, its redundant modulus is native machine arithmetic, and
accumulation follows the plan frozen in the geometry.

No module here performs big-integer arithmetic on values; the only native
operations are on the tower's redundant channel, which is bounded well
below 2**31 at build time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .builder import LayerConstants, LayerGeometry
from .intervals import SYMMETRIC, red
from .tables import TableSet


def encode_residues(value: int, moduli, style: str) -> np.ndarray:
    return np.array([red(value, m, style) for m in moduli], dtype=np.int16)


def _encode_rows(values, moduli, style: str) -> np.ndarray:
    """Encode a nested tuple of ints into an array with one trailing
    residue axis."""
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape + (len(moduli),), dtype=np.int16)
    for idx in np.ndindex(arr.shape):
        out[idx] = encode_residues(int(arr[idx]), moduli, style)
    return out


class TableLayerEngine:
    """Reduction over exact table lanes for a set of served moduli."""

    def __init__(self, tables: TableSet, geom: LayerGeometry,
                 bottom_order: tuple[int, ...]):
        if tuple(tables.moduli) != tuple(bottom_order):
            raise ValueError("table lane order does not match the stack")
        self.tables = tables
        self.geom = geom
        self.order = tuple(bottom_order)
        self.nb = len(bottom_order)
        self.m0_pos = 0
        self.left_pos = np.array([self.order.index(v) for v in geom.left])
        self.right_pos = np.array([self.order.index(v) for v in geom.right])
        self.all_ids = np.arange(self.nb)
        self.left_ids = self.left_pos
        self.right_ids = self.right_pos
        self.targets: tuple[int, ...] | None = None
        self.consts: list[LayerConstants] | None = None
        self._c = self._d0i = self._dji = None
        self._d00 = self._f00 = None
        self._dj0 = self._e = self._f0j = self._gi0 = self._gij = None

    def set_targets(self, targets, consts: list[LayerConstants]):
        self.targets = tuple(targets)
        self.consts = list(consts)
        first = consts[0]
        i16 = np.int16
        self._d00 = i16(first.d00)
        self._dj0 = np.array(first.dj0, dtype=i16)
        self._f00 = i16(first.f00)
        self._f0j = np.array(first.f0j, dtype=i16)
        self._gi0 = np.array(first.gi0, dtype=i16)
        self._gij = np.array(first.gij, dtype=i16)
        self._e = (None if first.e is None
                   else np.array(first.e, dtype=i16))
        self._c = (None if first.c is None
                   else np.array([cs.c for cs in consts], dtype=i16))
        self._d0i = np.array([cs.d0i for cs in consts], dtype=i16)
        self._dji = np.array([cs.dji for cs in consts], dtype=i16)

    def alg1(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.tables.mul(self.all_ids, x, y)

    def reduce(self, w: np.ndarray, sel=None) -> np.ndarray:
        """Reduce product representations; w has the served-modulus axis
        at -2 and the residue axis at -1."""
        tb = self.tables
        c, d0i, dji = self._c, self._d0i, self._dji
        if sel is not None:
            c = None if c is None else c[sel]
            d0i = d0i[sel]
            dji = dji[sel]
        w0 = w[..., self.m0_pos]
        wl = w[..., self.left_pos]
        wr = w[..., self.right_pos]

        mu = wl if c is None else tb.mul(self.left_ids, wl, c)

        t0 = tb.mul(0, w0, self._d00)
        ti = tb.mul(0, mu, d0i)
        xi0 = tb.tree_add(0, np.concatenate([t0[..., None], ti], axis=-1),
                          axis=-1)

        tj0 = tb.mul(self.right_ids, wr, self._dj0)
        tcr = tb.mul(self.right_ids[..., None], mu[..., None, :], dji)
        xir = tb.tree_add(self.right_ids,
                          np.concatenate([tj0[..., None], tcr], axis=-1),
                          axis=-1)

        eta = xir if self._e is None else tb.mul(self.right_ids, xir,
                                                 self._e)

        q0 = tb.mul(0, xi0, self._f00)
        qj = tb.mul(0, eta, self._f0j)
        q = tb.tree_add(0, np.concatenate([q0[..., None], qj], axis=-1),
                        axis=-1)

        ta = tb.mul(self.left_ids, q[..., None], self._gi0)
        tcl = tb.mul(self.left_ids[..., None], eta[..., None, :], self._gij)
        xil = tb.tree_add(self.left_ids,
                          np.concatenate([ta[..., None], tcl], axis=-1),
                          axis=-1)

        out = np.empty(w.shape, dtype=np.int16)
        out[..., self.m0_pos] = xi0
        out[..., self.left_pos] = xil
        out[..., self.right_pos] = xir
        return out

    def montmul(self, x: np.ndarray, y: np.ndarray, sel=None) -> np.ndarray:
        return self.reduce(self.alg1(x, y), sel)


@dataclass
class TowerRep:
    """Value representation one level above the tables: a native redundant
    residue plus one lower representation per lane."""
    x0: np.ndarray
    lanes: np.ndarray

    @classmethod
    def where(cls, cond: np.ndarray, a: "TowerRep",
              b: "TowerRep") -> "TowerRep":
        return cls(x0=np.where(cond, a.x0, b.x0),
                   lanes=np.where(cond[..., None, None], a.lanes, b.lanes))

    def copy(self) -> "TowerRep":
        return TowerRep(x0=self.x0.copy(), lanes=self.lanes.copy())


class TowerEngine:
    """Reduction for a layer whose lanes are lower-layer representations."""

    def __init__(self, mid: TableLayerEngine, geom: LayerGeometry):
        if geom.m0_factors is None:
            raise ValueError("tower layers need a factored redundant modulus")
        self.mid = mid
        self.tables = mid.tables
        self.counter = mid.tables.counter
        self.geom = geom
        self.style = geom.style
        self.m0 = geom.m0
        self.radix, self.quot = geom.m0_factors
        if self.radix not in mid.order or self.quot != mid.order[0]:
            raise ValueError("redundant factors are not bottom lanes")
        self.radix_pos = mid.order.index(self.radix)
        k, l = len(geom.left), len(geom.right)
        self.k, self.l = k, l
        self.ntop = k + l
        self.left_sel = np.arange(k)
        self.right_sel = np.arange(k, k + l)
        self.all_ids = mid.all_ids
        self.neg_one = np.int16(red(-1, self.quot, geom.style))
        self.inv_radix = np.int16(red(pow(self.radix, -1, self.quot),
                                      self.quot, geom.style))
        self.consts: LayerConstants | None = None

    @property
    def modulus(self) -> int | None:
        return None if self.consts is None else self.consts.modulus

    def set_constants(self, consts: LayerConstants):
        g = self.geom
        order, st = self.mid.order, g.style
        self.consts = consts
        self._c_rep = (None if consts.c is None
                       else _encode_rows(consts.c, order, st))
        self._e_rep = (None if consts.e is None
                       else _encode_rows(consts.e, order, st))
        self._accdj0_rep = _encode_rows(consts.acc_dj0, order, st)
        self._accdji_rep = _encode_rows(consts.acc_dji, order, st)
        self._accgij_rep = _encode_rows(consts.acc_gij, order, st)
        self._accgi0a_rep = _encode_rows(consts.acc_gi0_a, order, st)
        self._accgi0b_rep = _encode_rows(consts.acc_gi0_b, order, st)
        one = [red(g.lower_factor, ms, st) for ms in g.left + g.right]
        self._accone_rep = _encode_rows(tuple(one), order, st)
        self._d00_n = np.int64(consts.d00)
        self._d0i_n = np.array(consts.d0i, dtype=np.int64)
        self._f00_n = np.int64(consts.f00)
        self._f0j_n = np.array(consts.f0j, dtype=np.int64)

    def _require_modulus(self):
        if self.consts is None:
            raise RuntimeError("no modulus installed")

    def _canon_native(self, v: np.ndarray) -> np.ndarray:
        v = v % self.m0
        if self.style == SYMMETRIC:
            v = v - np.where(v > self.m0 >> 1, self.m0, 0)
        return v

    def _native_dot(self, head_val, head_const, vec_vals, vec_consts):
        t = (vec_vals * vec_consts) % self.m0
        acc = (head_val * head_const) % self.m0
        self.counter.native += acc.size + 2 * t.size
        return self._canon_native(acc + t.sum(axis=-1))

    def extract_m0(self, rep: np.ndarray) -> np.ndarray:
        """red<value>_{m0} of lower representations, via the redundant and
        radix lanes; three table operations per element."""
        tb = self.tables
        r = rep[..., self.mid.m0_pos]
        aa = rep[..., self.radix_pos]
        neg = tb.mul(0, aa, self.neg_one)
        diff = tb.add(0, r, neg)
        d = tb.mul(0, diff, self.inv_radix)
        return aa.astype(np.int64) + self.radix * d.astype(np.int64)

    def _digits(self, q: np.ndarray):
        r = self.radix
        if self.style == SYMMETRIC:
            a = (q + (r >> 1)) % r - (r >> 1)
        else:
            a = q % r
        b = (q - a) // r
        return a.astype(np.int16), b.astype(np.int16)

    def accumulate(self, terms: np.ndarray, plan, sel) -> np.ndarray:
        """Sum product terms (axis -2) and reduce per the staged plan."""
        tb = self.tables
        outs = []
        off = 0
        for size in plan.stages[0]:
            grp = terms[..., off:off + size, :]
            off += size
            s = (grp[..., 0, :] if size == 1
                 else tb.tree_add(self.all_ids, grp, axis=-2))
            outs.append(self.mid.reduce(s, sel))
        for stage in plan.stages[1:]:
            prev = np.stack(outs, axis=-2)
            acc1 = self._accone_rep[sel]
            nxt_terms = tb.mul(self.all_ids, acc1[..., None, :], prev)
            outs = []
            off = 0
            for size in stage:
                grp = nxt_terms[..., off:off + size, :]
                off += size
                s = (grp[..., 0, :] if size == 1
                     else tb.tree_add(self.all_ids, grp, axis=-2))
                outs.append(self.mid.reduce(s, sel))
        return outs[0]

    def alg1(self, x: TowerRep, y: TowerRep):
        self._require_modulus()
        chi0 = self._canon_native(x.x0 * y.x0)
        self.counter.native += chi0.size
        chi = self.mid.montmul(x.lanes, y.lanes)
        return chi0, chi

    def reduce(self, chi0: np.ndarray, chi: np.ndarray) -> TowerRep:
        self._require_modulus()
        g = self.geom
        tb = self.tables
        mid = self.mid
        k = self.k
        chil = chi[..., :k, :]
        chir = chi[..., k:, :]

        mu = (chil if g.fuse_left
              else mid.montmul(chil, self._c_rep, self.left_sel))
        x0mu = self.extract_m0(mu)
        xi0 = self._native_dot(chi0, self._d00_n, x0mu, self._d0i_n)

        t0 = tb.mul(self.all_ids, self._accdj0_rep, chir)
        tcr = tb.mul(self.all_ids, self._accdji_rep, mu[..., None, :, :])
        terms_r = np.concatenate([t0[..., None, :], tcr], axis=-2)
        xir = self.accumulate(terms_r, g.plan_right, self.right_sel)

        eta = (xir if g.fuse_right
               else mid.montmul(xir, self._e_rep, self.right_sel))
        eta0 = self.extract_m0(eta)
        qv = self._native_dot(xi0, self._f00_n, eta0, self._f0j_n)

        a, b = self._digits(qv)
        ta = tb.mul(self.all_ids, self._accgi0a_rep, a[..., None, None])
        tbb = tb.mul(self.all_ids, self._accgi0b_rep, b[..., None, None])
        tcl = tb.mul(self.all_ids, self._accgij_rep, eta[..., None, :, :])
        terms_l = np.concatenate([ta[..., None, :], tbb[..., None, :], tcl],
                                 axis=-2)
        xil = self.accumulate(terms_l, g.plan_left, self.left_sel)

        lanes = np.concatenate([xil, xir], axis=-2)
        return TowerRep(x0=xi0, lanes=lanes)

    def montmul(self, x: TowerRep, y: TowerRep) -> TowerRep:
        chi0, chi = self.alg1(x, y)
        return self.reduce(chi0, chi)
