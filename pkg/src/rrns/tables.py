"""Bottom-layer lookup tables.

All arithmetic in the stack bottoms out here: one table read per modular
add or multiply.  For word size t a lane's table is 2^t x 2^t, indexed by
the low t bits of each operand.  Entries are canonical residues for the
lane's interval style; operand bit patterns are interpreted unsigned
(standard) or two's-complement (symmetric), so any value that fits in t
bits is a valid operand even when it is far outside the lane's canonical
range.  That folds the reduction of wider-range inputs into the lookup
itself.

The table file format:

    magic "RRNS" | u8 version=1 | u8 t | u16le lane count
    per lane: u16le modulus | add table | mul table

tables row-major, ceil(t/8) bytes per entry, little-endian,
two's-complement entries for symmetric style.
"""

from __future__ import annotations

import struct

import numpy as np

from .intervals import STANDARD, SYMMETRIC

_MAGIC = b"RRNS"
_VERSION = 1


class OpCounter:
    """Tallies of table reads and native redundant-lane operations."""

    __slots__ = ("table", "native")

    def __init__(self):
        self.table = 0
        self.native = 0

    def reset(self):
        self.table = 0
        self.native = 0

    @property
    def total(self) -> int:
        return self.table + self.native


def _interp(t: int, style: str) -> np.ndarray:
    """Integer value of each t-bit operand pattern."""
    v = np.arange(1 << t, dtype=np.int64)
    if style == SYMMETRIC:
        v = np.where(v >= (1 << (t - 1)), v - (1 << t), v)
    return v


def _canonical(x: np.ndarray, n: int, style: str) -> np.ndarray:
    r = np.mod(x, n)
    if style == SYMMETRIC:
        r = np.where(r >= (n + 1) // 2, r - n, r)
    return r


class TableSet:
    """Add/mul tables for an ordered list of bottom moduli."""

    __slots__ = ("t", "style", "moduli", "counter", "_mask", "_add", "_mul", "_cell")

    def __init__(self, t: int, style: str, moduli, add=None, mul=None):
        if not 2 <= t <= 14:
            raise ValueError(f"word size t={t} outside supported range [2, 14]")
        if style not in (STANDARD, SYMMETRIC):
            raise ValueError(f"unknown interval style {style!r}")
        for n in moduli:
            if not 2 <= n <= (1 << t):
                raise ValueError(f"modulus {n} does not fit word size t={t}")
        self.t = t
        self.style = style
        self.moduli = tuple(int(n) for n in moduli)
        self.counter = OpCounter()
        self._mask = (1 << t) - 1
        self._cell = 1 << (2 * t)
        if add is None:
            v = _interp(t, style)
            self._add = np.stack(
                [_canonical(v[:, None] + v[None, :], n, style) for n in self.moduli]
            ).astype(np.int16).reshape(-1)
            self._mul = np.stack(
                [_canonical(v[:, None] * v[None, :], n, style) for n in self.moduli]
            ).astype(np.int16).reshape(-1)
        else:
            self._add = add.reshape(-1)
            self._mul = mul.reshape(-1)

    # ── gather ops ────────────────────────────────────────────────────

    def _gather(self, flat: np.ndarray, lanes, a, b) -> np.ndarray:
        ai = np.asarray(a).astype(np.int64, copy=False)
        bi = np.asarray(b).astype(np.int64, copy=False)
        off = np.asarray(lanes).astype(np.int64, copy=False) * self._cell
        idx = off + (((ai & self._mask) << self.t) | (bi & self._mask))
        self.counter.table += idx.size
        return flat.take(idx)

    def add(self, lanes, a, b) -> np.ndarray:
        """Tablewise a + b on the given lane indices (broadcast together)."""
        return self._gather(self._add, lanes, a, b)

    def mul(self, lanes, a, b) -> np.ndarray:
        return self._gather(self._mul, lanes, a, b)

    def tree_add(self, lanes, terms: np.ndarray, axis: int = 0) -> np.ndarray:
        """Sum of `terms` along `axis` using n-1 table adds."""
        x = np.moveaxis(terms, axis, 0)
        while x.shape[0] > 1:
            k = x.shape[0] // 2
            s = self.add(lanes, x[0:2 * k:2], x[1:2 * k:2])
            if x.shape[0] % 2:
                s = np.concatenate([s, x[-1:]], axis=0)
            x = s
        return x[0]

    # ── serialization ─────────────────────────────────────────────────

    def dump(self) -> bytes:
        width = (self.t + 7) // 8
        dt = {(1, STANDARD): "u1", (1, SYMMETRIC): "i1",
              (2, STANDARD): "<u2", (2, SYMMETRIC): "<i2"}[(width, self.style)]
        parts = [_MAGIC, struct.pack("<BBH", _VERSION, self.t, len(self.moduli))]
        for i, n in enumerate(self.moduli):
            parts.append(struct.pack("<H", n))
            sl = slice(i * self._cell, (i + 1) * self._cell)
            parts.append(self._add[sl].astype(dt).tobytes())
            parts.append(self._mul[sl].astype(dt).tobytes())
        return b"".join(parts)

    @classmethod
    def load(cls, data: bytes, style: str) -> "TableSet":
        if data[:4] != _MAGIC:
            raise ValueError("bad table file magic")
        version, t, count = struct.unpack("<BBH", data[4:8])
        if version != _VERSION:
            raise ValueError(f"unsupported table file version {version}")
        width = (t + 7) // 8
        dt = {(1, STANDARD): "u1", (1, SYMMETRIC): "i1",
              (2, STANDARD): "<u2", (2, SYMMETRIC): "<i2"}[(width, style)]
        cell = 1 << (2 * t)
        pos = 8
        moduli, adds, muls = [], [], []
        for _ in range(count):
            (n,) = struct.unpack_from("<H", data, pos)
            pos += 2
            moduli.append(n)
            for acc in (adds, muls):
                raw = np.frombuffer(data, dtype=dt, count=cell, offset=pos)
                acc.append(raw.astype(np.int16))
                pos += cell * width
        if pos != len(data):
            raise ValueError("trailing bytes in table file")
        return cls(t, style, moduli,
                   add=np.concatenate(adds), mul=np.concatenate(muls))
