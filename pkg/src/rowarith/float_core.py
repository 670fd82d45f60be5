"""Floating-point pipelines shared by the bit-serial and bit-parallel lanes.

One implementation of alignment, addition, normalization and
round-to-nearest-even runs against two backends: ``SerialOps`` lowers to
ripple arithmetic on contiguous columns, ``ParallelOps`` to prefix/carry-save
arithmetic and toolbox transport on strided columns.  A value vector is a
list of column handles, LSB first.

Rounding uses a guard bit plus jammed sticky: alignment ORs every discarded
bit into the shifted-out flag, the flag is ORed back into the window LSB,
and round-up fires on guard AND (below-bits OR mantissa LSB).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import GateKind
from .microcode import MacroKind, ProgramBuilder
from .serial_fixed import (
    copy_vec,
    init_vec,
    ripple_add,
    _mult_into,
    KARATSUBA_THRESHOLD,
)
from .toolbox import AssocOp, broadcast_bit, reduce_bits, shift_bits
from .parallel_fixed import csas_mult, cscl_div, par_add, MultTail

__all__ = ["FloatFormat", "SerialOps", "ParallelOps"]


@dataclass(frozen=True)
class FloatFormat:
    """Sign / exponent / mantissa encoding with a hidden leading one.

    value = (-1)^s * 2^(e - bias) * (1 + m / 2^n_m); only normal numbers
    (0 < e < 2^n_e - 1) are representable by the emitters.
    """

    n_e: int
    n_m: int
    bias: Optional[int] = None

    def __post_init__(self):
        if self.n_e < 2 or self.n_m < 1:
            raise ValueError("need n_e >= 2 and n_m >= 1")
        if self.bias is None:
            object.__setattr__(self, "bias", (1 << (self.n_e - 1)) - 1)

    @property
    def width(self) -> int:
        return 1 + self.n_e + self.n_m

    def split(self, bits: int) -> tuple[int, int, int]:
        m = bits & ((1 << self.n_m) - 1)
        e = (bits >> self.n_m) & ((1 << self.n_e) - 1)
        s = (bits >> (self.n_m + self.n_e)) & 1
        return s, e, m

    def join(self, s: int, e: int, m: int) -> int:
        return (s << (self.n_m + self.n_e)) | (e << self.n_m) | m

    def is_normal(self, bits: int) -> bool:
        _, e, _ = self.split(bits)
        return 0 < e < (1 << self.n_e) - 1

    def to_fraction(self, bits: int) -> Fraction:
        s, e, m = self.split(bits)
        if e == 0 and m == 0:
            return Fraction(0)
        mag = Fraction((1 << self.n_m) + m, 1 << self.n_m) * Fraction(2) ** (e - self.bias)
        return -mag if s else mag

    def all_normals(self):
        for s in (0, 1):
            for e in range(1, (1 << self.n_e) - 1):
                for m in range(1 << self.n_m):
                    yield self.join(s, e, m)


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def _levels(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 1


# ---------------------------------------------------------------------------
# backends


class SerialOps:
    """Contiguous-column backend: one gate per cycle, ripple arithmetic."""

    parallel = False

    def __init__(self, b: ProgramBuilder):
        self.b = b

    # cells
    def fresh(self, n: int) -> list[int]:
        return self.b.alloc(n)

    def free(self, cols):
        self.b.free(cols)

    def const_bit(self, bit: int) -> int:
        return self.b.const(bit)

    def copy(self, src: Sequence[int], dst: Sequence[int]):
        copy_vec(self.b, src, dst)

    def gather(self, cols: Sequence[int]) -> list[int]:
        return list(cols)  # columns are first-class serially

    def init(self, cols: Sequence[int], value: int = 0):
        init_vec(self.b, cols, value)

    def zext(self, vec: Sequence[int], n: int) -> list[int]:
        out = self.fresh(n)
        copy_vec(self.b, vec, out[: len(vec)])
        init_vec(self.b, out[len(vec):], 0)
        return out

    def copy_bit(self, src: int, dst: int):
        self.b.copy(src, dst)

    # single-bit logic (fresh result cell)
    def _bit2(self, kind: MacroKind, a: int, b_: int) -> int:
        out = self.b.alloc1()
        self.b.macro(kind, [a, b_], [out])
        return out

    def not_bit(self, a: int) -> int:
        out = self.b.alloc1()
        self.b.gate(GateKind.NOT, [a], out)
        return out

    def and_bit(self, a, b_):
        return self._bit2(MacroKind.AND2, a, b_)

    def or_bit(self, a, b_):
        return self._bit2(MacroKind.OR2, a, b_)

    def xor_bit(self, a, b_):
        return self._bit2(MacroKind.XOR2, a, b_)

    def andn_bit(self, a, b_):
        return self._bit2(MacroKind.ANDN2, a, b_)

    def or_into(self, acc: int, b_: int):
        self.b.macro(MacroKind.OR2, [acc, b_], [acc])

    def mux_bit(self, sel, a, b_):
        out = self.b.alloc1()
        self.b.macro(MacroKind.MUX, [sel, a, b_], [out])
        return out

    # elementwise over vectors
    def _map2(self, kind, avec, bvec, out):
        for a, b_, o in zip(avec, bvec, out):
            self.b.macro(kind, [a, b_], [o])

    def xor_bit_vec(self, vec, bit, out):
        for v, o in zip(vec, out):
            self.b.macro(MacroKind.XOR2, [v, bit], [o])

    def and_bit_vec(self, vec, bit, out):
        for v, o in zip(vec, out):
            self.b.macro(MacroKind.AND2, [v, bit], [o])

    def andn_bit_vec(self, vec, bit, out):
        for v, o in zip(vec, out):
            self.b.macro(MacroKind.ANDN2, [v, bit], [o])

    def mux_vec(self, sel, avec, bvec, out):
        for a, b_, o in zip(avec, bvec, out):
            self.b.macro(MacroKind.MUX, [sel, a, b_], [o])

    # arithmetic
    def add(self, a, b_, out, cin=0, cout=None, invert_b=False):
        if invert_b:
            ny = self.fresh(len(b_))
            for s, d in zip(b_, ny):
                self.b.gate(GateKind.NOT, [s], d)
            ripple_add(self.b, a, ny, out, cin=cin, cout=cout)
            self.free(ny)
        else:
            ripple_add(self.b, a, b_, out, cin=cin, cout=cout)

    def add_bit(self, a, bit, out, cout=None):
        carry = cout if cout is not None else self.b.alloc1()
        prev = bit
        for i in range(len(a)):
            self.b.macro(MacroKind.HA, [a[i], prev], [out[i], carry])
            prev = carry
        if cout is None:
            self.free(carry)

    def add_const(self, a, const, out, cout=None):
        cbits = [self.const_bit((const >> i) & 1) for i in range(len(a))]
        ripple_add(self.b, a, cbits, out, cin=0, cout=cout)

    def mul(self, a, b_):
        out = self.fresh(2 * len(a))
        _mult_into(self.b, list(a), list(b_), out, KARATSUBA_THRESHOLD)
        return out

    def divmod(self, zvec, dvec):
        from .serial_fixed import div_into
        n = len(dvec)
        q = self.fresh(n)
        r = self.fresh(n)
        div_into(self.b, list(zvec), list(dvec), q, r)
        return q, r

    def or_reduce(self, cols) -> int:
        cols = list(cols)
        acc = self.b.alloc1()
        if len(cols) == 1:
            self.b.copy(cols[0], acc)
            return acc
        self.b.macro(MacroKind.OR2, [cols[0], cols[1]], [acc])
        for c in cols[2:]:
            self.b.macro(MacroKind.OR2, [acc, c], [acc])
        return acc

    # shifting
    def varshift_right_sticky(self, vec, tvec, sticky: Optional[int]):
        """vec >>= t, exactly, for any t < 2^len(tvec); discarded bits OR
        into `sticky` when given."""
        n = len(vec)
        for j, tj in enumerate(tvec):
            m = 1 << j
            if m < n:
                if sticky is not None:
                    dropped = self.or_reduce(vec[:m])
                    masked = self.and_bit(dropped, tj)
                    self.or_into(sticky, masked)
                    self.free([dropped, masked])
                for i in range(n - m):
                    self.b.macro(MacroKind.MUX, [tj, vec[i + m], vec[i]], [vec[i]])
                for i in range(n - m, n):
                    self.b.macro(MacroKind.ANDN2, [vec[i], tj], [vec[i]])
            else:
                if sticky is not None:
                    dropped = self.or_reduce(vec)
                    masked = self.and_bit(dropped, tj)
                    self.or_into(sticky, masked)
                    self.free([dropped, masked])
                for i in range(n):
                    self.b.macro(MacroKind.ANDN2, [vec[i], tj], [vec[i]])

    def varshift_left(self, vec, tvec):
        n = len(vec)
        for j, tj in enumerate(tvec):
            m = 1 << j
            if m < n:
                for i in range(n - 1, m - 1, -1):
                    self.b.macro(MacroKind.MUX, [tj, vec[i - m], vec[i]], [vec[i]])
                for i in range(m):
                    self.b.macro(MacroKind.ANDN2, [vec[i], tj], [vec[i]])
            else:
                for i in range(n):
                    self.b.macro(MacroKind.ANDN2, [vec[i], tj], [vec[i]])

    def normalize(self, vec) -> list[int]:
        """Left-shift vec until its MSB is one; returns the shift count."""
        n = len(vec)
        levels = _levels(n)
        tvec = self.fresh(levels)
        for j in range(levels - 1, -1, -1):
            m = 1 << j
            window = vec[n - m:]
            if m == 1:
                self.b.gate(GateKind.NOT, [window[0]], tvec[j])
            else:
                acc = self.or_reduce(window)
                self.b.gate(GateKind.NOT, [acc], tvec[j])
                self.free(acc)
            tj = tvec[j]
            for i in range(n - 1, m - 1, -1):
                self.b.macro(MacroKind.MUX, [tj, vec[i - m], vec[i]], [vec[i]])
            for i in range(m):
                self.b.macro(MacroKind.ANDN2, [vec[i], tj], [vec[i]])
        return tvec


class ParallelOps:
    """Strided backend: value vectors live one bit per partition at a shared
    intra-partition offset; logic batches across partitions, transport goes
    through the partition toolbox."""

    parallel = True

    def __init__(self, b: ProgramBuilder):
        self.b = b
        self.k = b.k

    # --- vector plumbing -------------------------------------------------
    def fresh(self, n: int) -> list[int]:
        off = self.b.alloc_shared(range(n))
        return [self.b.col(p, off) for p in range(n)]

    def free(self, cols):
        self.b.free(cols)

    def const_bit(self, bit: int) -> int:
        return self.b.const(bit, partition=0)

    @staticmethod
    def _pos(col: int) -> tuple[int, int]:
        return ProgramBuilder._split(col)

    def _runs(self, pairs):
        """Group (src, dst) moves by (partition delta, offsets) for batching."""
        groups: dict[tuple[int, int, int], list[tuple[int, int]]] = {}
        for s, d in pairs:
            sp, so = self._pos(s)
            dp, do = self._pos(d)
            groups.setdefault((dp - sp, so, do), []).append((sp, dp))
        return groups

    def copy(self, src: Sequence[int], dst: Sequence[int]):
        """Batched transport; destinations must be fresh (never aliased to
        sources)."""
        for (delta, so, do), moves in self._runs(zip(src, dst)).items():
            dps = [dp for _, dp in moves]
            tmp = self.b.alloc_shared(dps)
            span = abs(delta) + 1
            for phase in range(span):
                io = [([self.b.col(sp, so)], self.b.col(dp, tmp))
                      for sp, dp in moves if sp % span == phase]
                if io:
                    self.b.par_gates(GateKind.NOT, io)
            self.b.par_gates(GateKind.NOT, [([self.b.col(dp, tmp)], self.b.col(dp, do))
                                            for dp in dps])
            self.b.free_shared(tmp, dps)

    def gather(self, cols: Sequence[int]) -> list[int]:
        out = self.fresh(len(cols))
        self.copy(cols, out)
        return out

    def init(self, cols: Sequence[int], value: int = 0):
        ones = [c for i, c in enumerate(cols) if (value >> i) & 1]
        zeros = [c for i, c in enumerate(cols) if not (value >> i) & 1]
        if zeros:
            self.b.par_gates(GateKind.INIT0, [([], c) for c in zeros])
        if ones:
            self.b.par_gates(GateKind.INIT1, [([], c) for c in ones])

    def zext(self, vec: Sequence[int], n: int) -> list[int]:
        out = self.fresh(n)
        self.copy(vec, out[: len(vec)])
        self.init(out[len(vec):], 0)
        return out

    def copy_bit(self, src: int, dst: int):
        self.b.copy(src, dst)

    # --- single-bit logic (result at partition 0 unless stated) ----------
    def _bit2(self, kind, a, b_):
        out = self.b.alloc1(self._pos(a)[0])
        self.b.macro(kind, [a, b_], [out], partition=self._pos(a)[0])
        return out

    def not_bit(self, a):
        out = self.b.alloc1(self._pos(a)[0])
        self.b.gate(GateKind.NOT, [a], out)
        return out

    def and_bit(self, a, b_):
        return self._bit2(MacroKind.AND2, a, b_)

    def or_bit(self, a, b_):
        return self._bit2(MacroKind.OR2, a, b_)

    def xor_bit(self, a, b_):
        return self._bit2(MacroKind.XOR2, a, b_)

    def andn_bit(self, a, b_):
        return self._bit2(MacroKind.ANDN2, a, b_)

    def or_into(self, acc, b_):
        self.b.macro(MacroKind.OR2, [acc, b_], [acc], partition=self._pos(acc)[0])

    def mux_bit(self, sel, a, b_):
        out = self.b.alloc1(self._pos(a)[0])
        self.b.macro(MacroKind.MUX, [sel, a, b_], [out], partition=self._pos(a)[0])
        return out

    # --- vector logic ------------------------------------------------------
    def _aligned(self, *vecs):
        for positions in zip(*vecs):
            parts = {self._pos(c)[0] for c in positions}
            assert len(parts) == 1, "parallel vector ops need aligned partitions"

    def _map_macro(self, kind, ins_vecs, out_vec):
        self._aligned(*ins_vecs, out_vec)
        parts = [self._pos(c)[0] for c in out_vec]
        io = [([v[i] for v in ins_vecs], [out_vec[i]]) for i in range(len(out_vec))]
        self.b.par_macro(kind, io, parts)

    def _broadcast_sel(self, bit, parts_needed: Sequence[int]):
        """Replicate a control bit to every partition in parts_needed."""
        span = list(range(_next_pow2(max(list(parts_needed) + [self._pos(bit)[0]]) + 1)))
        off = self.b.alloc_shared(span)
        sp, so = self._pos(bit)
        broadcast_bit(self.b, span, sp, so, off)
        return off, span

    def _free_sel(self, off, span):
        self.b.free_shared(off, span)

    def xor_bit_vec(self, vec, bit, out):
        self._bitwise_with_bit(MacroKind.XOR2, vec, bit, out)

    def and_bit_vec(self, vec, bit, out):
        self._bitwise_with_bit(MacroKind.AND2, vec, bit, out)

    def andn_bit_vec(self, vec, bit, out):
        self._bitwise_with_bit(MacroKind.ANDN2, vec, bit, out)

    def _bitwise_with_bit(self, kind, vec, bit, out):
        self._aligned(vec, out)
        parts = [self._pos(c)[0] for c in out]
        sel, span = self._broadcast_sel(bit, parts)
        io = [([vec[i], self.b.col(parts[i], sel)], [out[i]]) for i in range(len(out))]
        self.b.par_macro(kind, io, parts)
        self._free_sel(sel, span)

    def mux_vec(self, sel, avec, bvec, out):
        self._aligned(avec, bvec, out)
        parts = [self._pos(c)[0] for c in out]
        soff, span = self._broadcast_sel(sel, parts)
        io = [([self.b.col(parts[i], soff), avec[i], bvec[i]], [out[i]])
              for i in range(len(out))]
        self.b.par_macro(MacroKind.MUX, io, parts)
        self._free_sel(soff, span)

    # --- arithmetic ---------------------------------------------------------
    def _offset_of(self, vec) -> int:
        offs = {self._pos(c)[1] for c in vec}
        parts = [self._pos(c)[0] for c in vec]
        assert len(offs) == 1 and parts == list(range(len(vec))), \
            "arithmetic needs base-aligned strided vectors"
        return offs.pop()

    def _padded(self, vec, m):
        """Offset of vec zero-extended onto partitions 0..m-1 (fresh if needed)."""
        if len(vec) == m:
            return self._offset_of(vec), None
        ext = self.zext(vec, m)
        return self._offset_of(ext), ext

    def add(self, a, b_, out, cin=0, cout=None, invert_b=False):
        """out <- a + b (mod 2^n); the optional carry out is tapped at bit
        n-1 even when the prefix block is padded to a power of two."""
        n = len(a)
        m = max(_next_pow2(n), 2)
        a_off, a_ext = self._padded(a, m)
        b_off, b_ext = self._padded(b_, m)
        if len(out) == m:
            out_off, out_ext = self._offset_of(out), None
        else:
            out_ext = self.fresh(m)
            out_off = self._offset_of(out_ext)
        par_add(self.b, list(range(m)), a_off, b_off, out_off, cin=cin,
                invert_y=invert_b, cout=cout, cout_index=n - 1)
        if out_ext is not None:
            self.copy(out_ext[:n], out)
            self.free(out_ext)
        for ext in (a_ext, b_ext):
            if ext is not None:
                self.free(ext)

    def add_bit(self, a, bit, out, cout=None):
        zero = self.fresh(len(a))
        self.init(zero, 0)
        self.add(a, zero, out, cin=bit, cout=cout)
        self.free(zero)

    def add_const(self, a, const, out, cout=None):
        cv = self.fresh(len(a))
        self.init(cv, const & ((1 << len(a)) - 1))
        self.add(a, cv, out, cout=cout)
        self.free(cv)

    def mul(self, a, b_):
        n = len(a)
        m = _next_pow2(n)
        a_off = self._offset_of(a)
        b_off = self._offset_of(b_)
        lo = self.fresh(n)
        hi = self.fresh(m)
        csas_mult(self.b, n, a_off, b_off, lo, self._offset_of(hi),
                  MultTail.PREFIX_ADDER)
        if hi[n:]:
            self.free(hi[n:])
        return lo + hi[:n]

    def divmod(self, zvec, dvec):
        """(q, r) of a 2n-bit dividend over an n-bit divisor; runs the
        carry-save divider at the padded power-of-two width."""
        n = len(dvec)
        m = _next_pow2(n)
        assert self.k >= 2 * m, "divider needs 2*next_pow2(n) partitions"
        extended_z = len(zvec) != 2 * m
        padded = self.zext(zvec, 2 * m) if extended_z else list(zvec)
        wv = self.gather(padded[m:])
        zv = self.gather(padded[:m])
        if extended_z:
            self.free(padded)
        extended_d = len(dvec) != m
        dv = self.zext(dvec, m) if extended_d else list(dvec)
        q = self.fresh(m)
        r_off = self.b.alloc_shared(range(2 * m))
        cscl_div(self.b, m, self._offset_of(wv), self._offset_of(zv),
                 self._offset_of(dv), q, r_off)
        r = self.gather([self.b.col(p, r_off) for p in range(m)])
        self.b.free_shared(r_off, range(2 * m))
        self.free(wv)
        self.free(zv)
        if extended_d:
            self.free(dv)
        if m > n:
            self.free(q[n:])
            self.free(r[n:])
        return q[:n], r[:n]

    def or_reduce(self, cols) -> int:
        cols = list(cols)
        if len(cols) == 1:
            out = self.b.alloc1(self._pos(cols[0])[0])
            self.b.copy(cols[0], out)
            return out
        m = _next_pow2(len(cols))
        work = self.fresh(m)
        self.copy(cols, work[: len(cols)])
        if m > len(cols):
            self.init(work[len(cols):], 0)
        reduce_bits(self.b, range(m), AssocOp.OR, self._offset_of(work))
        out = self.b.alloc1(0)
        self.b.copy(work[m - 1], out)
        self.free(work)
        return out

    # --- shifting -----------------------------------------------------------
    def _shift_copy(self, vec, amount, toward_msb: bool):
        """Fresh aligned copy of vec shifted by `amount`, zero filled."""
        off = self._offset_of(vec)
        n = len(vec)
        out = self.fresh(n)
        o_off = self._offset_of(out)
        shift_bits(self.b, range(n), off, o_off, amount, fill=0,
                   toward_higher=toward_msb)
        return out

    def varshift_right_sticky(self, vec, tvec, sticky: Optional[int]):
        n = len(vec)
        parts = [self._pos(c)[0] for c in vec]
        for j in range(len(tvec)):
            m = 1 << j
            tj = tvec[j]
            if m < n:
                if sticky is not None:
                    dropped = self.or_reduce(vec[:m])
                    masked = self.and_bit(dropped, tj)
                    self.or_into(sticky, masked)
                    self.free([dropped, masked])
                shifted = self._shift_copy(vec, m, toward_msb=False)
                self.mux_vec(tj, shifted, list(vec), list(vec))
                self.free(shifted)
            else:
                if sticky is not None:
                    dropped = self.or_reduce(vec)
                    masked = self.and_bit(dropped, tj)
                    self.or_into(sticky, masked)
                    self.free([dropped, masked])
                self.andn_bit_vec(list(vec), tj, list(vec))

    def varshift_left(self, vec, tvec):
        n = len(vec)
        for j in range(len(tvec)):
            m = 1 << j
            tj = tvec[j]
            if m < n:
                shifted = self._shift_copy(vec, m, toward_msb=True)
                self.mux_vec(tj, shifted, list(vec), list(vec))
                self.free(shifted)
            else:
                self.andn_bit_vec(list(vec), tj, list(vec))

    def normalize(self, vec) -> list[int]:
        n = len(vec)
        levels = _levels(n)
        tvec = self.fresh(levels)
        for j in range(levels - 1, -1, -1):
            m = 1 << j
            window = vec[n - m:]
            if m == 1:
                self.b.gate(GateKind.NOT, [window[0]], tvec[j])
            else:
                acc = self.or_reduce(window)
                self.b.gate(GateKind.NOT, [acc], tvec[j])
                self.free(acc)
            shifted = self._shift_copy(vec, m, toward_msb=True)
            self.mux_vec(tvec[j], shifted, list(vec), list(vec))
            self.free(shifted)
        return tvec


# ---------------------------------------------------------------------------
# shared pipelines


def _fields(fmt: FloatFormat, bits):
    """Split an operand column vector into (mantissa, exponent, sign)."""
    nm, ne = fmt.n_m, fmt.n_e
    return list(bits[:nm]), list(bits[nm:nm + ne]), bits[nm + ne]


def _hidden(ops, fmt, mant_cols):
    mh = ops.fresh(fmt.n_m + 1)
    ops.copy(mant_cols, mh[:fmt.n_m])
    ops.init([mh[fmt.n_m]], 1)
    return mh


def _round_pack(ops, fmt, mant, g, rest, eo, sign_col, nz, zbits):
    """Round to nearest, ties to even, and pack the result fields.

    `mant` holds hidden+mantissa, `g` the guard bit, `rest` every lower bit
    (sticky material).  A post-round carry bumps the exponent; with `nz`
    given, all fields are forced to the canonical zero encoding when clear.
    """
    nm, ne = fmt.n_m, fmt.n_e
    mant = ops.gather(mant)
    sall = ops.or_reduce(rest)
    low = ops.or_bit(sall, mant[0])
    up = ops.and_bit(g, low)
    rm = ops.fresh(nm + 1)
    c2 = ops.fresh(1)[0]
    ops.add_bit(mant, up, rm, cout=c2)
    eo2 = ops.fresh(len(eo))
    ops.add_bit(eo, c2, eo2)
    zm, ze, zs = _fields(fmt, zbits)
    if nz is None:
        ops.copy(rm[:nm], zm)
        ops.copy(eo2[:ne], ze)
        ops.copy_bit(sign_col, zs)
    else:
        mm = ops.fresh(nm)
        ops.and_bit_vec(rm[:nm], nz, mm)
        ops.copy(mm, zm)
        me = ops.fresh(ne)
        ops.and_bit_vec(eo2[:ne], nz, me)
        ops.copy(me, ze)
        ms = ops.and_bit(sign_col, nz)
        ops.copy_bit(ms, zs)
        ops.free(mm + me + [ms])
    ops.free(rm + eo2 + [sall, low, up, c2])


def build_fadd(ops, fmt: FloatFormat, xbits, ybits, zbits,
               signed: bool, negate_y: bool = False):
    """Addition/subtraction: align to the larger exponent with a jammed
    variable shift, add (or two's-complement subtract) in a guarded window,
    renormalize, and round."""
    nm, ne = fmt.n_m, fmt.n_e
    W = nm + 4
    xm, xe_raw, xs = _fields(fmt, xbits)
    ym, ye_raw, ys_in = _fields(fmt, ybits)
    xe = ops.gather(xe_raw)  # exponent fields re-based for vector ops
    ye = ops.gather(ye_raw)
    ys = ops.not_bit(ys_in) if negate_y else ys_in

    # exponent difference and operand ordering
    ex = ops.zext(xe, ne + 1)
    ey = ops.zext(ye, ne + 1)
    de = ops.fresh(ne + 1)
    ops.add(ex, ey, de, cin=1, invert_b=True)
    sigma = de[ne]  # x.e < y.e
    be = ops.fresh(ne)
    ops.mux_vec(sigma, ye, xe, be)
    ad = ops.fresh(ne + 1)
    ops.xor_bit_vec(de, sigma, ad)
    tamt = ops.fresh(ne + 1)
    ops.add_bit(ad, sigma, tamt)

    mhx = _hidden(ops, fmt, xm)
    mhy = _hidden(ops, fmt, ym)
    bm = ops.fresh(nm + 1)
    lm = ops.fresh(nm + 1)
    ops.mux_vec(sigma, mhy, mhx, bm)
    ops.mux_vec(sigma, mhx, mhy, lm)
    bsign = ops.mux_bit(sigma, ys, xs)

    # guarded windows; align the smaller operand with sticky jamming
    xw = ops.fresh(W)
    yw = ops.fresh(W)
    ops.init(xw[:3], 0)
    ops.init(yw[:3], 0)
    ops.copy(bm, xw[3:])
    ops.copy(lm, yw[3:])
    st = ops.fresh(1)[0]
    ops.init([st], 0)
    ops.varshift_right_sticky(yw, tamt[:ne], st)
    ops.or_into(yw[0], st)

    if not signed:
        tot = ops.fresh(W + 1)
        ops.add(xw, yw, tot[:W], cout=tot[W])
        c = tot[W]
        hi = ops.gather(tot[1:W + 1])
        zwin = ops.fresh(W)
        ops.mux_vec(c, hi, tot[:W], zwin)
        dropped = ops.and_bit(c, tot[0])
        ops.or_into(zwin[0], dropped)
        ebase = ops.zext(be, ne + 2)
        eo = ops.fresh(ne + 2)
        ops.add_bit(ebase, c, eo)
        _round_pack(ops, fmt, zwin[3:], zwin[2], zwin[:2], eo, xs, None, zbits)
        return

    ds = ops.xor_bit(xs, ys)
    yw2 = ops.fresh(W)
    ops.xor_bit_vec(yw, ds, yw2)
    tot = ops.fresh(W + 1)
    cw = ops.fresh(1)[0]
    ops.add(xw, yw2, tot[:W], cin=ds, cout=cw)
    topbit = ops.xor_bit(cw, ds)
    ops.copy_bit(topbit, tot[W])
    neg = ops.andn_bit(ds, cw)  # effective subtraction came out negative
    t1 = ops.fresh(W + 1)
    ops.xor_bit_vec(tot, neg, t1)
    t2 = ops.fresh(W + 1)
    ops.add_bit(t1, neg, t2)
    rsign = ops.xor_bit(bsign, neg)
    nz = ops.or_reduce(t2)
    tcnt = ops.normalize(t2)
    # exponent: be + 1 - shift count
    ebase = ops.zext(be, ne + 2)
    e1 = ops.fresh(ne + 2)
    ops.add_const(ebase, 1, e1)
    tx = ops.zext(tcnt, ne + 2)
    eo = ops.fresh(ne + 2)
    ops.add(e1, tx, eo, cin=1, invert_b=True)
    _round_pack(ops, fmt, t2[W - nm:], t2[W - nm - 1], t2[:W - nm - 1],
                eo, rsign, nz, zbits)


def build_fmul(ops, fmt: FloatFormat, xbits, ybits, zbits):
    """Multiply: fixed-point product of hidden-extended mantissas, one
    conditional normalization shift, round to nearest even."""
    nm, ne = fmt.n_m, fmt.n_e
    n = nm + 1
    xm, xe, xs = _fields(fmt, xbits)
    ym, ye, ys = _fields(fmt, ybits)
    mhx = _hidden(ops, fmt, xm)
    mhy = _hidden(ops, fmt, ym)
    p = ops.mul(mhx, mhy)  # 2n bits, leading one at 2n-1 or 2n-2
    t = ops.not_bit(p[2 * n - 1])
    va = ops.gather(p[n - 1:2 * n - 1])
    vb = ops.gather(p[n:2 * n])
    mant = ops.fresh(n)
    ops.mux_vec(t, va, vb, mant)
    g = ops.mux_bit(t, p[n - 2], p[n - 1])
    if n > 2:
        s1 = ops.or_reduce(p[:n - 2])
    else:
        s1 = ops.fresh(1)[0]
        ops.init([s1], 0)
    extra = ops.andn_bit(p[n - 2], t)
    ops.or_into(s1, extra)
    sign = ops.xor_bit(xs, ys)
    # exponent: x.e + y.e - bias + 1 - t
    ex = ops.zext(xe, ne + 2)
    ey = ops.zext(ye, ne + 2)
    ee = ops.fresh(ne + 2)
    ops.add(ex, ey, ee)
    eb = ops.fresh(ne + 2)
    ops.add_const(ee, (1 - fmt.bias) % (1 << (ne + 2)), eb)
    tv = ops.fresh(ne + 2)
    ops.init(tv, 0)
    ops.copy_bit(t, tv[0])
    eo = ops.fresh(ne + 2)
    ops.add(eb, tv, eo, cin=1, invert_b=True)
    _round_pack(ops, fmt, mant, g, [s1], eo, sign, None, zbits)


def build_fdiv(ops, fmt: FloatFormat, xbits, ybits, zbits):
    """Divide: extended-precision mantissa quotient with the remainder
    jammed into sticky, one conditional normalization shift, round."""
    nm, ne = fmt.n_m, fmt.n_e
    nq = nm + 4
    xm, xe, xs = _fields(fmt, xbits)
    ym, ye, ys = _fields(fmt, ybits)
    mhx = _hidden(ops, fmt, xm)
    mhy = _hidden(ops, fmt, ym)
    dd = ops.fresh(2 * nq)
    ops.init(dd[:nm + 3], 0)
    ops.copy(mhx, dd[nm + 3:2 * nm + 4])
    ops.init(dd[2 * nm + 4:], 0)
    dv = ops.zext(mhy, nq)
    q, r = ops.divmod(dd, dv)
    srem = ops.or_reduce(r)
    ops.or_into(q[0], srem)  # jam the nonzero remainder
    t = ops.not_bit(q[nq - 1])
    va = ops.gather(q[2:nq - 1])
    vb = ops.gather(q[3:nq])
    mant = ops.fresh(nm + 1)
    ops.mux_vec(t, va, vb, mant)
    g = ops.mux_bit(t, q[1], q[2])
    s1 = ops.andn_bit(q[1], t)
    ops.or_into(s1, q[0])
    sign = ops.xor_bit(xs, ys)
    # exponent: x.e - y.e + bias - t
    ex = ops.zext(xe, ne + 2)
    ey = ops.zext(ye, ne + 2)
    e1 = ops.fresh(ne + 2)
    ops.add(ex, ey, e1, cin=1, invert_b=True)
    e2 = ops.fresh(ne + 2)
    ops.add_const(e1, fmt.bias % (1 << (ne + 2)), e2)
    tv = ops.fresh(ne + 2)
    ops.init(tv, 0)
    ops.copy_bit(t, tv[0])
    eo = ops.fresh(ne + 2)
    ops.add(e2, tv, eo, cin=1, invert_b=True)
    _round_pack(ops, fmt, mant, g, [s1], eo, sign, None, zbits)
