"""Bit-parallel fixed-point emitters on strided operands (k = N partitions):
prefix-tree addition, carry-save add-shift multiplication, and carry-save
carry-lookahead non-restoring division.

Numbers are strided (bit i in partition i).  Addition/subtraction expose the
top bit as a one-bit operand ``zc`` so results decode identically to the
bit-serial emitters.  The multiplier and divider cores are builder-level
functions so wider compositions (floating point) can embed them at padded
widths.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional, Sequence

from .core import GateKind, LayoutFormat, MicroProgram
from .microcode import MacroKind, ProgramBuilder
from .toolbox import AssocOp, broadcast_bit, prefix_bits, reduce_bits, shift_bits

__all__ = [
    "MultTail",
    "emit_add_parallel",
    "emit_sub_parallel",
    "emit_mult_parallel",
    "emit_div_parallel",
    "par_add",
    "par_macro_map",
    "csas_mult",
    "cscl_div",
]


class MultTail(Enum):
    PREFIX_ADDER = "prefix-adder"
    LEGACY_N_ITER = "legacy-n-iter"


def _pow2_check(n: int, what: str):
    if n < 2 or n & (n - 1):
        raise ValueError(f"{what} must be a power of two >= 2, got {n}")


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def par_macro_map(b: ProgramBuilder, kind: MacroKind, parts: Sequence[int],
                  in_offs: Sequence[int], out_offs: Sequence[int]):
    """Apply one macro per partition, lockstep (all gates local)."""
    io = [([b.col(p, o) for o in in_offs], [b.col(p, o) for o in out_offs])
          for p in parts]
    b.par_macro(kind, io, list(parts))


def par_add(b: ProgramBuilder, parts: Sequence[int], x_off: int, y_off: int,
            z_off: int, cin=0, invert_y: bool = False,
            cout: Optional[int] = None, cout_invert: bool = False,
            cout_index: Optional[int] = None):
    """Strided z <- x + y (mod 2^n) over `parts` via generate/alive prefix.

    `cin` is 0, 1, or a column handle readable from parts[0]; `cout`
    (a column handle) receives the carry out of position `cout_index`
    (default: the top), optionally inverted.  `invert_y` turns the block
    into x + ~y (+ cin).
    """
    n = len(parts)
    _pow2_check(n, "partition span of a parallel add")
    yy = y_off
    if invert_y:
        yy = b.alloc_shared(parts)
        b.par_gates(GateKind.NOT, [([b.col(p, y_off)], b.col(p, yy)) for p in parts])
    a_off = b.alloc_shared(parts)
    g_off = b.alloc_shared(parts)
    par_macro_map(b, MacroKind.OR2, parts, [x_off, yy], [a_off])
    par_macro_map(b, MacroKind.AND2, parts, [x_off, yy], [g_off])
    p0 = parts[0]
    if cin == 1:
        # with a hot carry-in the LSB generates exactly when it is alive
        b.copy(b.col(p0, a_off), b.col(p0, g_off))
    elif cin != 0:
        t = b.alloc1(p0)
        b.macro(MacroKind.AND2, [b.col(p0, a_off), cin], [t], partition=p0)
        b.macro(MacroKind.OR2, [b.col(p0, g_off), t], [b.col(p0, g_off)], partition=p0)
        b.free(t)
    prefix_bits(b, parts, AssocOp.CARRY, (g_off, a_off))
    c_off = b.alloc_shared(parts)
    shift_bits(b, parts, g_off, c_off, 1, fill=None)
    if cin == 0:
        b.gate(GateKind.INIT0, [], b.col(p0, c_off))
    elif cin == 1:
        b.gate(GateKind.INIT1, [], b.col(p0, c_off))
    else:
        b.copy(cin, b.col(p0, c_off))
    if cout is not None:
        src = b.col(parts[-1 if cout_index is None else cout_index], g_off)
        if cout_invert:
            b.gate(GateKind.NOT, [src], cout)
        else:
            b.copy(src, cout)
    par_macro_map(b, MacroKind.XOR3, parts, [x_off, yy, c_off], [z_off])
    b.free_shared(a_off, parts)
    b.free_shared(g_off, parts)
    b.free_shared(c_off, parts)
    if invert_y:
        b.free_shared(yy, parts)


def csas_mult(b: ProgramBuilder, n: int, x_off: int, y_off: int,
              z_cols: Sequence[int], w_off: int,
              tail: MultTail = MultTail.PREFIX_ADDER):
    """(w | z) <- x * y over partitions 0..n-1 by carry-save add-shift.

    `z_cols[i]` receives product bit i (any column); `w_off` receives the
    high half, strided over partitions 0..m-1 where m = next power of two
    of n (the prefix-adder tail runs on the padded span; high pad bits are
    zero).  The builder needs at least m partitions.
    """
    parts = list(range(n))
    m = _next_pow2(n)
    pad = list(range(m))
    s_off = b.alloc_shared(pad)
    c_off = b.alloc_shared(pad)
    bb_off = b.alloc_shared(pad)
    ab_off = b.alloc_shared(parts)
    b.par_gates(GateKind.INIT0, [([], b.col(p, s_off)) for p in parts])
    b.par_gates(GateKind.INIT0, [([], b.col(p, c_off)) for p in parts])

    def iteration(out_col: int, feed_zero: bool):
        if feed_zero:
            par_macro_map(b, MacroKind.HA, parts, [s_off, c_off], [s_off, c_off])
        else:
            par_macro_map(b, MacroKind.AND2, parts, [x_off, bb_off], [ab_off])
            par_macro_map(b, MacroKind.FA, parts, [s_off, c_off, ab_off], [s_off, c_off])
        b.copy(b.col(0, s_off), out_col)
        shift_bits(b, parts, s_off, s_off, 1, fill=0, toward_higher=False)

    for i in range(n):
        broadcast_bit(b, pad, i, y_off, bb_off)
        iteration(z_cols[i], feed_zero=False)
    if tail is MultTail.LEGACY_N_ITER:
        for i in range(n):
            iteration(b.col(i, w_off), feed_zero=True)
        if m > n:
            b.par_gates(GateKind.INIT0, [([], b.col(p, w_off)) for p in range(n, m)])
    else:
        if m > n:
            b.par_gates(GateKind.INIT0, [([], b.col(p, s_off)) for p in range(n, m)])
            b.par_gates(GateKind.INIT0, [([], b.col(p, c_off)) for p in range(n, m)])
        par_add(b, pad, s_off, c_off, w_off, cin=0)
    for off, ps in ((s_off, pad), (c_off, pad), (bb_off, pad), (ab_off, parts)):
        b.free_shared(off, ps)


def cscl_div(b: ProgramBuilder, n: int, w_off: int, z_off: int, d_off: int,
             q_cols: Sequence[int], r_off: int):
    """q, r of the 2n-bit dividend (w|z) over n-bit divisor d, carry-save.

    Operates over partitions 0..n (n a power of two); the final remainder
    addition runs over the padded 2n span, so the builder needs k >= 2n
    partitions and `r_off` must be free across all of them.  Outputs: bit i
    of the quotient lands in `q_cols[i]`, the remainder strided at `r_off`.
    """
    _pow2_check(n, "division width")
    span = list(range(n + 1))
    m = 2 * n
    allp = list(range(m))
    dd_off = b.alloc_shared(span)  # divisor with a zero sign-extension cell
    tmp = b.alloc_shared(span[:n])
    b.par_gates(GateKind.NOT, [([b.col(p, d_off)], b.col(p, tmp)) for p in span[:n]])
    b.par_gates(GateKind.NOT, [([b.col(p, tmp)], b.col(p, dd_off)) for p in span[:n]])
    b.free_shared(tmp, span[:n])
    b.gate(GateKind.INIT0, [], b.col(n, dd_off))

    s_off = b.alloc_shared(allp)
    c_off = b.alloc_shared(allp)
    qq_off = b.alloc_shared(allp)
    dq_off = b.alloc_shared(span)
    g_off = b.alloc_shared(span)
    a_off = b.alloc_shared(span)

    # remainder window init: S = (w << 1) | z_{n-1}, C = 0
    b.copy(b.col(n - 1, z_off), b.col(0, s_off))
    shift_bits(b, span, w_off, s_off, 1, fill=None)
    b.par_gates(GateKind.INIT0, [([], b.col(p, c_off)) for p in span])

    for i in range(n - 1, -1, -1):
        if i == n - 1:
            b.par_gates(GateKind.INIT1, [([], b.col(p, qq_off)) for p in allp])
        else:
            broadcast_bit(b, allp, i + 1, b._split(q_cols[i + 1])[1], qq_off)
        # conditional add/subtract folded into the carry-save step
        par_macro_map(b, MacroKind.XOR2, span, [dd_off, qq_off], [dq_off])
        par_macro_map(b, MacroKind.FA, span, [s_off, c_off, dq_off], [s_off, c_off])
        shift_bits(b, span, c_off, c_off, 1, fill=None)
        b.copy(b.col(0, qq_off), b.col(0, c_off))  # carry-in of the select
        # sign of S+C via lookahead: carry into bit n, then a 3-way XNOR
        par_macro_map(b, MacroKind.AND2, span[:n], [s_off, c_off], [g_off])
        par_macro_map(b, MacroKind.OR2, span[:n], [s_off, c_off], [a_off])
        reduce_bits(b, span[:n], AssocOp.CARRY, (g_off, a_off))
        t = b.alloc1(n)
        b.macro(MacroKind.XNOR2, [b.col(n, s_off), b.col(n, c_off)], [t], partition=n)
        b.macro(MacroKind.XOR2, [t, b.col(n - 1, g_off)], [q_cols[i]], partition=n)
        b.free(t)
        if i > 0:
            shift_bits(b, span, s_off, s_off, 1, fill=None)
            b.copy(b.col(i - 1, z_off), b.col(0, s_off))
            shift_bits(b, span, c_off, c_off, 1, fill=0)
    # r = S + C + AND(d, sign); sign = NOT q_0
    sgn = b.alloc1(0)
    b.gate(GateKind.NOT, [q_cols[0]], sgn)
    broadcast_bit(b, allp, 0, b._split(sgn)[1], qq_off)
    b.free(sgn)
    b.gate(GateKind.INIT0, [], b.col(n, dq_off))
    par_macro_map(b, MacroKind.AND2, span[:n], [dd_off, qq_off], [dq_off])
    par_macro_map(b, MacroKind.FA, span, [s_off, c_off, dq_off], [s_off, c_off])
    shift_bits(b, span, c_off, c_off, 1, fill=0)
    b.par_gates(GateKind.INIT0, [([], b.col(p, s_off)) for p in range(n + 1, m)])
    b.par_gates(GateKind.INIT0, [([], b.col(p, c_off)) for p in range(n + 1, m)])
    par_add(b, allp, s_off, c_off, r_off, cin=0)
    for off, ps in ((s_off, allp), (c_off, allp), (qq_off, allp), (dq_off, span),
                    (g_off, span), (a_off, span), (dd_off, span)):
        b.free_shared(off, ps)


# --- standalone emitters -------------------------------------------------


def _emit_addsub(N: int, subtract: bool) -> MicroProgram:
    _pow2_check(N, "N")
    b = ProgramBuilder(N)
    b.input("x", N, fmt=LayoutFormat.STRIDED)
    b.input("y", N, fmt=LayoutFormat.STRIDED)
    b.output("z", N, fmt=LayoutFormat.STRIDED)
    b.output("zc", 1, fmt=LayoutFormat.STRIDED)
    parts = list(range(N))
    zc = b.col(0, b.operands["zc"].base)
    par_add(b, parts, b.operands["x"].base, b.operands["y"].base,
            b.operands["z"].base, cin=1 if subtract else 0, invert_y=subtract,
            cout=zc, cout_invert=subtract)
    op = "sub" if subtract else "add"
    return b.finish(meta={"op": op, "variant": "parallel", "N": N})


def emit_add_parallel(N: int, layouts: Optional[dict] = None) -> MicroProgram:
    """Strided z (+ top bit zc) = x + y; prefix carry tree, O(log N) cycles."""
    return _emit_addsub(N, subtract=False)


def emit_sub_parallel(N: int, layouts: Optional[dict] = None) -> MicroProgram:
    """Strided z (+ top bit zc) = x - y mod 2^(N+1), two's complement."""
    return _emit_addsub(N, subtract=True)


def emit_mult_parallel(N: int, tail: MultTail = MultTail.PREFIX_ADDER,
                       layouts: Optional[dict] = None) -> MicroProgram:
    """Strided (w|z) = x * y by carry-save add-shift.

    N iterations of broadcast / partial-product / full-add / sum-shift emit
    the low half; the high half comes from one prefix-tree addition of the
    final sum and carry vectors (default) or from N extra zero-fed
    iterations (legacy mode, kept for cost comparison).
    """
    _pow2_check(N, "N")
    b = ProgramBuilder(N)
    b.input("x", N, fmt=LayoutFormat.STRIDED)
    b.input("y", N, fmt=LayoutFormat.STRIDED)
    b.output("z", N, fmt=LayoutFormat.STRIDED)
    b.output("w", N, fmt=LayoutFormat.STRIDED)
    csas_mult(b, N, b.operands["x"].base, b.operands["y"].base,
              b.operand_cols("z"), b.operands["w"].base, tail)
    return b.finish(meta={"op": "mul", "variant": "parallel", "N": N, "tail": tail.value})


def emit_div_parallel(N: int, layouts: Optional[dict] = None) -> MicroProgram:
    """Strided q, r with (w|z) = q*d + r, 0 <= r < d (d != 0, quotient fits N).

    Non-restoring with the remainder in carry-save form over N+1 partitions;
    each iteration's sign comes from a carry-lookahead reduction, so the
    whole divider runs in O(N log N) cycles.  k = 2N partitions keep the
    N+1-wide signal span inside a power-of-two switch fabric.
    """
    _pow2_check(N, "N")
    b = ProgramBuilder(2 * N)
    b.input("w", N, fmt=LayoutFormat.STRIDED)
    b.input("z", N, fmt=LayoutFormat.STRIDED)
    b.input("d", N, fmt=LayoutFormat.STRIDED)
    b.output("q", N, fmt=LayoutFormat.STRIDED)
    b.output("r", N, fmt=LayoutFormat.STRIDED)
    allp = list(range(2 * N))
    r_work = b.alloc_shared(allp)
    cscl_div(b, N, b.operands["w"].base, b.operands["z"].base,
             b.operands["d"].base, b.operand_cols("q"), r_work)
    tmp = b.alloc_shared(list(range(N)))
    b.par_gates(GateKind.NOT, [([b.col(p, r_work)], b.col(p, tmp)) for p in range(N)])
    b.par_gates(GateKind.NOT, [([b.col(p, tmp)], b.col(p, b.operands["r"].base))
                               for p in range(N)])
    b.free_shared(tmp, list(range(N)))
    b.free_shared(r_work, allp)
    return b.finish(meta={"op": "div", "variant": "parallel", "N": N})
