"""Bit-serial fixed-point emitters: ripple add/sub, recursive multiply with a
shift-and-add base case, and non-restoring divide.

All emitters are pure functions of their size parameters; the gate sequence
never depends on operand values.  Numbers are unsigned, LSB first; subtraction
is two's-complement over N+1 bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import GateKind, MicroProgram
from .microcode import MacroKind, ProgramBuilder

__all__ = [
    "SerialFixedParams",
    "KARATSUBA_THRESHOLD",
    "emit_add_serial",
    "emit_sub_serial",
    "emit_mult_serial",
    "emit_div_serial",
]

KARATSUBA_THRESHOLD = 20


@dataclass(frozen=True)
class SerialFixedParams:
    """Size knobs shared by the bit-serial fixed-point emitters."""

    N: int
    n_thresh: int = KARATSUBA_THRESHOLD
    signed: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.n_thresh < 2:
            raise ValueError("n_thresh must be >= 2")


# --- reusable ripple helpers (also the backbone of the float emitters) -----


def copy_vec(b: ProgramBuilder, src: Sequence[int], dst: Sequence[int]):
    for s, d in zip(src, dst):
        b.copy(s, d)


def init_vec(b: ProgramBuilder, cols: Sequence[int], value: int = 0):
    for i, c in enumerate(cols):
        b.gate(GateKind.INIT1 if (value >> i) & 1 else GateKind.INIT0, [], c)


def not_vec(b: ProgramBuilder, src: Sequence[int], dst: Sequence[int]):
    for s, d in zip(src, dst):
        b.gate(GateKind.NOT, [s], d)


def _cin_col(b: ProgramBuilder, cin) -> int:
    return b.const(cin) if cin in (0, 1) else cin


def ripple_add(b: ProgramBuilder, xs: Sequence[int], ys: Sequence[int],
               outs: Sequence[int], cin=0, cout: Optional[int] = None):
    """outs <- xs + ys (+ cin); the carry ripples through one cell.

    `cin` is 0, 1 or a column; `cout` (optional) receives the final carry.
    Output columns may alias input columns position-wise (read-then-write).
    """
    n = len(xs)
    assert len(ys) == n and len(outs) == n
    carry = cout if cout is not None else b.alloc1()
    prev = _cin_col(b, cin)
    for i in range(n):
        b.macro(MacroKind.FA, [xs[i], ys[i], prev], [outs[i], carry])
        prev = carry
    if cout is None:
        b.free(carry)


def ripple_add_in_place(b: ProgramBuilder, acc: Sequence[int], addend: Sequence[int],
                        cin=0, invert_addend: bool = False):
    """acc <- acc + addend (or acc - addend with invert_addend and cin=1).

    The addend may be shorter than acc; missing high bits are 0 (or 1 when
    inverted).  The final carry out of the top cell is discarded.
    """
    carry = b.alloc1()
    ny = b.alloc1() if invert_addend else None
    dead = b.alloc1()
    prev = _cin_col(b, cin)
    one = None
    for i, a in enumerate(acc):
        target = carry if i < len(acc) - 1 else dead
        if i < len(addend):
            if invert_addend:
                b.gate(GateKind.NOT, [addend[i]], ny)
                b.macro(MacroKind.FA, [a, ny, prev], [a, target])
            else:
                b.macro(MacroKind.FA, [a, addend[i], prev], [a, target])
        else:
            if invert_addend:
                if one is None:
                    one = b.const(1)
                b.macro(MacroKind.FA, [a, one, prev], [a, target])
            else:
                b.macro(MacroKind.HA, [a, prev], [a, target])
        prev = target
    b.free(carry)
    b.free(dead)
    if ny is not None:
        b.free(ny)


def ripple_sub(b: ProgramBuilder, xs: Sequence[int], ys: Sequence[int],
               outs: Sequence[int], cout: Optional[int] = None):
    """outs <- xs - ys mod 2^n via xs + ~ys + 1."""
    n = len(xs)
    carry = cout if cout is not None else b.alloc1()
    ny = b.alloc1()
    prev = _cin_col(b, 1)
    for i in range(n):
        b.gate(GateKind.NOT, [ys[i]], ny)
        b.macro(MacroKind.FA, [xs[i], ny, prev], [outs[i], carry])
        prev = carry
    b.free(ny)
    if cout is None:
        b.free(carry)


# --- emitters ------------------------------------------------------------


def emit_add_serial(N: int, layouts: Optional[dict] = None) -> MicroProgram:
    """z = x + y with the carry bit as z_N; N full adders, one gate per cycle."""
    if N < 1:
        raise ValueError("N must be >= 1")
    layouts = layouts or {}
    b = ProgramBuilder(1)
    b.input("x", N, base=layouts.get("x"))
    b.input("y", N, base=layouts.get("y"))
    b.output("z", N + 1, base=layouts.get("z"))
    xs, ys, zs = b.operand_cols("x"), b.operand_cols("y"), b.operand_cols("z")
    ripple_add(b, xs, ys, zs[:N], cin=0, cout=zs[N])
    return b.finish(meta={"op": "add", "variant": "serial", "N": N})


def emit_sub_serial(N: int, layouts: Optional[dict] = None) -> MicroProgram:
    """z = x - y mod 2^(N+1), two's complement (x + ~y + 1 over N+1 bits)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    layouts = layouts or {}
    b = ProgramBuilder(1)
    b.input("x", N, base=layouts.get("x"))
    b.input("y", N, base=layouts.get("y"))
    b.output("z", N + 1, base=layouts.get("z"))
    xs, ys, zs = b.operand_cols("x"), b.operand_cols("y"), b.operand_cols("z")
    carry = b.alloc1()
    ripple_sub(b, xs, ys, zs[:N], cout=carry)
    # top bit: x_N=0 and ~y_N=1 give sum = NOT carry
    b.gate(GateKind.NOT, [carry], zs[N])
    b.free(carry)
    return b.finish(meta={"op": "sub", "variant": "serial", "N": N})


def _mult_base(b: ProgramBuilder, xs, ys, zs):
    """Shift-and-add: z accumulates AND(x, y_i) at offset i, N ripple adds."""
    n = len(xs)
    init_vec(b, zs, 0)
    p = b.alloc1()
    carry = b.alloc1()
    for i in range(n):
        prev = b.const(0)
        for j in range(n):
            b.macro(MacroKind.AND2, [xs[j], ys[i]], [p])
            # the top adder writes its carry straight into the next z cell
            target = zs[i + n] if j == n - 1 else carry
            b.macro(MacroKind.FA, [zs[i + j], p, prev], [zs[i + j], target])
            prev = target
    b.free([p, carry])


def _mult_into(b: ProgramBuilder, xs, ys, zs, n_thresh: int):
    """Product of equal-width vectors into zs (2n columns)."""
    n = len(xs)
    assert len(ys) == n and len(zs) == 2 * n
    if n <= n_thresh or n < 4:
        _mult_base(b, xs, ys, zs)
        return
    if n % 2:
        # pad to the next even width at this level only
        zero = b.const(0)
        ext = b.alloc(2)
        _mult_into(b, list(xs) + [zero], list(ys) + [zero], list(zs) + ext, n_thresh)
        b.free(ext)
        return
    h = n // 2
    xl, xh = xs[:h], xs[h:]
    yl, yh = ys[:h], ys[h:]
    # sums first so their cells can be recycled by the recursive calls
    sx = b.alloc(h + 1)
    sy = b.alloc(h + 1)
    ripple_add(b, xl, xh, sx[:h], cin=0, cout=sx[h])
    ripple_add(b, yl, yh, sy[:h], cin=0, cout=sy[h])
    t1 = b.alloc(2 * h + 2)
    _mult_into(b, sx, sy, t1, n_thresh)
    b.free(sx)
    b.free(sy)
    _mult_into(b, xl, yl, zs[:n], n_thresh)   # low product in place
    _mult_into(b, xh, yh, zs[n:], n_thresh)   # high product in place
    ripple_add_in_place(b, t1, zs[:n], cin=1, invert_addend=True)
    ripple_add_in_place(b, t1, zs[n:], cin=1, invert_addend=True)
    ripple_add_in_place(b, zs[h:], t1)
    b.free(t1)


def emit_mult_serial(N: int, n_thresh: int = KARATSUBA_THRESHOLD,
                     layouts: Optional[dict] = None) -> MicroProgram:
    """z = x * y (2N bits).  Recursive three-multiply split above n_thresh,
    shift-and-add below it."""
    if N < 1:
        raise ValueError("N must be >= 1")
    layouts = layouts or {}
    b = ProgramBuilder(1)
    b.input("x", N, base=layouts.get("x"))
    b.input("y", N, base=layouts.get("y"))
    b.output("z", 2 * N, base=layouts.get("z"))
    _mult_into(b, b.operand_cols("x"), b.operand_cols("y"), b.operand_cols("z"), n_thresh)
    return b.finish(meta={"op": "mul", "variant": "serial", "N": N, "n_thresh": n_thresh})


def div_into(b: ProgramBuilder, zs: Sequence[int], ds: Sequence[int],
             qs: Sequence[int], rs: Sequence[int]):
    """Non-restoring divide: (q, r) of the 2N-bit dividend zs over ds.

    The remainder window R (N+1 bits, two's complement) alternates between
    two banks so each iteration's sum lands pre-shifted.  The add/subtract
    choice rides on the previous quotient bit via a bitwise XOR of the
    divisor plus a matching carry-in.  Requires d != 0 and z < d * 2^N;
    outputs are unspecified outside that domain.
    """
    N = len(ds)
    assert len(zs) == 2 * N and len(qs) == N and len(rs) == N
    bank_a = b.alloc(N + 1)
    bank_b = b.alloc(N + 1)
    copy_vec(b, zs[N - 1:], bank_a)

    e = b.alloc1()
    stmp = b.alloc1()
    carry = b.alloc1()
    dead = b.alloc1()
    ctrl = b.const(1)  # q_N
    cur, nxt = bank_a, bank_b
    for i in range(N - 1, -1, -1):
        prev = ctrl  # carry-in equals the add/sub select
        for j in range(N + 1):
            if j < N:
                b.macro(MacroKind.XOR2, [ds[j], ctrl], [e])
                addend = e
            else:
                addend = ctrl  # divisor sign extension xor select
            if j == N:
                sum_to = nxt[N] if i == 0 else stmp
                carry_to = dead
            else:
                sum_to = nxt[j] if i == 0 else nxt[j + 1]
                carry_to = carry
            b.macro(MacroKind.FA, [cur[j], addend, prev], [sum_to, carry_to])
            prev = carry_to
        # quotient bit = NOT(sign of the new remainder)
        b.gate(GateKind.NOT, [nxt[N] if i == 0 else stmp], qs[i])
        if i > 0:
            b.copy(zs[i - 1], nxt[0])
        ctrl = qs[i]
        cur, nxt = nxt, cur
    final = cur  # the bank written by the last iteration (post-swap)
    # r <- R + AND(d, sign); sign = R_N = NOT q_0
    t = b.alloc1()
    prev = b.const(0)
    for j in range(N):
        b.macro(MacroKind.AND2, [ds[j], final[N]], [t])
        b.macro(MacroKind.FA, [final[j], t, prev], [rs[j], carry])
        prev = carry
    b.free(t)
    b.free([e, stmp, carry, dead])
    b.free(bank_a)
    b.free(bank_b)


def emit_div_serial(N: int, layouts: Optional[dict] = None) -> MicroProgram:
    """q, r with z = q*d + r and 0 <= r < d, for d != 0 and z < d * 2^N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    layouts = layouts or {}
    b = ProgramBuilder(1)
    b.input("z", 2 * N, base=layouts.get("z"))
    b.input("d", N, base=layouts.get("d"))
    b.output("q", N, base=layouts.get("q"))
    b.output("r", N, base=layouts.get("r"))
    div_into(b, b.operand_cols("z"), b.operand_cols("d"),
             b.operand_cols("q"), b.operand_cols("r"))
    return b.finish(meta={"op": "div", "variant": "serial", "N": N})
