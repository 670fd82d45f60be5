"""Bit-serial floating point: variable shift, variable normalization, and
add/sub/mul/div with exact round-to-nearest-even on normal numbers.

Operands are packed LSB first as [mantissa | exponent | sign], matching the
integer encoding of the format.
"""

from __future__ import annotations

from typing import Optional

from .core import GateKind, MicroProgram
from .float_core import (
    FloatFormat,
    SerialOps,
    build_fadd,
    build_fdiv,
    build_fmul,
)
from .microcode import ProgramBuilder
from .serial_fixed import copy_vec

__all__ = [
    "FloatFormat",
    "emit_varshift_serial",
    "emit_normalize_serial",
    "emit_fadd_unsigned_serial",
    "emit_fadd_signed_serial",
    "emit_fsub_signed_serial",
    "emit_fmul_serial",
    "emit_fdiv_serial",
]


def emit_varshift_serial(n_x: int, n_t: int, direction: str = "right",
                         sticky: bool = False,
                         layouts: Optional[dict] = None) -> MicroProgram:
    """z = x >> t (or << t), exact for every t < 2^n_t.

    Log-shifter: level j muxes between z and z shifted by 2^j on t's j-th
    bit; cells shifted past the edge are masked to zero, and with `sticky`
    every discarded bit is ORed into a one-bit output column.
    """
    if n_x < 2 or n_t < 1:
        raise ValueError("need n_x >= 2 and n_t >= 1")
    if direction not in ("right", "left"):
        raise ValueError(f"direction must be 'right' or 'left', got {direction!r}")
    if sticky and direction == "left":
        raise ValueError("sticky accumulation applies to right shifts only")
    b = ProgramBuilder(1)
    b.input("x", n_x)
    b.input("t", n_t)
    b.output("z", n_x)
    st_col = None
    if sticky:
        b.output("sticky", 1)
        st_col = b.operand_cols("sticky")[0]
        b.gate(GateKind.INIT0, [], st_col)
    ops = SerialOps(b)
    zc = b.operand_cols("z")
    copy_vec(b, b.operand_cols("x"), zc)
    tc = b.operand_cols("t")
    if direction == "right":
        ops.varshift_right_sticky(zc, tc, st_col)
    else:
        ops.varshift_left(zc, tc)
    return b.finish(meta={"op": "varshift", "variant": "serial", "N_x": n_x,
                          "N_t": n_t, "direction": direction, "sticky": sticky})


def emit_normalize_serial(n_x: int, layouts: Optional[dict] = None) -> MicroProgram:
    """z = x shifted left until its MSB is one; t = the leading-zero count.

    Binary search: test whether the top 2^j window is all zero, shift
    conditionally, halve the window.  For x = 0, z stays 0 and t reads
    2^levels - 1.
    """
    if n_x < 2:
        raise ValueError("need n_x >= 2")
    levels = (n_x - 1).bit_length()
    b = ProgramBuilder(1)
    b.input("x", n_x)
    b.output("z", n_x)
    b.output("t", levels)
    ops = SerialOps(b)
    zc = b.operand_cols("z")
    copy_vec(b, b.operand_cols("x"), zc)
    tv = ops.normalize(zc)
    copy_vec(b, tv, b.operand_cols("t"))
    ops.free(tv)
    return b.finish(meta={"op": "normalize", "variant": "serial", "N_x": n_x})


def _emit_float(fmt: FloatFormat, name: str, builder_fn, **kw) -> MicroProgram:
    b = ProgramBuilder(1)
    tag = (fmt.n_e, fmt.n_m)
    b.input("x", fmt.width, float_fmt=tag)
    b.input("y", fmt.width, float_fmt=tag)
    b.output("z", fmt.width, float_fmt=tag)
    builder_fn(SerialOps(b), fmt, b.operand_cols("x"), b.operand_cols("y"),
               b.operand_cols("z"), **kw)
    return b.finish(meta={"op": name, "variant": "serial",
                          "fmt": f"{fmt.n_e},{fmt.n_m}"})


def emit_fadd_unsigned_serial(fmt: FloatFormat) -> MicroProgram:
    """Sum of two same-sign normal floats (sign passes through)."""
    return _emit_float(fmt, "fadd-unsigned", build_fadd, signed=False)


def emit_fadd_signed_serial(fmt: FloatFormat) -> MicroProgram:
    """Signed sum; exact cancellation yields the canonical zero encoding."""
    return _emit_float(fmt, "fadd", build_fadd, signed=True)


def emit_fsub_signed_serial(fmt: FloatFormat) -> MicroProgram:
    """Signed difference (sign-flip of y, then signed addition)."""
    return _emit_float(fmt, "fsub", build_fadd, signed=True, negate_y=True)


def emit_fmul_serial(fmt: FloatFormat) -> MicroProgram:
    """Product of normal floats, round to nearest even."""
    return _emit_float(fmt, "fmul", build_fmul)


def emit_fdiv_serial(fmt: FloatFormat) -> MicroProgram:
    """Quotient of normal floats, round to nearest even."""
    return _emit_float(fmt, "fdiv", build_fdiv)
