"""Bit-parallel floating point on strided operands: variable shift and
normalization through the partition toolbox, and add/sub/mul/div composed
from the prefix adder, carry-save multiplier and divider.

Bit i of a float lives in partition i; working signals occupy further
intra-partition offsets so fixed- and floating-point programs share one
array geometry.
"""

from __future__ import annotations

from typing import Optional

from .core import GateKind, LayoutFormat, MicroProgram
from .float_core import (
    FloatFormat,
    ParallelOps,
    build_fadd,
    build_fdiv,
    build_fmul,
)
from .microcode import ProgramBuilder

__all__ = [
    "emit_varshift_parallel",
    "emit_normalize_parallel",
    "emit_fadd_parallel",
    "emit_fsub_parallel",
    "emit_fmul_parallel",
    "emit_fdiv_parallel",
]


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def _copy_local(b, src_cols, dst_cols):
    ops = ParallelOps(b)
    ops.copy(src_cols, dst_cols)


def emit_varshift_parallel(n_x: int, n_t: int, direction: str = "right",
                           sticky: bool = False,
                           layouts: Optional[dict] = None) -> MicroProgram:
    """Strided z = x >> t (or << t): per level, a deterministic
    inter-partition shift, a broadcast of t's bit, and one multiplexer per
    partition."""
    if n_x < 2 or n_t < 1:
        raise ValueError("need n_x >= 2 and n_t >= 1")
    if direction not in ("right", "left"):
        raise ValueError(f"direction must be 'right' or 'left', got {direction!r}")
    if sticky and direction == "left":
        raise ValueError("sticky accumulation applies to right shifts only")
    k = _next_pow2(max(n_x, n_t, 2))
    b = ProgramBuilder(k)
    b.input("x", n_x, fmt=LayoutFormat.STRIDED)
    b.input("t", n_t, fmt=LayoutFormat.STRIDED)
    b.output("z", n_x, fmt=LayoutFormat.STRIDED)
    ops = ParallelOps(b)
    st_col = None
    if sticky:
        b.output("sticky", 1, fmt=LayoutFormat.STRIDED)
        st_col = b.operand_cols("sticky")[0]
        b.gate(GateKind.INIT0, [], st_col)
    zc = b.operand_cols("z")
    ops.copy(b.operand_cols("x"), zc)
    tc = b.operand_cols("t")
    if direction == "right":
        ops.varshift_right_sticky(zc, tc, st_col)
    else:
        ops.varshift_left(zc, tc)
    return b.finish(meta={"op": "varshift", "variant": "parallel", "N_x": n_x,
                          "N_t": n_t, "direction": direction, "sticky": sticky})


def emit_normalize_parallel(n_x: int, layouts: Optional[dict] = None) -> MicroProgram:
    """Strided z = x << (leading-zero count), t = that count; the window
    tests run as reduction-OR trees over the top partitions."""
    if n_x < 2:
        raise ValueError("need n_x >= 2")
    levels = (n_x - 1).bit_length()
    k = _next_pow2(n_x)
    b = ProgramBuilder(k)
    b.input("x", n_x, fmt=LayoutFormat.STRIDED)
    b.output("z", n_x, fmt=LayoutFormat.STRIDED)
    b.output("t", levels, fmt=LayoutFormat.STRIDED)
    ops = ParallelOps(b)
    zc = b.operand_cols("z")
    ops.copy(b.operand_cols("x"), zc)
    tv = ops.normalize(zc)
    ops.copy(tv, b.operand_cols("t"))
    ops.free(tv)
    return b.finish(meta={"op": "normalize", "variant": "parallel", "N_x": n_x})


def _emit_float(fmt: FloatFormat, k: int, name: str, builder_fn, **kw) -> MicroProgram:
    b = ProgramBuilder(k)
    tag = (fmt.n_e, fmt.n_m)
    b.input("x", fmt.width, fmt=LayoutFormat.STRIDED, float_fmt=tag)
    b.input("y", fmt.width, fmt=LayoutFormat.STRIDED, float_fmt=tag)
    b.output("z", fmt.width, fmt=LayoutFormat.STRIDED, float_fmt=tag)
    builder_fn(ParallelOps(b), fmt, b.operand_cols("x"), b.operand_cols("y"),
               b.operand_cols("z"), **kw)
    return b.finish(meta={"op": name, "variant": "parallel",
                          "fmt": f"{fmt.n_e},{fmt.n_m}"})


def _k_addsub(fmt: FloatFormat) -> int:
    return _next_pow2(max(fmt.width, fmt.n_m + 5, fmt.n_e + 2))


def emit_fadd_parallel(fmt: FloatFormat) -> MicroProgram:
    """Signed strided sum, bit-identical to the bit-serial emitter."""
    return _emit_float(fmt, _k_addsub(fmt), "fadd", build_fadd, signed=True)


def emit_fsub_parallel(fmt: FloatFormat) -> MicroProgram:
    """Signed strided difference."""
    return _emit_float(fmt, _k_addsub(fmt), "fsub", build_fadd,
                       signed=True, negate_y=True)


def emit_fmul_parallel(fmt: FloatFormat) -> MicroProgram:
    """Strided product via the carry-save mantissa multiplier."""
    k = _next_pow2(max(fmt.width, _next_pow2(fmt.n_m + 1), fmt.n_e + 2))
    return _emit_float(fmt, k, "fmul", build_fmul)


def emit_fdiv_parallel(fmt: FloatFormat) -> MicroProgram:
    """Strided quotient via the carry-save carry-lookahead divider."""
    k = max(_next_pow2(fmt.width), 2 * _next_pow2(fmt.n_m + 4))
    return _emit_float(fmt, k, "fdiv", build_fdiv)
