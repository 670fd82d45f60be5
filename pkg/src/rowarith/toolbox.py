"""Inter-partition communication on strided bits: shift, broadcast,
reduction, and prefix (scan).

Round counts are the architectural unit (shift j+1, broadcast log2 k,
reduce log2 k, prefix 2*log2 k - 1).  Each round lowers to a small fixed
number of cycles: single-bit transport is an identity gate built from two
NOTs, staged through a temp cell in the destination partition so in-place
shifts never read a clobbered source.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional, Sequence

from .core import GateKind, MicroProgram
from .microcode import MacroKind, ProgramBuilder

__all__ = [
    "AssocOp",
    "scalar_combine",
    "scalar_identity",
    "emit_shift",
    "emit_broadcast",
    "emit_reduce",
    "emit_prefix",
    "shift_bits",
    "broadcast_bit",
    "reduce_bits",
    "prefix_bits",
]


class AssocOp(Enum):
    AND = "AND"
    OR = "OR"
    XOR = "XOR"
    CARRY = "CARRY"  # two-bit (generate, alive) combine


def scalar_identity(op: AssocOp):
    if op is AssocOp.AND:
        return 1
    if op is AssocOp.CARRY:
        return (0, 1)
    return 0


def scalar_combine(op: AssocOp, hi, lo):
    """Host-side evaluator; `hi` is the element at the larger partition index."""
    if op is AssocOp.AND:
        return hi & lo
    if op is AssocOp.OR:
        return hi | lo
    if op is AssocOp.XOR:
        return hi ^ lo
    g, a = hi
    gl, al = lo
    return (g | (a & gl), a & al)


def _log2(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"expected a power of two, got {n}")
    return n.bit_length() - 1


# --- builder-level routines (shared with the bit-parallel emitters) --------


def shift_bits(b: ProgramBuilder, parts: Sequence[int], src_off: int, dst_off: int,
               j: int, fill: Optional[int] = 0, toward_higher: bool = True) -> int:
    """dst bit of partition p+j (or p-j) <- src bit of partition p.

    j+1 cross rounds (sources taken modulo j+1) write temps in the
    destinations, one local pass commits them, and boundary destinations
    take `fill` (None leaves them untouched).  Works in place
    (dst_off == src_off).  Returns the round count.
    """
    n = len(parts)
    if not (1 <= j <= n - 1):
        raise ValueError(f"shift distance must be in [1, {n - 1}], got {j}")
    moves = []  # (src index, dst index) within parts
    for i in range(n):
        t = i + j if toward_higher else i - j
        if 0 <= t < n:
            moves.append((i, t))
    dests = [parts[t] for _, t in moves]
    tmp = b.alloc_shared(dests)
    for phase in range(j + 1):
        io = [([b.col(parts[i], src_off)], b.col(parts[t], tmp))
              for i, t in moves if i % (j + 1) == phase]
        if io:
            b.par_gates(GateKind.NOT, io)
    b.par_gates(GateKind.NOT, [([b.col(parts[t], tmp)], b.col(parts[t], dst_off))
                               for _, t in moves])
    b.free_shared(tmp, dests)
    if fill is not None:
        boundary = [parts[i] for i in range(n)
                    if (i < j if toward_higher else i >= n - j)]
        kind = GateKind.INIT1 if fill else GateKind.INIT0
        b.par_gates(kind, [([], b.col(p, dst_off)) for p in boundary])
    return j + 1


def broadcast_bit(b: ProgramBuilder, parts: Sequence[int], src_index: int,
                  src_off: int, dst_off: int) -> int:
    """Copy one partition's bit to dst_off of every partition in log2 rounds.

    Doubling on the partner pattern p XOR (n >> (r+1)); the filled side of
    every pair is the same in a round, so the steps stay uniform.
    """
    n = len(parts)
    levels = _log2(n)
    if not (0 <= src_index < n):
        raise ValueError(f"source partition index {src_index} out of range")
    b.copy(b.col(parts[src_index], src_off), b.col(parts[src_index], dst_off))
    for r in range(levels):
        m = n >> (r + 1)
        srcs = [src_index ^ sum(bits) for bits in _subsets([n >> (l + 1) for l in range(r)])]
        dsts = [s ^ m for s in srcs]
        tmp = b.alloc_shared([parts[d] for d in dsts])
        b.par_gates(GateKind.NOT, [([b.col(parts[s], dst_off)], b.col(parts[d], tmp))
                                   for s, d in zip(srcs, dsts)])
        b.par_gates(GateKind.NOT, [([b.col(parts[d], tmp)], b.col(parts[d], dst_off))
                                   for d in dsts])
        b.free_shared(tmp, [parts[d] for d in dsts])
    return levels


def _subsets(weights: Sequence[int]) -> list[tuple[int, ...]]:
    out = [()]
    for w in weights:
        out = out + [s + (w,) for s in out]
    return out


def _combine_pairs(b: ProgramBuilder, op: AssocOp, parts, pairs, offs):
    """work[dst] <- work[dst] o work[src] for each (src, dst) index pair."""
    tmp_parts = [parts[d] for _, d in pairs]
    if op is AssocOp.CARRY:
        g, a = offs
        t = b.alloc_shared(tmp_parts)
        b.par_macro(MacroKind.AND2,
                    [([b.col(parts[d], a), b.col(parts[s], g)], [b.col(parts[d], t)])
                     for s, d in pairs], tmp_parts)
        b.par_macro(MacroKind.OR2,
                    [([b.col(parts[d], g), b.col(parts[d], t)], [b.col(parts[d], g)])
                     for s, d in pairs], tmp_parts)
        b.par_macro(MacroKind.AND2,
                    [([b.col(parts[d], a), b.col(parts[s], a)], [b.col(parts[d], a)])
                     for s, d in pairs], tmp_parts)
        b.free_shared(t, tmp_parts)
        return
    macro = {AssocOp.AND: MacroKind.AND2, AssocOp.OR: MacroKind.OR2,
             AssocOp.XOR: MacroKind.XOR2}[op]
    b.par_macro(macro,
                [([b.col(parts[d], offs), b.col(parts[s], offs)], [b.col(parts[d], offs)])
                 for s, d in pairs], tmp_parts)


def reduce_bits(b: ProgramBuilder, parts: Sequence[int], op: AssocOp, offs) -> int:
    """Fold op across `parts` (in place on the work offsets); the result
    lands in the last partition.  `offs` is an offset (1-bit ops) or a
    (generate, alive) offset pair for CARRY.  log2(n) rounds."""
    n = len(parts)
    levels = _log2(n)
    for r in range(levels):
        step = 1 << (r + 1)
        pairs = [(i + (1 << r) - 1, i + step - 1) for i in range(0, n, step)]
        _combine_pairs(b, op, parts, pairs, offs)
    return levels


def prefix_bits(b: ProgramBuilder, parts: Sequence[int], op: AssocOp, offs) -> int:
    """Inclusive scan across `parts` in 2*log2(n) - 1 rounds (up then down
    sweep); partition i ends with x_0 o ... o x_i."""
    n = len(parts)
    levels = _log2(n)
    rounds = reduce_bits(b, parts, op, offs)
    for d in range(levels - 1, 0, -1):
        step = 1 << d
        half = 1 << (d - 1)
        pairs = [(p - half, p) for p in range(step - 1 + half, n, step)]
        if pairs:
            _combine_pairs(b, op, parts, pairs, offs)
            rounds += 1
    return rounds


# --- standalone emitters -----------------------------------------------------


def emit_shift(k: int, j: int, layouts: Optional[dict] = None) -> MicroProgram:
    """z[p + j] <- x[p]; the lowest j partitions of z read 0."""
    from .core import LayoutFormat
    b = ProgramBuilder(k)
    b.input("x", k, fmt=LayoutFormat.STRIDED)
    b.output("z", k, fmt=LayoutFormat.STRIDED)
    x_off = b.operands["x"].base
    z_off = b.operands["z"].base
    rounds = shift_bits(b, range(k), x_off, z_off, j, fill=0)
    return b.finish(meta={"op": "toolbox-shift", "k": k, "j": j, "rounds": rounds})


def emit_broadcast(k: int, src: int, layouts: Optional[dict] = None) -> MicroProgram:
    """All partitions of z receive x's bit at partition `src`."""
    from .core import LayoutFormat
    if not (0 <= src < k):
        raise ValueError(f"source partition {src} out of range")
    b = ProgramBuilder(k)
    b.input("x", k, fmt=LayoutFormat.STRIDED)
    b.output("z", k, fmt=LayoutFormat.STRIDED)
    rounds = broadcast_bit(b, range(k), src, b.operands["x"].base, b.operands["z"].base)
    return b.finish(meta={"op": "toolbox-broadcast", "k": k, "src": src, "rounds": rounds})


def _copy_strided(b: ProgramBuilder, parts, src_off, dst_off):
    tmp = b.alloc_shared(parts)
    b.par_gates(GateKind.NOT, [([b.col(p, src_off)], b.col(p, tmp)) for p in parts])
    b.par_gates(GateKind.NOT, [([b.col(p, tmp)], b.col(p, dst_off)) for p in parts])
    b.free_shared(tmp, parts)


def emit_reduce(k: int, op: AssocOp, layouts: Optional[dict] = None) -> MicroProgram:
    """Fold of op over all k bits; partition k-1 holds the result (lower
    partitions hold the partial folds of the logarithmic tree)."""
    from .core import LayoutFormat
    b = ProgramBuilder(k)
    parts = list(range(k))
    if op is AssocOp.CARRY:
        b.input("g", k, fmt=LayoutFormat.STRIDED)
        b.input("a", k, fmt=LayoutFormat.STRIDED)
        b.output("gg", k, fmt=LayoutFormat.STRIDED)
        b.output("aa", k, fmt=LayoutFormat.STRIDED)
        _copy_strided(b, parts, b.operands["g"].base, b.operands["gg"].base)
        _copy_strided(b, parts, b.operands["a"].base, b.operands["aa"].base)
        rounds = reduce_bits(b, parts, op, (b.operands["gg"].base, b.operands["aa"].base))
    else:
        b.input("x", k, fmt=LayoutFormat.STRIDED)
        b.output("z", k, fmt=LayoutFormat.STRIDED)
        _copy_strided(b, parts, b.operands["x"].base, b.operands["z"].base)
        rounds = reduce_bits(b, parts, op, b.operands["z"].base)
    return b.finish(meta={"op": "toolbox-reduce", "k": k, "assoc": op.value, "rounds": rounds})


def emit_prefix(k: int, op: AssocOp, layouts: Optional[dict] = None) -> MicroProgram:
    """Inclusive scan: partition i ends with x_0 o ... o x_i."""
    from .core import LayoutFormat
    b = ProgramBuilder(k)
    parts = list(range(k))
    if op is AssocOp.CARRY:
        b.input("g", k, fmt=LayoutFormat.STRIDED)
        b.input("a", k, fmt=LayoutFormat.STRIDED)
        b.output("gg", k, fmt=LayoutFormat.STRIDED)
        b.output("aa", k, fmt=LayoutFormat.STRIDED)
        _copy_strided(b, parts, b.operands["g"].base, b.operands["gg"].base)
        _copy_strided(b, parts, b.operands["a"].base, b.operands["aa"].base)
        rounds = prefix_bits(b, parts, op, (b.operands["gg"].base, b.operands["aa"].base))
    else:
        b.input("x", k, fmt=LayoutFormat.STRIDED)
        b.output("z", k, fmt=LayoutFormat.STRIDED)
        _copy_strided(b, parts, b.operands["x"].base, b.operands["z"].base)
        rounds = prefix_bits(b, parts, op, b.operands["z"].base)
    return b.finish(meta={"op": "toolbox-prefix", "k": k, "assoc": op.value, "rounds": rounds})
