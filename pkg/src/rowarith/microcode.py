"""Program construction kit: scratch allocation, macro lowering, step building.

Macros are fixed netlists over the device gates.  Gate budgets (documented
here, asserted by tests):

    NOT 1   OR2 2   AND2 3   ANDN2 2   XNOR2 5   XOR2 6   MUX 7   HA 7
    FA 9    XOR3 10 (two XNOR2 stages)

The full adder uses the dense nine-gate NOR netlist because it is the unit
every cycle-count comparison is normalized to; the rest lower structurally
through complement-and-NOR composition.
"""

from __future__ import annotations

from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .core import (
    CycleStep,
    GateInstance,
    GateKind,
    LayoutFormat,
    MicroProgram,
    OperandLayout,
    PartitionConfig,
    Role,
    RowState,
    SwitchConfig,
    validate_program,
)

__all__ = [
    "MacroKind",
    "Allocator",
    "CapacityError",
    "ProgramBuilder",
    "write_operand",
    "read_operand",
    "encode_operand",
    "decode_operand",
    "MACRO_COSTS",
]

# intra-partition offsets are addressed as partition * _VIRT + offset while
# building; finish() compacts to the real partition width
_VIRT = 1 << 20


class MacroKind(Enum):
    AND2 = "AND2"
    ANDN2 = "ANDN2"  # a AND NOT b
    OR2 = "OR2"
    XOR2 = "XOR2"
    XNOR2 = "XNOR2"
    MUX = "MUX"  # (sel, a, b) -> sel ? a : b
    HA = "HA"  # (a, b) -> (sum, carry)
    FA = "FA"  # (a, b, cin) -> (sum, carry)
    XOR3 = "XOR3"


# netlists: (n_in, n_out, n_tmp, gates); slots are ('in', i) / ('out', i) / ('tmp', i)
def _n(kind, ins, out):
    return (kind, tuple(ins), out)


def _IN(i):
    return ("in", i)


def _OUT(i):
    return ("out", i)


def _TMP(i):
    return ("tmp", i)


MACRO_NETLISTS = {
    MacroKind.OR2: (2, 1, 1, [
        _n(GateKind.NOR2, [_IN(0), _IN(1)], _TMP(0)),
        _n(GateKind.NOT, [_TMP(0)], _OUT(0)),
    ]),
    MacroKind.AND2: (2, 1, 2, [
        _n(GateKind.NOT, [_IN(0)], _TMP(0)),
        _n(GateKind.NOT, [_IN(1)], _TMP(1)),
        _n(GateKind.NOR2, [_TMP(0), _TMP(1)], _OUT(0)),
    ]),
    MacroKind.ANDN2: (2, 1, 1, [
        _n(GateKind.NOT, [_IN(0)], _TMP(0)),
        _n(GateKind.NOR2, [_TMP(0), _IN(1)], _OUT(0)),
    ]),
    MacroKind.XOR2: (2, 1, 3, [
        _n(GateKind.NOT, [_IN(0)], _TMP(0)),
        _n(GateKind.NOT, [_IN(1)], _TMP(1)),
        _n(GateKind.NOR2, [_TMP(0), _IN(1)], _TMP(2)),   # ~a & b
        _n(GateKind.NOR2, [_IN(0), _TMP(1)], _TMP(0)),   # a & ~b
        _n(GateKind.NOR2, [_TMP(2), _TMP(0)], _TMP(1)),
        _n(GateKind.NOT, [_TMP(1)], _OUT(0)),
    ]),
    MacroKind.XNOR2: (2, 1, 3, [
        _n(GateKind.NOT, [_IN(0)], _TMP(0)),
        _n(GateKind.NOT, [_IN(1)], _TMP(1)),
        _n(GateKind.NOR2, [_TMP(0), _IN(1)], _TMP(2)),
        _n(GateKind.NOR2, [_IN(0), _TMP(1)], _TMP(0)),
        _n(GateKind.NOR2, [_TMP(2), _TMP(0)], _OUT(0)),
    ]),
    MacroKind.MUX: (3, 1, 3, [
        _n(GateKind.NOT, [_IN(0)], _TMP(0)),             # ~sel
        _n(GateKind.NOT, [_IN(1)], _TMP(1)),             # ~a
        _n(GateKind.NOR2, [_TMP(1), _TMP(0)], _TMP(2)),  # a & sel
        _n(GateKind.NOT, [_IN(2)], _TMP(1)),             # ~b
        _n(GateKind.NOR2, [_TMP(1), _IN(0)], _TMP(0)),   # b & ~sel
        _n(GateKind.NOR2, [_TMP(2), _TMP(0)], _TMP(1)),
        _n(GateKind.NOT, [_TMP(1)], _OUT(0)),
    ]),
    MacroKind.HA: (2, 2, 3, [
        _n(GateKind.NOT, [_IN(0)], _TMP(0)),             # ~a
        _n(GateKind.NOT, [_IN(1)], _TMP(1)),             # ~b
        _n(GateKind.NOR2, [_TMP(0), _IN(1)], _TMP(2)),   # a & ~b
        _n(GateKind.NOR2, [_TMP(0), _TMP(1)], _OUT(1)),  # carry = a & b
        _n(GateKind.NOR2, [_IN(0), _TMP(1)], _TMP(0)),   # ~a & b
        _n(GateKind.NOR2, [_TMP(2), _TMP(0)], _TMP(1)),  # ~(a ^ b)
        _n(GateKind.NOT, [_TMP(1)], _OUT(0)),            # sum
    ]),
    MacroKind.FA: (3, 2, 5, [
        _n(GateKind.NOR2, [_IN(0), _IN(1)], _TMP(0)),
        _n(GateKind.NOR2, [_IN(0), _TMP(0)], _TMP(1)),
        _n(GateKind.NOR2, [_IN(1), _TMP(0)], _TMP(2)),
        _n(GateKind.NOR2, [_TMP(1), _TMP(2)], _TMP(3)),  # xnor(a, b)
        _n(GateKind.NOR2, [_TMP(3), _IN(2)], _TMP(4)),   # xor(a,b) & ~cin
        _n(GateKind.NOR2, [_TMP(3), _TMP(4)], _TMP(1)),
        _n(GateKind.NOR2, [_IN(2), _TMP(4)], _TMP(2)),
        _n(GateKind.NOR2, [_TMP(1), _TMP(2)], _OUT(0)),  # sum
        _n(GateKind.NOR2, [_TMP(0), _TMP(4)], _OUT(1)),  # carry
    ]),
}


def _shift_slots(gates, tmp_shift, in_map, out_map):
    def remap(slot):
        tag, i = slot
        if tag == "tmp":
            return ("tmp", i + tmp_shift)
        if tag == "in":
            return in_map[i]
        return out_map[i]

    return [(kind, tuple(remap(s) for s in ins), remap(o)) for kind, ins, o in gates]


_XN = MACRO_NETLISTS[MacroKind.XNOR2][3]
MACRO_NETLISTS[MacroKind.XOR3] = (3, 1, 7, (
    _shift_slots(_XN, 0, {0: _IN(0), 1: _IN(1)}, {0: _TMP(6)})
    + _shift_slots(_XN, 3, {0: _TMP(6), 1: _IN(2)}, {0: _OUT(0)})
))

MACRO_COSTS = {kind: len(net[3]) for kind, net in MACRO_NETLISTS.items()}


class CapacityError(RuntimeError):
    """Raised when a partition runs out of free intermediate cells."""


class Allocator:
    """Free-list of intra-partition cell offsets, one list per partition.

    A cell is never live in two owners at once; freed cells are reused.
    With ``auto_grow`` the partition width extends on demand, otherwise
    exhaustion raises :class:`CapacityError` naming the partition.
    """

    def __init__(self, k: int, partition_width: Optional[int] = None):
        self.k = k
        self.auto_grow = partition_width is None
        self.partition_width = partition_width or 0
        self._live: list[set[int]] = [set() for _ in range(k)]
        self._peak = 0

    def reserve(self, partition: int, offset: int):
        """Claim a specific offset (used for operand placement)."""
        if offset in self._live[partition]:
            raise CapacityError(f"offset {offset} already live in partition {partition}")
        if offset >= self.partition_width:
            if not self.auto_grow:
                raise CapacityError(f"offset {offset} beyond partition width {self.partition_width}")
            self.partition_width = offset + 1
        self._live[partition].add(offset)
        self._note_peak()

    def _grow(self) -> int:
        off = self.partition_width
        self.partition_width += 1
        return off

    def alloc(self, n: int = 1, partition: int = 0) -> list[int]:
        """Allocate n distinct offsets in one partition."""
        live = self._live[partition]
        got: list[int] = []
        for off in range(self.partition_width):
            if off not in live:
                got.append(off)
                if len(got) == n:
                    break
        while len(got) < n:
            if not self.auto_grow:
                raise CapacityError(f"partition {partition} exhausted ({self.partition_width} cells)")
            got.append(self._grow())
        live.update(got)
        self._note_peak()
        return got

    def alloc_shared(self, partitions: Sequence[int]) -> int:
        """Allocate one offset that is free in every listed partition."""
        for off in range(self.partition_width):
            if all(off not in self._live[p] for p in partitions):
                break
        else:
            if not self.auto_grow:
                worst = max(partitions, key=lambda p: len(self._live[p]))
                raise CapacityError(f"partition {worst} exhausted ({self.partition_width} cells)")
            off = self._grow()
        for p in partitions:
            self._live[p].add(off)
        self._note_peak()
        return off

    def free(self, offsets: Union[int, Iterable[int]], partition: int = 0):
        if isinstance(offsets, int):
            offsets = [offsets]
        for off in offsets:
            self._live[partition].discard(off)

    def free_shared(self, offset: int, partitions: Sequence[int]):
        for p in partitions:
            self._live[p].discard(offset)

    def _note_peak(self):
        self._peak = max(self._peak, sum(len(s) for s in self._live))

    @property
    def peak(self) -> int:
        return self._peak


class ProgramBuilder:
    """Accumulates cycle steps and operand layouts into a MicroProgram.

    Serial use (k = 1) appends one gate per step; parallel use batches
    uniform gates across disconnected partition groups via :meth:`par_gates`.
    Columns are addressed as ``col(partition, offset)`` handles; the real
    partition width (and so the final column index) is fixed when
    :meth:`finish` compacts the layout.  Builders are single-owner; finished
    programs are immutable.
    """

    def __init__(self, k: int = 1, partition_width: Optional[int] = None):
        if k < 1 or (k & (k - 1)) != 0:
            raise ValueError(f"partition count must be a power of two, got {k}")
        self.k = k
        self._fixed_pw = partition_width
        self.allocator = Allocator(k, partition_width)
        self.steps: list[CycleStep] = []
        self.operands: dict[str, OperandLayout] = {}
        self._const_cols: dict[tuple[int, int], int] = {}
        self.meta: dict = {}

    # --- geometry -------------------------------------------------------
    def col(self, partition: int, offset: int) -> int:
        """Build-time column handle for (partition, intra-partition offset)."""
        return partition * _VIRT + offset

    @staticmethod
    def _split(col: int) -> tuple[int, int]:
        return divmod(col, _VIRT)

    # --- operands ---------------------------------------------------------
    def _place(self, name, fmt, width, role, base=None, **kw) -> OperandLayout:
        if name in self.operands:
            raise ValueError(f"operand {name!r} already declared")
        if fmt is LayoutFormat.CONTIGUOUS:
            if self.k != 1:
                raise ValueError("contiguous operands require an unpartitioned row")
            if base is None:
                if self.allocator.auto_grow:
                    base = self.allocator.partition_width
                else:
                    base = self._find_contiguous(width)
            for off in range(base, base + width):
                self.allocator.reserve(0, off)
        else:
            if width > self.k:
                raise ValueError(f"strided operand {name!r} wider than k={self.k}")
            if base is None:
                base = self.allocator.alloc_shared(range(width))
            else:
                for p in range(width):
                    self.allocator.reserve(p, base)
        lay = OperandLayout(name, fmt, base, width, role, **kw)
        self.operands[name] = lay
        return lay

    def _find_contiguous(self, width: int) -> int:
        live = self.allocator._live[0]
        run = 0
        for off in range(self.allocator.partition_width):
            run = 0 if off in live else run + 1
            if run == width:
                return off - width + 1
        raise CapacityError(f"no contiguous run of {width} free cells")

    def input(self, name, width, fmt=LayoutFormat.CONTIGUOUS, base=None, **kw) -> OperandLayout:
        return self._place(name, fmt, width, Role.INPUT, base, **kw)

    def output(self, name, width, fmt=LayoutFormat.CONTIGUOUS, base=None, **kw) -> OperandLayout:
        return self._place(name, fmt, width, Role.OUTPUT, base, **kw)

    def operand_cols(self, name: str) -> list[int]:
        """Column handles of a declared operand, LSB first."""
        lay = self.operands[name]
        if lay.fmt is LayoutFormat.CONTIGUOUS:
            return [self.col(0, lay.base + i) for i in range(lay.width)]
        return [self.col(i, lay.base) for i in range(lay.width)]

    # --- scratch ----------------------------------------------------------
    def alloc(self, n: int = 1, partition: int = 0) -> list[int]:
        """n scratch column handles in one partition."""
        return [self.col(partition, o) for o in self.allocator.alloc(n, partition)]

    def alloc1(self, partition: int = 0) -> int:
        return self.alloc(1, partition)[0]

    def alloc_shared(self, partitions: Sequence[int]) -> int:
        """One intra-partition offset live across all of `partitions`."""
        return self.allocator.alloc_shared(partitions)

    def free(self, cols: Union[int, Iterable[int]]):
        if isinstance(cols, int):
            cols = [cols]
        for c in cols:
            p, off = self._split(c)
            self.allocator.free(off, p)

    def free_shared(self, offset: int, partitions: Sequence[int]):
        self.allocator.free_shared(offset, partitions)

    def const(self, bit: int, partition: int = 0) -> int:
        """Column holding constant `bit` in `partition` (INIT once, cached)."""
        key = (partition, bit)
        if key not in self._const_cols:
            c = self.alloc1(partition)
            self.gate(GateKind.INIT1 if bit else GateKind.INIT0, [], c)
            self._const_cols[key] = c
        return self._const_cols[key]

    # --- steps --------------------------------------------------------------
    def _switches_for_spans(self, spans: Iterable[tuple[int, int]]) -> SwitchConfig:
        states = [False] * (self.k - 1)
        for lo, hi in spans:
            for s in range(lo, hi):
                states[s] = True
        return SwitchConfig(tuple(states))

    def _span(self, cols: Sequence[int]) -> tuple[int, int]:
        ps = [self._split(c)[0] for c in cols]
        return min(ps), max(ps)

    def step(self, gates: Sequence[GateInstance], switches: Optional[SwitchConfig] = None):
        if switches is None:
            switches = self._switches_for_spans(self._span(g.columns()) for g in gates)
        self.steps.append(CycleStep(switches, tuple(gates)))

    def gate(self, kind: GateKind, inputs: Sequence[int], output: int):
        """Append one gate as its own step (bit-serial emission)."""
        self.step([GateInstance(kind, tuple(inputs), output)])

    def par_gates(self, kind: GateKind, io: Sequence[tuple[Sequence[int], int]]):
        """One step firing the same gate shape in several disconnected groups."""
        gates = [GateInstance(kind, tuple(ins), out) for ins, out in io]
        self.step(gates)

    # --- macros --------------------------------------------------------------
    def macro(self, kind: MacroKind, inputs: Sequence[int], outputs: Sequence[int],
              partition: int = 0):
        """Serially lower one macro; temps allocated and freed here."""
        n_in, n_out, n_tmp, gates = MACRO_NETLISTS[kind]
        assert len(inputs) == n_in and len(outputs) == n_out
        tmps = self.alloc(n_tmp, partition)
        bind = {("in", i): c for i, c in enumerate(inputs)}
        bind.update({("out", i): c for i, c in enumerate(outputs)})
        bind.update({("tmp", i): c for i, c in enumerate(tmps)})
        for gk, ins, out in gates:
            self.gate(gk, [bind[s] for s in ins], bind[out])
        self.free(tmps)

    def par_macro(self, kind: MacroKind, io: Sequence[tuple[Sequence[int], Sequence[int]]],
                  tmp_partitions: Sequence[int]):
        """Lower one macro lockstep across groups (one step per netlist gate).

        `io[i]` is (inputs, outputs) of group i, `tmp_partitions[i]` the
        partition hosting its temps.  Groups share temp offsets so every
        step keeps a uniform pattern.
        """
        n_in, n_out, n_tmp, gates = MACRO_NETLISTS[kind]
        offs = [self.alloc_shared(tmp_partitions) for _ in range(n_tmp)]
        binds = []
        for (ins, outs), p in zip(io, tmp_partitions):
            b = {("in", i): c for i, c in enumerate(ins)}
            b.update({("out", i): c for i, c in enumerate(outs)})
            b.update({("tmp", i): self.col(p, offs[i]) for i in range(n_tmp)})
            binds.append(b)
        for gk, ins, out in gates:
            self.par_gates(gk, [([b[s] for s in ins], b[out]) for b in binds])
        for off in offs:
            self.free_shared(off, tmp_partitions)

    def copy(self, src: int, dst: int):
        """dst <- src through double inversion (2 gates, staged at dst)."""
        t = self.alloc1(self._split(dst)[0])
        self.gate(GateKind.NOT, [src], t)
        self.gate(GateKind.NOT, [t], dst)
        self.free(t)

    # --- finish ----------------------------------------------------------------
    def finish(self, meta: Optional[dict] = None) -> MicroProgram:
        pw = self._fixed_pw if self._fixed_pw is not None else self.allocator.partition_width
        pw = max(pw, 1)

        def remap(col: int) -> int:
            p, off = self._split(col)
            assert off < pw, "column offset beyond final partition width"
            return p * pw + off

        steps = tuple(
            CycleStep(s.switches, tuple(
                GateInstance(g.kind, tuple(remap(c) for c in g.inputs), remap(g.output))
                for g in s.gates))
            for s in self.steps
        )
        cfg = PartitionConfig(self.k, pw)
        operand_cols = set()
        for lay in self.operands.values():
            operand_cols.update(lay.columns(cfg))
        scratch = {g.output for st in steps for g in st.gates} - operand_cols
        prog = MicroProgram(
            row_width=cfg.row_width,
            partitions=cfg,
            steps=steps,
            operands=dict(self.operands),
            scratch=frozenset(scratch),
            meta={**self.meta, **(meta or {}), "alloc_peak": self.allocator.peak},
        )
        report = validate_program(prog)
        if not report.ok:
            raise AssertionError(f"emitted program fails validation:\n{report}")
        return prog


# ---------------------------------------------------------------------------
# operand encode / decode


def encode_operand(layout: OperandLayout, partitions: PartitionConfig, value: int,
                   cells: np.ndarray):
    """Write an unsigned bit pattern into row cells (single row or batch)."""
    if value < 0 or value >= (1 << layout.width):
        raise ValueError(f"value {value} does not fit {layout.width} bits of {layout.name!r}")
    for i, c in enumerate(layout.columns(partitions)):
        cells[..., c] = bool((value >> i) & 1)


def decode_operand(layout: OperandLayout, partitions: PartitionConfig, cells: np.ndarray):
    """Read the unsigned bit pattern back (int, or int array for a batch)."""
    cols = list(layout.columns(partitions))
    bits = cells[..., cols]
    if bits.ndim == 1:
        return sum((1 << i) for i, b in enumerate(bits) if b)
    if len(cols) <= 64:
        out = np.zeros(bits.shape[0], dtype=np.uint64)
        for i in range(len(cols)):
            out |= bits[:, i].astype(np.uint64) << np.uint64(i)
        return out
    out = np.zeros(bits.shape[0], dtype=object)
    for i in range(len(cols)):
        out += bits[:, i].astype(object) * (1 << i)
    return out


def write_operand(state: RowState, layout: OperandLayout, partitions: PartitionConfig,
                  value: int) -> RowState:
    out = state.copy()
    encode_operand(layout, partitions, value, out.cells)
    return out


def read_operand(state: RowState, layout: OperandLayout, partitions: PartitionConfig) -> int:
    return decode_operand(layout, partitions, state.cells)
