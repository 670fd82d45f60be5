"""Abstract partitioned-row model and cycle-accurate execution.

The machine is a single memory-array row of ``c`` binary cells, split into
``k`` equal partitions joined by ``k - 1`` switches.  Each cycle applies a set
of column gates (NOT / NOR2 / INIT0 / INIT1) under one switch configuration;
gates in disconnected partition groups run concurrently.  Programs are plain
data (:class:`MicroProgram`) produced by the emitter modules and consumed by
:func:`run_program`, :func:`validate_program` and :func:`cost`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

__all__ = [
    "GateKind",
    "GateInstance",
    "SwitchConfig",
    "CycleStep",
    "PartitionConfig",
    "RowState",
    "OperandLayout",
    "LayoutFormat",
    "Role",
    "MicroProgram",
    "Accounting",
    "CostReport",
    "ValidationError",
    "Violation",
    "ValidationReport",
    "init_row",
    "apply_step",
    "run_program",
    "run_batch",
    "validate_program",
    "cost",
]


class GateKind(Enum):
    """Device-level column gates.  Richer gates exist only pre-lowering."""

    INIT0 = "INIT0"
    INIT1 = "INIT1"
    NOT = "NOT"
    NOR2 = "NOR2"


GATE_ARITY = {GateKind.INIT0: 0, GateKind.INIT1: 0, GateKind.NOT: 1, GateKind.NOR2: 2}


@dataclass(frozen=True)
class GateInstance:
    """One column gate: ``output <- kind(inputs)``."""

    kind: GateKind
    inputs: tuple[int, ...]
    output: int

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))

    def columns(self) -> tuple[int, ...]:
        return self.inputs + (self.output,)

    def __str__(self) -> str:
        return f"{self.kind.value}({','.join(str(i) for i in self.inputs)})->{self.output}"


@dataclass(frozen=True)
class SwitchConfig:
    """States of the k-1 inter-partition switches; True = connected."""

    states: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(bool(s) for s in self.states))

    def bitstring(self) -> str:
        return "".join("1" if s else "0" for s in self.states)


@dataclass(frozen=True)
class CycleStep:
    """One cycle: a switch configuration plus the gates fired under it."""

    switches: SwitchConfig
    gates: tuple[GateInstance, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))


@dataclass(frozen=True)
class PartitionConfig:
    """k partitions of partition_width columns each; k a power of two."""

    k: int = 1
    partition_width: int = 0

    @property
    def row_width(self) -> int:
        return self.k * self.partition_width

    def column_partition(self, col: int) -> int:
        return col // self.partition_width

    def groups(self, switches: SwitchConfig) -> list[tuple[int, int]]:
        """Maximal runs of connected partitions as (first, last) pairs."""
        groups = []
        start = 0
        for i, connected in enumerate(switches.states):
            if not connected:
                groups.append((start, i))
                start = i + 1
        groups.append((start, self.k - 1))
        return groups


class RowState:
    """One row of binary cells; the simulator's entire mutable state."""

    __slots__ = ("cells",)

    def __init__(self, cells):
        arr = np.asarray(cells, dtype=bool)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("RowState requires a non-empty 1-D cell vector")
        self.cells = arr

    @property
    def width(self) -> int:
        return int(self.cells.size)

    def copy(self) -> "RowState":
        return RowState(self.cells.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, RowState) and bool(np.array_equal(self.cells, other.cells))

    def __repr__(self) -> str:
        return f"RowState({''.join('1' if b else '0' for b in self.cells)})"


def init_row(width: int, fill: int = 0) -> RowState:
    """Fresh row of `width` cells, all set to `fill`."""
    if width < 1:
        raise ValueError(f"row width must be >= 1, got {width}")
    if fill not in (0, 1):
        raise ValueError(f"fill must be 0 or 1, got {fill}")
    return RowState(np.full(width, bool(fill), dtype=bool))


class LayoutFormat(Enum):
    CONTIGUOUS = "CONTIGUOUS"
    STRIDED = "STRIDED"


class Role(Enum):
    INPUT = "input"
    OUTPUT = "output"
    SCRATCH = "scratch"


@dataclass(frozen=True)
class OperandLayout:
    """Where a number lives in the row.

    CONTIGUOUS: bit i at column base + i (LSB first).
    STRIDED:    bit i at intra-partition offset `base` of partition i.
    """

    name: str
    fmt: LayoutFormat
    base: int
    width: int
    role: Role
    signed: bool = False
    float_fmt: Optional[tuple[int, int]] = None  # (exponent bits, mantissa bits)
    consumed: bool = False  # inputs declared consumed may be overwritten

    def columns(self, partitions: PartitionConfig) -> tuple[int, ...]:
        if self.fmt is LayoutFormat.CONTIGUOUS:
            return tuple(range(self.base, self.base + self.width))
        pw = partitions.partition_width
        return tuple(i * pw + self.base for i in range(self.width))


@dataclass(frozen=True)
class MicroProgram:
    """An ordered gate schedule plus layout metadata; immutable once built."""

    row_width: int
    partitions: PartitionConfig
    steps: tuple[CycleStep, ...]
    operands: dict[str, OperandLayout]
    scratch: frozenset[int] = frozenset()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "scratch", frozenset(self.scratch))

    @property
    def cycles(self) -> int:
        return len(self.steps)

    def gate_count(self) -> int:
        return sum(len(s.gates) for s in self.steps)

    def operand(self, name: str) -> OperandLayout:
        return self.operands[name]


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    step: Optional[int] = None
    gate: Optional[GateInstance] = None

    def __str__(self) -> str:
        where = f" (step {self.step}" + (f", {self.gate}" if self.gate else "") + ")" if self.step is not None else ""
        return f"[{self.rule}] {self.message}{where}"


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return "\n".join(str(v) for v in self.violations)


class ValidationError(ValueError):
    """Raised when executing a step that breaks a model constraint."""

    def __init__(self, violation: Violation):
        super().__init__(str(violation))
        self.violation = violation


def _step_violations(step: CycleStep, config: PartitionConfig, width: int, idx=None) -> list[Violation]:
    out: list[Violation] = []
    if len(step.switches.states) != config.k - 1:
        out.append(Violation("switch-arity", f"expected {config.k - 1} switch states, got {len(step.switches.states)}", idx))
        return out
    if not step.gates:
        out.append(Violation("empty-step", "step has no gates", idx))
        return out

    groups = config.groups(step.switches)
    group_of_partition = {}
    for g_idx, (lo, hi) in enumerate(groups):
        for p in range(lo, hi + 1):
            group_of_partition[p] = g_idx

    pw = config.partition_width
    seen_outputs: dict[int, GateInstance] = {}
    read_cols: dict[int, GateInstance] = {}
    gates_per_group: dict[int, GateInstance] = {}
    pattern = None

    for gate in step.gates:
        if len(gate.inputs) != GATE_ARITY[gate.kind]:
            out.append(Violation("gate-arity", f"{gate.kind.value} expects {GATE_ARITY[gate.kind]} inputs", idx, gate))
            continue
        cols = gate.columns()
        if any(c < 0 or c >= width for c in cols):
            out.append(Violation("column-bound", f"column out of range [0,{width})", idx, gate))
            continue
        if gate.output in gate.inputs:
            out.append(Violation("in-place", "gate output equals one of its inputs", idx, gate))
            continue

        gids = {group_of_partition[config.column_partition(c)] for c in cols}
        if len(gids) != 1:
            out.append(Violation("group-span", "gate columns cross disconnected partition groups", idx, gate))
            continue
        gid = gids.pop()
        if gid in gates_per_group:
            out.append(Violation("group-conflict", "two gates in one connected group", idx, gate))
            continue
        gates_per_group[gid] = gate

        if gate.output in seen_outputs:
            out.append(Violation("write-conflict", f"column {gate.output} written twice", idx, gate))
        if gate.output in read_cols:
            out.append(Violation("read-write-overlap", f"column {gate.output} read and written in one step", idx, gate))
        for c in gate.inputs:
            if c in seen_outputs:
                out.append(Violation("read-write-overlap", f"column {c} read and written in one step", idx, gate))
        seen_outputs[gate.output] = gate
        for c in gate.inputs:
            read_cols[c] = gate

        base = groups[gid][0] * pw
        rel = (gate.kind, tuple(c - base for c in gate.inputs), gate.output - base)
        if pattern is None:
            pattern = rel
        elif rel != pattern:
            out.append(Violation("uniform-pattern", "gate pattern differs across groups in one step", idx, gate))
    return out


def validate_program(prog: MicroProgram) -> ValidationReport:
    """Check every model constraint; returns all violations, raises nothing."""
    out: list[Violation] = []
    cfg = prog.partitions

    if cfg.row_width != prog.row_width:
        out.append(Violation("partition-geometry", f"k*partition_width = {cfg.row_width} != row width {prog.row_width}"))
    if cfg.k > 1 and (cfg.k & (cfg.k - 1)) != 0:
        out.append(Violation("partition-count", f"k = {cfg.k} is not a power of two"))

    # operand placement
    col_owner: dict[int, str] = {}
    for name, lay in prog.operands.items():
        if lay.name != name:
            out.append(Violation("operand-name", f"layout name {lay.name!r} registered as {name!r}"))
        cols = lay.columns(cfg)
        if lay.fmt is LayoutFormat.STRIDED and lay.width > cfg.k:
            out.append(Violation("operand-strided", f"operand {name}: strided width {lay.width} exceeds k={cfg.k}"))
        for c in cols:
            if c < 0 or c >= prog.row_width:
                out.append(Violation("operand-bound", f"operand {name}: column {c} out of range"))
            elif c in col_owner:
                out.append(Violation("operand-overlap", f"operands {col_owner[c]} and {name} share column {c}"))
            col_owner[c] = name

    for i, step in enumerate(prog.steps):
        out.extend(_step_violations(step, cfg, prog.row_width, i))

    # operand preservation: inputs never written before their first read
    input_cols = {}
    output_cols = {}
    for name, lay in prog.operands.items():
        cols = lay.columns(cfg)
        if lay.role is Role.INPUT and not lay.consumed:
            for c in cols:
                input_cols[c] = name
        if lay.role is Role.OUTPUT:
            for c in cols:
                output_cols[c] = name
    read_yet: set[int] = set()
    written: set[int] = set()
    for i, step in enumerate(prog.steps):
        for gate in step.gates:
            for c in gate.inputs:
                read_yet.add(c)
            c = gate.output
            if c in input_cols and c not in read_yet:
                out.append(Violation("input-clobber", f"input operand {input_cols[c]} column {c} written before first read", i, gate))
            written.add(c)
    for c, name in output_cols.items():
        if c not in written:
            out.append(Violation("output-unwritten", f"output operand {name} column {c} never written"))

    return ValidationReport(out)


# ---------------------------------------------------------------------------
# execution


def _eval_gate(gate: GateInstance, cells: np.ndarray):
    if gate.kind is GateKind.NOR2:
        a, b = gate.inputs
        return ~(cells[..., a] | cells[..., b])
    if gate.kind is GateKind.NOT:
        return ~cells[..., gate.inputs[0]]
    return gate.kind is GateKind.INIT1


def apply_step(state: RowState, step: CycleStep, config: PartitionConfig) -> RowState:
    """Apply one validated cycle; untouched cells are bitwise unchanged."""
    bad = _step_violations(step, config, state.width)
    if bad:
        raise ValidationError(bad[0])
    nxt = state.copy()
    results = [(g.output, _eval_gate(g, state.cells)) for g in step.gates]
    for col, val in results:
        nxt.cells[col] = val
    return nxt


def run_program(state: RowState, prog: MicroProgram, trace: bool = False, validate: bool = True):
    """Fold the program over the row.  Returns (final state, trace or None)."""
    if state.width != prog.row_width:
        raise ValueError(f"row width {state.width} != program width {prog.row_width}")
    if validate:
        report = validate_program(prog)
        if not report.ok:
            raise ValidationError(report.violations[0])
    cells = state.cells.copy()
    snapshots = [] if trace else None
    for step in prog.steps:
        results = [(g.output, _eval_gate(g, cells)) for g in step.gates]
        for col, val in results:
            cells[col] = val
        if trace:
            snapshots.append(RowState(cells.copy()))
    return RowState(cells), snapshots


def run_batch(cells: np.ndarray, prog: MicroProgram) -> np.ndarray:
    """Run one program over many independent rows at once.

    `cells` is a (rows, width) bool matrix; rows evolve in lockstep, which is
    exactly the element-parallel execution model.  The program must already
    be validated.  Returns the final matrix (the input is not modified).
    """
    if cells.ndim != 2 or cells.shape[1] != prog.row_width:
        raise ValueError("batch shape must be (rows, program row width)")
    out = cells.astype(bool).copy()
    for step in prog.steps:
        if len(step.gates) == 1:
            g = step.gates[0]
            out[:, g.output] = _eval_gate(g, out)
        else:
            results = [(g.output, _eval_gate(g, out)) for g in step.gates]
            for col, val in results:
                out[:, col] = val
    return out


# ---------------------------------------------------------------------------
# cost model


class Accounting(Enum):
    LOGICAL = "logical"
    MEMRISTIVE = "memristive"


@dataclass(frozen=True)
class CostReport:
    cycles: int
    gate_count: int
    init_count: int
    scratch_peak: int
    accounting: Accounting

    def as_row(self) -> dict:
        return {
            "cycles": self.cycles,
            "gates": self.gate_count,
            "inits": self.init_count,
            "scratch_peak": self.scratch_peak,
        }


_INITS = (GateKind.INIT0, GateKind.INIT1)


def cost(prog: MicroProgram, accounting: Accounting = Accounting.LOGICAL) -> CostReport:
    """Cycle / gate / intermediate-cell accounting for a program.

    LOGICAL counts one cycle per step.  MEMRISTIVE adds one cycle per step
    containing a logic gate whose output cell was not freshly initialized by
    an earlier INIT (each gate consumes its output's initialization).
    Scratch peak is the maximum number of simultaneously live intermediate
    cells, where a cell is live from its first write to its last access.
    """
    gate_count = prog.gate_count()
    init_count = sum(1 for s in prog.steps for g in s.gates if g.kind in _INITS)

    cycles = len(prog.steps)
    if accounting is Accounting.MEMRISTIVE:
        initialized: set[int] = set()
        extra = 0
        for step in prog.steps:
            uncovered = False
            for g in step.gates:
                if g.kind in _INITS:
                    initialized.add(g.output)
                else:
                    if g.output not in initialized:
                        uncovered = True
                    initialized.discard(g.output)
            if uncovered:
                extra += 1
        cycles += extra

    operand_cols: set[int] = set()
    for lay in prog.operands.values():
        operand_cols.update(lay.columns(prog.partitions))
    first_write: dict[int, int] = {}
    last_access: dict[int, int] = {}
    for i, step in enumerate(prog.steps):
        for g in step.gates:
            for c in g.columns():
                if c not in operand_cols:
                    last_access[c] = i
            if g.output not in operand_cols and g.output not in first_write:
                first_write[g.output] = i
    peak = 0
    if first_write:
        events = np.zeros(len(prog.steps) + 1, dtype=int)
        for col, start in first_write.items():
            events[start] += 1
            events[last_access[col] + 1] -= 1
        peak = int(np.cumsum(events).max())
    return CostReport(cycles, gate_count, init_count, peak, accounting)
