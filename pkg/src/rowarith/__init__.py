"""Gate-level microcode library and cycle-accurate simulator for
partitioned-memory-row arithmetic over a NOT/NOR gate set."""

from .core import (
    Accounting,
    CostReport,
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
    ValidationError,
    ValidationReport,
    apply_step,
    cost,
    init_row,
    run_batch,
    run_program,
    validate_program,
)
from .dumpfmt import dump_program, dumps_program, loads_program, parse_program
from .float_core import FloatFormat
from .microcode import (
    Allocator,
    CapacityError,
    MACRO_COSTS,
    MacroKind,
    ProgramBuilder,
    read_operand,
    write_operand,
)
from .parallel_fixed import MultTail
from .toolbox import AssocOp

__version__ = "0.1.0"
