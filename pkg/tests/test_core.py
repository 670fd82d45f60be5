import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rowarith import (
    Accounting,
    CycleStep,
    GateInstance,
    GateKind,
    MicroProgram,
    PartitionConfig,
    RowState,
    SwitchConfig,
    ValidationError,
    apply_step,
    cost,
    init_row,
    run_program,
    validate_program,
)
from rowarith.serial_fixed import emit_add_serial


def _step(gates, k=1):
    return CycleStep(SwitchConfig((True,) * (k - 1)), tuple(gates))


def nor(a, b, out):
    return GateInstance(GateKind.NOR2, (a, b), out)


class TestInitRow:
    def test_zero_fill(self):
        assert list(init_row(8, 0).cells) == [0] * 8

    def test_one_fill(self):
        assert list(init_row(3, 1).cells) == [1, 1, 1]

    def test_large(self):
        assert init_row(1024, 0).cells.sum() == 0

    def test_zero_width_rejected(self):
        with pytest.raises(ValueError):
            init_row(0)


class TestApplyStep:
    cfg = PartitionConfig(1, 3)

    def test_nor_10(self):
        s = RowState([1, 0, 0])
        out = apply_step(s, _step([nor(0, 1, 2)]), self.cfg)
        assert list(out.cells) == [1, 0, 0]

    def test_nor_00(self):
        s = RowState([0, 0, 0])
        out = apply_step(s, _step([nor(0, 1, 2)]), self.cfg)
        assert list(out.cells) == [0, 0, 1]

    def test_disjoint_partitions_one_cycle(self):
        cfg = PartitionConfig(2, 3)
        step = CycleStep(SwitchConfig((False,)),
                         (nor(0, 1, 2), nor(3, 4, 5)))
        s = RowState([0, 0, 1, 1, 0, 1])
        out = apply_step(s, step, cfg)
        assert list(out.cells) == [0, 0, 1, 1, 0, 0]

    def test_write_conflict_rejected(self):
        with pytest.raises(ValidationError):
            apply_step(RowState([0, 0, 0]),
                       _step([nor(0, 1, 2), nor(1, 0, 2)]), self.cfg)

    def test_same_group_two_gates_rejected(self):
        cfg = PartitionConfig(2, 3)
        step = CycleStep(SwitchConfig((True,)), (nor(0, 1, 2), nor(3, 4, 5)))
        with pytest.raises(ValidationError):
            apply_step(RowState([0] * 6), step, cfg)

    def test_cross_group_gate_rejected(self):
        cfg = PartitionConfig(2, 2)
        step = CycleStep(SwitchConfig((False,)), (nor(0, 2, 3),))
        with pytest.raises(ValidationError):
            apply_step(RowState([0] * 4), step, cfg)

    def test_nonuniform_pattern_rejected(self):
        cfg = PartitionConfig(2, 3)
        step = CycleStep(SwitchConfig((False,)), (nor(0, 1, 2), nor(4, 3, 5)))
        with pytest.raises(ValidationError):
            apply_step(RowState([0] * 6), step, cfg)

    def test_locality(self):
        rng = np.random.default_rng(0)
        cfg = PartitionConfig(1, 16)
        for _ in range(50):
            cells = rng.integers(0, 2, 16).astype(bool)
            s = RowState(cells)
            out = apply_step(s, _step([nor(1, 2, 7)]), cfg)
            untouched = [i for i in range(16) if i != 7]
            assert np.array_equal(out.cells[untouched], cells[untouched])


class TestRunProgram:
    def test_empty_program_identity(self):
        prog = MicroProgram(4, PartitionConfig(1, 4), (), {})
        s = init_row(4, 1)
        out, _ = run_program(s, prog)
        assert out == s

    def test_single_init(self):
        step = _step([GateInstance(GateKind.INIT1, (), 5)])
        prog = MicroProgram(8, PartitionConfig(1, 8), (step,), {})
        out, _ = run_program(init_row(8, 0), prog)
        assert list(out.cells) == [0, 0, 0, 0, 0, 1, 0, 0]

    def test_add_program_end_to_end(self):
        prog = emit_add_serial(4)
        s = init_row(prog.row_width, 0)
        from rowarith import write_operand, read_operand
        s = write_operand(s, prog.operands["x"], prog.partitions, 5)
        s = write_operand(s, prog.operands["y"], prog.partitions, 7)
        out, trace = run_program(s, prog, trace=True)
        assert read_operand(out, prog.operands["z"], prog.partitions) == 12
        assert len(trace) == prog.cycles

    def test_determinism(self):
        prog = emit_add_serial(3)
        s = init_row(prog.row_width, 0)
        a, _ = run_program(s, prog)
        b, _ = run_program(s, prog)
        assert a == b

    def test_width_mismatch(self):
        prog = emit_add_serial(3)
        with pytest.raises(ValueError):
            run_program(init_row(prog.row_width + 1, 0), prog)


class TestSingletonSplit:
    """Gates of one step run one at a time give the same final row."""

    def test_split_equivalence(self):
        from rowarith.parallel_fixed import emit_add_parallel
        prog = emit_add_parallel(8)
        split_steps = []
        for step in prog.steps:
            for g in step.gates:
                split_steps.append(CycleStep(step.switches, (g,)))
        split = MicroProgram(prog.row_width, prog.partitions, tuple(split_steps),
                             prog.operands, prog.scratch)
        rng = np.random.default_rng(3)
        for _ in range(10):
            cells = rng.integers(0, 2, prog.row_width).astype(bool)
            a, _ = run_program(RowState(cells.copy()), prog)
            b, _ = run_program(RowState(cells.copy()), split)
            assert a == b


class TestValidate:
    def test_column_bound(self):
        step = _step([nor(0, 1, 9)])
        prog = MicroProgram(4, PartitionConfig(1, 4), (step,), {})
        rep = validate_program(prog)
        assert not rep.ok and any(v.rule == "column-bound" for v in rep.violations)

    def test_write_conflict(self):
        step = _step([GateInstance(GateKind.NOT, (0,), 2),
                      GateInstance(GateKind.NOT, (1,), 2)])
        prog = MicroProgram(4, PartitionConfig(1, 4), (step,), {})
        rep = validate_program(prog)
        assert any(v.rule in ("write-conflict", "group-conflict") for v in rep.violations)

    def test_emitted_program_validates(self):
        from rowarith.parallel_fixed import emit_add_parallel
        assert validate_program(emit_add_parallel(8)).ok

    def test_input_clobber_detected(self):
        from rowarith.core import LayoutFormat, OperandLayout, Role
        lay = {"x": OperandLayout("x", LayoutFormat.CONTIGUOUS, 0, 2, Role.INPUT)}
        step = _step([GateInstance(GateKind.INIT1, (), 0)])
        prog = MicroProgram(4, PartitionConfig(1, 4), (step,), lay)
        rep = validate_program(prog)
        assert any(v.rule == "input-clobber" for v in rep.violations)

    def test_output_unwritten(self):
        from rowarith.core import LayoutFormat, OperandLayout, Role
        lay = {"z": OperandLayout("z", LayoutFormat.CONTIGUOUS, 0, 2, Role.OUTPUT)}
        step = _step([GateInstance(GateKind.INIT1, (), 3)])
        prog = MicroProgram(4, PartitionConfig(1, 4), (step,), lay)
        rep = validate_program(prog)
        assert any(v.rule == "output-unwritten" for v in rep.violations)


@st.composite
def random_valid_program(draw):
    width = draw(st.integers(4, 10))
    n_steps = draw(st.integers(1, 8))
    steps = []
    for _ in range(n_steps):
        kind = draw(st.sampled_from(list(GateKind)))
        cols = st.integers(0, width - 1)
        out = draw(cols)
        if kind is GateKind.NOR2:
            a = draw(cols.filter(lambda c: c != out))
            b = draw(cols.filter(lambda c: c != out))
            gate = GateInstance(kind, (a, b), out)
        elif kind is GateKind.NOT:
            a = draw(cols.filter(lambda c: c != out))
            gate = GateInstance(kind, (a,), out)
        else:
            gate = GateInstance(kind, (), out)
        steps.append(CycleStep(SwitchConfig(()), (gate,)))
    return MicroProgram(width, PartitionConfig(1, width), tuple(steps), {})


class TestValidationSoundness:
    @given(random_valid_program(), st.integers(0, 2**16))
    @settings(max_examples=60, deadline=None)
    def test_accepted_programs_run(self, prog, seed):
        assert validate_program(prog).ok
        rng = np.random.default_rng(seed)
        cells = rng.integers(0, 2, prog.row_width).astype(bool)
        run_program(RowState(cells), prog)  # must not raise


class TestCost:
    def test_empty(self):
        prog = MicroProgram(4, PartitionConfig(1, 4), (), {})
        rep = cost(prog)
        assert rep.cycles == 0 and rep.gate_count == 0

    def test_single_nor_logical(self):
        prog = MicroProgram(4, PartitionConfig(1, 4), (_step([nor(0, 1, 2)]),), {})
        rep = cost(prog)
        assert rep.cycles == 1 and rep.gate_count == 1

    def test_single_nor_memristive(self):
        prog = MicroProgram(4, PartitionConfig(1, 4), (_step([nor(0, 1, 2)]),), {})
        assert cost(prog, Accounting.MEMRISTIVE).cycles == 2

    def test_covered_by_init(self):
        steps = (_step([GateInstance(GateKind.INIT1, (), 2)]),
                 _step([nor(0, 1, 2)]))
        prog = MicroProgram(4, PartitionConfig(1, 4), steps, {})
        assert cost(prog, Accounting.MEMRISTIVE).cycles == 2

    def test_init_consumed_once(self):
        steps = (_step([GateInstance(GateKind.INIT1, (), 2)]),
                 _step([nor(0, 1, 2)]),
                 _step([nor(0, 1, 2)]))
        prog = MicroProgram(4, PartitionConfig(1, 4), steps, {})
        assert cost(prog, Accounting.MEMRISTIVE).cycles == 4

    def test_scratch_peak(self):
        prog = emit_add_serial(4)
        rep = cost(prog)
        assert rep.scratch_peak >= 1
        assert rep.init_count >= 1
