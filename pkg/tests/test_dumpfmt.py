import numpy as np
import pytest

from rowarith import RowState, init_row, run_program, validate_program
from rowarith.dumpfmt import DumpError, dumps_program, loads_program
from rowarith.parallel_fixed import emit_add_parallel
from rowarith.serial_fixed import emit_add_serial, emit_div_serial
from rowarith.toolbox import AssocOp, emit_prefix


@pytest.mark.parametrize("prog", [
    emit_add_serial(2),
    emit_add_serial(8),
    emit_div_serial(3),
    emit_add_parallel(4),
    emit_prefix(8, AssocOp.OR),
], ids=["add2", "add8", "div3", "padd4", "prefix8"])
def test_round_trip_byte_identical(prog):
    text = dumps_program(prog)
    again = loads_program(text)
    assert dumps_program(again) == text
    assert validate_program(again).ok


def test_reparsed_program_simulates_identically():
    prog = emit_add_serial(2)
    again = loads_program(dumps_program(prog))
    rng = np.random.default_rng(0)
    for _ in range(20):
        cells = rng.integers(0, 2, prog.row_width).astype(bool)
        a, _ = run_program(RowState(cells.copy()), prog)
        b, _ = run_program(RowState(cells.copy()), again)
        assert a == b


def test_malformed_sw_rejected():
    text = "WIDTH 4\nPARTITIONS 2\nSTEP 0 SW=2 ; NOT(0)->1\n"
    with pytest.raises(DumpError, match="SW"):
        loads_program(text)


def test_sw_length_checked():
    text = "WIDTH 4\nPARTITIONS 2\nSTEP 0 SW=11 ; NOT(0)->1\n"
    with pytest.raises(DumpError):
        loads_program(text)


def test_missing_header_rejected():
    with pytest.raises(DumpError):
        loads_program("STEP 0 SW=- ; NOT(0)->1\n")


def test_bad_gate_rejected():
    text = "WIDTH 4\nPARTITIONS 1\nSTEP 0 SW=- ; FOO(0)->1\n"
    with pytest.raises(DumpError):
        loads_program(text)


def test_out_of_order_steps_rejected():
    text = "WIDTH 4\nPARTITIONS 1\nSTEP 1 SW=- ; NOT(0)->1\n"
    with pytest.raises(DumpError):
        loads_program(text)


def test_empty_row_header_only():
    prog = loads_program("WIDTH 4\nPARTITIONS 1\n")
    assert prog.cycles == 0
    out, _ = run_program(init_row(4, 0), prog)
    assert list(out.cells) == [0] * 4
