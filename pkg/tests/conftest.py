import numpy as np
import pytest

from rowarith import run_batch
from rowarith.microcode import decode_operand


def run_values(prog, values, out_names=None):
    """Encode per-operand value lists, run the batch, decode the outputs."""
    n = len(next(iter(values.values())))
    cells = np.zeros((n, prog.row_width), dtype=bool)
    for name, vals in values.items():
        lay = prog.operands[name]
        for i, c in enumerate(lay.columns(prog.partitions)):
            cells[:, c] = [bool((int(v) >> i) & 1) for v in vals]
    out = run_batch(cells, prog)
    names = out_names or [n for n, l in prog.operands.items() if l.role.value == "output"]
    return {name: [int(v) for v in decode_operand(prog.operands[name], prog.partitions, out)]
            for name in names}


@pytest.fixture
def runner():
    return run_values
