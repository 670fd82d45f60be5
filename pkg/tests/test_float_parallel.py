import numpy as np
import pytest

from rowarith import validate_program
from rowarith.float_core import FloatFormat
from rowarith.harness import oracle_float
from rowarith.parallel_float import (
    emit_fadd_parallel,
    emit_fdiv_parallel,
    emit_fmul_parallel,
    emit_fsub_parallel,
    emit_normalize_parallel,
    emit_varshift_parallel,
)
from rowarith.serial_float import (
    emit_fadd_signed_serial,
    emit_fdiv_serial,
    emit_fmul_serial,
    emit_fsub_signed_serial,
)

TOY = FloatFormat(4, 3)


def _sample_normals(fmt, count, seed):
    rng = np.random.default_rng(seed)
    return [fmt.join(int(rng.integers(0, 2)),
                     int(rng.integers(1, (1 << fmt.n_e) - 1)),
                     int(rng.integers(0, 1 << fmt.n_m)))
            for _ in range(count)]


class TestVarShiftParallel:
    def test_identity(self, runner):
        out = runner(emit_varshift_parallel(8, 3), {"x": [0b1011], "t": [0]})
        assert out["z"] == [0b1011]

    def test_exhaustive(self, runner):
        prog = emit_varshift_parallel(8, 3)
        xs = [x for x in range(256) for t in range(8)]
        ts = [t for x in range(256) for t in range(8)]
        out = runner(prog, {"x": xs, "t": ts})
        assert out["z"] == [x >> t for x, t in zip(xs, ts)]

    def test_matches_serial(self, runner):
        from rowarith.serial_float import emit_varshift_serial
        rng = np.random.default_rng(8)
        xs = [int(v) for v in rng.integers(0, 1 << 16, 200)]
        ts = [int(v) for v in rng.integers(0, 16, 200)]
        s = runner(emit_varshift_serial(16, 4), {"x": xs, "t": ts})["z"]
        p = runner(emit_varshift_parallel(16, 4), {"x": xs, "t": ts})["z"]
        assert s == p


class TestNormalizeParallel:
    def test_msb_set(self, runner):
        out = runner(emit_normalize_parallel(8), {"x": [0x80]})
        assert out["z"] == [0x80] and out["t"] == [0]

    def test_worked_example(self, runner):
        out = runner(emit_normalize_parallel(8), {"x": [0b00000110]})
        assert out["z"] == [0b11000000] and out["t"] == [5]

    def test_exhaustive(self, runner):
        prog = emit_normalize_parallel(8)
        xs = list(range(1, 256))
        out = runner(prog, {"x": xs})
        for x, z, t in zip(xs, out["z"], out["t"]):
            lz = 8 - x.bit_length()
            assert (z, t) == ((x << lz) & 255, lz)


PAR_OPS = [("fadd", emit_fadd_parallel, emit_fadd_signed_serial),
           ("fsub", emit_fsub_parallel, emit_fsub_signed_serial),
           ("fmul", emit_fmul_parallel, emit_fmul_serial),
           ("fdiv", emit_fdiv_parallel, emit_fdiv_serial)]


class TestParallelFloat:
    @pytest.mark.parametrize("op,emit,_", PAR_OPS, ids=[p[0] for p in PAR_OPS])
    def test_random_toy_vs_oracle(self, runner, op, emit, _):
        prog = emit(TOY)
        assert validate_program(prog).ok
        xs = _sample_normals(TOY, 500, 11)
        ys = _sample_normals(TOY, 500, 12)
        got = runner(prog, {"x": xs, "y": ys})["z"]
        for x, y, z in zip(xs, ys, got):
            want = oracle_float(TOY, op, x, y)
            if not want.excluded:
                assert z == want.value, (op, hex(x), hex(y), hex(z))

    @pytest.mark.parametrize("op,p_emit,s_emit", PAR_OPS, ids=[p[0] for p in PAR_OPS])
    def test_bit_exact_vs_serial(self, runner, op, p_emit, s_emit):
        xs = _sample_normals(TOY, 400, 21)
        ys = _sample_normals(TOY, 400, 22)
        p = runner(p_emit(TOY), {"x": xs, "y": ys})["z"]
        s = runner(s_emit(TOY), {"x": xs, "y": ys})["z"]
        assert p == s

    def test_alignment_cases_match_serial(self, runner):
        # zero-magnitude alignment: same exponents, all mantissa pairs
        pairs = [(TOY.join(0, 7, mx), TOY.join(1, 7, my))
                 for mx in range(8) for my in range(8)]
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        p = runner(emit_fadd_parallel(TOY), {"x": xs, "y": ys})["z"]
        s = runner(emit_fadd_signed_serial(TOY), {"x": xs, "y": ys})["z"]
        assert p == s

    def test_parallel_fadd_fewer_cycles_at_single(self):
        single = FloatFormat(8, 23)
        assert emit_fadd_parallel(single).cycles < emit_fadd_signed_serial(single).cycles
