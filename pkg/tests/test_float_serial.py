import struct

import numpy as np
import pytest

from rowarith import validate_program
from rowarith.float_core import FloatFormat
from rowarith.harness import oracle_float
from rowarith.serial_float import (
    emit_fadd_signed_serial,
    emit_fadd_unsigned_serial,
    emit_fdiv_serial,
    emit_fmul_serial,
    emit_fsub_signed_serial,
    emit_normalize_serial,
    emit_varshift_serial,
)

TOY = FloatFormat(4, 3)
SINGLE = FloatFormat(8, 23)


def f32_bits(x: float) -> int:
    return struct.unpack("<I", struct.pack("<f", x))[0]


class TestVarShift:
    def test_identity(self, runner):
        out = runner(emit_varshift_serial(8, 3), {"x": [0b1101], "t": [0]})
        assert out["z"] == [0b1101]

    def test_example(self, runner):
        out = runner(emit_varshift_serial(8, 3), {"x": [0b01100000], "t": [5]})
        assert out["z"] == [0b00000011]

    def test_exhaustive(self, runner):
        prog = emit_varshift_serial(8, 3)
        xs = [x for x in range(256) for t in range(8)]
        ts = [t for x in range(256) for t in range(8)]
        out = runner(prog, {"x": xs, "t": ts})
        assert out["z"] == [x >> t for x, t in zip(xs, ts)]

    def test_left_direction(self, runner):
        prog = emit_varshift_serial(8, 3, direction="left")
        xs = [x for x in range(0, 256, 3) for t in range(8)]
        ts = [t for x in range(0, 256, 3) for t in range(8)]
        out = runner(prog, {"x": xs, "t": ts})
        assert out["z"] == [(x << t) & 255 for x, t in zip(xs, ts)]

    def test_sticky_collects_discards(self, runner):
        prog = emit_varshift_serial(8, 4, sticky=True)
        xs = [x for x in range(256) for t in range(16)]
        ts = [t for x in range(256) for t in range(16)]
        out = runner(prog, {"x": xs, "t": ts})
        for x, t, z, st in zip(xs, ts, out["z"], out["sticky"]):
            assert z == x >> t
            assert st == (1 if x & ((1 << min(t, 8)) - 1) else 0)

    def test_gate_count_nlogn_class(self):
        g = {n: emit_varshift_serial(n, (n - 1).bit_length()).gate_count()
             for n in (8, 16, 32)}
        r1, r2 = g[16] / g[8], g[32] / g[16]
        # N log N: doubling ratio in (2, 4), mildly above 2
        assert 2.0 < r1 < 4.0 and 2.0 < r2 < 4.0


class TestNormalize:
    def test_already_normalized(self, runner):
        out = runner(emit_normalize_serial(8), {"x": [0x80 | 0x13]})
        assert out["z"] == [0x93] and out["t"] == [0]

    def test_worked_example(self, runner):
        out = runner(emit_normalize_serial(8), {"x": [0b00000110]})
        assert out["z"] == [0b11000000] and out["t"] == [5]

    def test_exhaustive_nonzero(self, runner):
        prog = emit_normalize_serial(8)
        xs = list(range(1, 256))
        out = runner(prog, {"x": xs})
        for x, z, t in zip(xs, out["z"], out["t"]):
            lz = 8 - x.bit_length()
            assert (z, t) == (((x << lz) & 255), lz)
            assert z & 0x80

    def test_overhead_vs_varshift(self):
        ratio = emit_normalize_serial(24).cycles / emit_varshift_serial(24, 5).cycles
        assert ratio <= 1.10


def _run_float(runner, prog, fmt, pairs):
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    return runner(prog, {"x": xs, "y": ys})["z"]


def _sample_normals(fmt, count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        out.append(fmt.join(int(rng.integers(0, 2)),
                            int(rng.integers(1, (1 << fmt.n_e) - 1)),
                            int(rng.integers(0, 1 << fmt.n_m))))
    return out


class TestFloatAdd:
    def test_doubling(self, runner):
        # x + x doubles the exponent field when exact
        prog = emit_fadd_signed_serial(TOY)
        x = TOY.join(0, 5, 3)
        z = _run_float(runner, prog, TOY, [(x, x)])[0]
        assert z == TOY.join(0, 6, 3)

    def test_cancellation_gives_canonical_zero(self, runner):
        prog = emit_fadd_signed_serial(TOY)
        x = TOY.join(0, 9, 5)
        z = _run_float(runner, prog, TOY, [(x, TOY.join(1, 9, 5))])[0]
        assert z == 0

    def test_single_precision_example(self, runner):
        prog = emit_fadd_signed_serial(SINGLE)
        z = _run_float(runner, prog, SINGLE,
                       [(f32_bits(1.5), f32_bits(2.25))])[0]
        assert z == f32_bits(3.75)

    def test_massive_cancellation(self, runner):
        prog = emit_fsub_signed_serial(SINGLE)
        cases = [(f32_bits(1.0013e1), f32_bits(1.0e1)),
                 (f32_bits(1.0000001), f32_bits(1.0)),
                 (f32_bits(256.0003), f32_bits(256.0))]
        got = _run_float(runner, prog, SINGLE, cases)
        want = [f32_bits(np.float32(1.0013e1) - np.float32(1.0e1)),
                f32_bits(np.float32(1.0000001) - np.float32(1.0)),
                f32_bits(np.float32(256.0003) - np.float32(256.0))]
        assert got == want

    def test_unsigned_exhaustive_same_sign(self, runner):
        prog = emit_fadd_unsigned_serial(TOY)
        normals = list(TOY.all_normals())
        w = TOY.width - 1
        pairs = [(x, y) for x in normals for y in normals
                 if (x >> w) == (y >> w)]
        got = _run_float(runner, prog, TOY, pairs)
        checked = 0
        for (x, y), z in zip(pairs, got):
            want = oracle_float(TOY, "fadd", x, y, unsigned=True)
            if not want.excluded:
                assert z == want.value, (hex(x), hex(y))
                checked += 1
        assert checked > 20000


class TestFloatMulDiv:
    def test_mul_identity(self, runner):
        prog = emit_fmul_serial(TOY)
        one = TOY.join(0, TOY.bias, 0)
        xs = _sample_normals(TOY, 30, 3)
        got = _run_float(runner, prog, TOY, [(x, one) for x in xs])
        assert got == xs

    def test_div_self_is_one(self, runner):
        prog = emit_fdiv_serial(TOY)
        one = TOY.join(0, TOY.bias, 0)
        xs = _sample_normals(TOY, 30, 4)
        got = _run_float(runner, prog, TOY, [(x, x) for x in xs])
        assert all(z == one for z in got)

    def test_ties_round_to_even(self, runner):
        # products whose exact value sits exactly halfway between two
        # representable mantissas must land on the even neighbour
        from fractions import Fraction
        ties = []
        for mx in range(8):
            for my in range(8):
                exact = Fraction((8 + mx) * (8 + my), 64)  # in [1, 4)
                scaled = exact * 8 / (2 if exact >= 2 else 1)
                if scaled - scaled.numerator // scaled.denominator == Fraction(1, 2):
                    ties.append((TOY.join(0, TOY.bias, mx), TOY.join(0, TOY.bias, my)))
        assert ties, "toy format should contain halfway products"
        prog = emit_fmul_serial(TOY)
        got = _run_float(runner, prog, TOY, ties)
        for (x, y), z in zip(ties, got):
            want = oracle_float(TOY, "fmul", x, y)
            assert z == want.value
            assert TOY.split(z)[2] % 2 == 0, (hex(x), hex(y), hex(z))

    @pytest.mark.parametrize("op,emit", [
        ("fmul", emit_fmul_serial), ("fdiv", emit_fdiv_serial)])
    def test_random_toy(self, runner, op, emit):
        prog = emit(TOY)
        xs = _sample_normals(TOY, 400, 5)
        ys = _sample_normals(TOY, 400, 6)
        got = _run_float(runner, prog, TOY, list(zip(xs, ys)))
        for x, y, z in zip(xs, ys, got):
            want = oracle_float(TOY, op, x, y)
            if not want.excluded:
                assert z == want.value, (hex(x), hex(y), hex(z))


class TestStructure:
    @pytest.mark.parametrize("emit", [
        emit_fadd_unsigned_serial, emit_fadd_signed_serial,
        emit_fsub_signed_serial, emit_fmul_serial, emit_fdiv_serial,
    ])
    def test_validates_and_pure(self, emit):
        a = emit(TOY)
        b = emit(TOY)
        assert validate_program(a).ok
        assert a.steps == b.steps  # emitted program independent of any data
