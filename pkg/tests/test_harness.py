import numpy as np
import pytest

from rowarith.core import CycleStep, GateInstance, MicroProgram
from rowarith.float_core import FloatFormat
from rowarith.harness import (
    BudgetError,
    CheckReport,
    Domain,
    check_exhaustive,
    check_random,
    oracle_fixed,
    oracle_float,
    round_nearest_even,
)

TOY = FloatFormat(4, 3)
SINGLE = FloatFormat(8, 23)


class TestOracleFixed:
    def test_add_carry_out(self):
        assert oracle_fixed("add", 4, 15, 1).value == 16

    def test_div(self):
        assert oracle_fixed("div", 4, 100, 7).value == (14, 2)

    def test_div_by_zero_excluded(self):
        assert oracle_fixed("div", 4, 37, 0).excluded

    def test_div_quotient_overflow_excluded(self):
        assert oracle_fixed("div", 4, 16 * 7, 7).excluded

    def test_sub_wraps(self):
        assert oracle_fixed("sub", 4, 0, 1).value == 31


class TestOracleFloat:
    def test_identity_mul(self):
        one = TOY.join(0, TOY.bias, 0)
        for bits in (TOY.join(0, 5, 3), TOY.join(1, 12, 7)):
            assert oracle_float(TOY, "fmul", bits, one).value == bits

    def test_exact_zero_add_in_domain(self):
        x = TOY.join(0, 8, 4)
        res = oracle_float(TOY, "fadd", x, TOY.join(1, 8, 4))
        assert res.domain_flag is Domain.IN_DOMAIN and res.value == 0

    def test_overflow_excluded(self):
        big = TOY.join(0, (1 << TOY.n_e) - 2, (1 << TOY.n_m) - 1)
        assert oracle_float(TOY, "fadd", big, big).excluded

    def test_underflow_excluded(self):
        tiny = TOY.join(0, 1, 0)
        assert oracle_float(TOY, "fmul", tiny, tiny).excluded

    def test_matches_host_single(self):
        rng = np.random.default_rng(0)
        n = 20000
        def normals():
            s = rng.integers(0, 2, n).astype(np.uint32)
            e = rng.integers(1, 255, n).astype(np.uint32)
            m = rng.integers(0, 1 << 23, n, dtype=np.int64).astype(np.uint32)
            return (s << np.uint32(31)) | (e << np.uint32(23)) | m
        xs, ys = normals(), normals()
        fx, fy = xs.view(np.float32), ys.view(np.float32)
        with np.errstate(all="ignore"):
            hosts = {"fadd": fx + fy, "fsub": fx - fy,
                     "fmul": fx * fy, "fdiv": fx / fy}
        for op, host in hosts.items():
            hbits = host.view(np.uint32)
            checked = 0
            for x, y, hb, hv in zip(xs.tolist(), ys.tolist(),
                                    hbits.tolist(), host.tolist()):
                res = oracle_float(SINGLE, op, x, y)
                if res.excluded:
                    continue
                want = 0 if hv == 0 else hb
                assert res.value == want, (op, hex(x), hex(y))
                checked += 1
            assert checked > n // 2

    def test_constructed_tie(self):
        # mantissa 1.000 + ulp/2 at distance: 1.0000 + 0.00001 exactly
        from fractions import Fraction
        v = Fraction(1) + Fraction(1, 16)  # halfway between m=0 and m=1
        bits = round_nearest_even(TOY, v)
        s, e, m = TOY.split(bits)
        assert m == 0 and e == TOY.bias  # ties to even: stays at m=0
        v2 = Fraction(1) + Fraction(3, 16)  # halfway between m=1 and m=2
        s, e, m = TOY.split(round_nearest_even(TOY, v2))
        assert m == 2  # rounds up to the even mantissa


class TestCheckers:
    def test_exhaustive_serial_add(self):
        rep = check_exhaustive("add", "serial", N=4)
        assert rep.cases == 256 and rep.failed == 0

    def test_exhaustive_toy_float(self):
        rep = check_exhaustive("fadd", "serial", fmt=TOY)
        assert rep.failed == 0 and rep.cases > 40000

    def test_budget_refused_with_estimate(self):
        with pytest.raises(BudgetError, match="4294967296"):
            check_exhaustive("add", "serial", N=16)

    def test_random_deterministic_replay(self):
        a = check_random("mul", "parallel", N=8, count=500, seed=123)
        b = check_random("mul", "parallel", N=8, count=500, seed=123)
        assert a == b

    def test_random_passes(self):
        assert check_random("add", "serial", N=32, count=1000, seed=5).ok
        assert check_random("fmul", "serial", fmt=SINGLE, count=500, seed=6).ok

    def test_corrupted_program_fails_with_counterexample(self, monkeypatch):
        from rowarith import serial_fixed
        good = serial_fixed.emit_add_serial(4)
        # flip the final gate's output column onto a scratch cell
        steps = list(good.steps)
        last = steps[-1]
        g = last.gates[0]
        bad_col = next(iter(good.scratch))
        steps[-1] = CycleStep(last.switches,
                              (GateInstance(g.kind, g.inputs, bad_col),))
        corrupted = MicroProgram(good.row_width, good.partitions, tuple(steps),
                                 good.operands, good.scratch)
        monkeypatch.setattr("rowarith.harness.emit_add_serial",
                            lambda N, **kw: corrupted)
        rep = check_exhaustive("add", "serial", N=4)
        assert rep.failed > 0
        assert rep.first_fail and "want" in rep.first_fail

    def test_csv_row_shape(self):
        rep = CheckReport("add", "serial", "4", 10, 10, 0)
        assert rep.csv_row().split(",")[:4] == ["add", "serial", "4", "10"]
