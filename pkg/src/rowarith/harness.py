"""Oracles and verification drivers: write inputs, run the emitted program,
read outputs, compare to ground truth.

Fixed-point truth is host integer arithmetic; floating-point truth is exact
rational arithmetic rounded to nearest even, so any (n_e, n_m) format is
covered uniformly.  Cases whose true result leaves the supported domain
(non-normal float results, division by zero, quotient overflow) are
EXCLUDED: they count neither as passes nor as failures.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import MicroProgram, run_batch
from .float_core import FloatFormat
from .microcode import decode_operand
from .parallel_fixed import (
    emit_add_parallel,
    emit_div_parallel,
    emit_mult_parallel,
    emit_sub_parallel,
)
from .parallel_float import (
    emit_fadd_parallel,
    emit_fdiv_parallel,
    emit_fmul_parallel,
    emit_fsub_parallel,
    emit_normalize_parallel,
    emit_varshift_parallel,
)
from .serial_fixed import (
    emit_add_serial,
    emit_div_serial,
    emit_mult_serial,
    emit_sub_serial,
)
from .serial_float import (
    emit_fadd_signed_serial,
    emit_fadd_unsigned_serial,
    emit_fdiv_serial,
    emit_fmul_serial,
    emit_fsub_signed_serial,
    emit_normalize_serial,
    emit_varshift_serial,
)

__all__ = [
    "Domain",
    "OracleResult",
    "CheckReport",
    "BudgetError",
    "oracle_fixed",
    "oracle_float",
    "round_nearest_even",
    "check_exhaustive",
    "check_random",
    "emit_for",
    "FIXED_OPS",
    "FLOAT_OPS",
    "SHIFT_OPS",
    "CSV_HEADER",
]

FIXED_OPS = ("add", "sub", "mul", "div")
FLOAT_OPS = ("fadd", "fsub", "fmul", "fdiv")
SHIFT_OPS = ("varshift", "normalize")

CSV_HEADER = "op,variant,N_or_fmt,cases,passed,failed,first_fail_inputs"


class Domain(Enum):
    IN_DOMAIN = "in-domain"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class OracleResult:
    value: object
    domain_flag: Domain = Domain.IN_DOMAIN

    @property
    def excluded(self) -> bool:
        return self.domain_flag is Domain.EXCLUDED


class BudgetError(RuntimeError):
    """Raised when an exhaustive sweep would exceed its case budget."""


# ---------------------------------------------------------------------------
# oracles


def oracle_fixed(op: str, N: int, *args) -> OracleResult:
    """Host-arithmetic ground truth for the fixed-point emitters."""
    if op == "add":
        x, y = args
        return OracleResult(x + y)
    if op == "sub":
        x, y = args
        return OracleResult((x - y) % (1 << (N + 1)))
    if op == "mul":
        x, y = args
        return OracleResult(x * y)
    if op == "div":
        z, d = args
        if d == 0 or z >= (d << N):
            return OracleResult(None, Domain.EXCLUDED)
        return OracleResult(divmod(z, d))
    raise ValueError(f"unknown fixed op {op!r}")


def round_nearest_even(fmt: FloatFormat, v: Fraction) -> Optional[int]:
    """Bits of v rounded to nearest (ties to even), or None when the result
    is not a normal number of the format.  v = 0 yields canonical zero."""
    if v == 0:
        return 0
    s = 0 if v > 0 else 1
    a = -v if v < 0 else v
    e = 0
    while a >= 2:
        a /= 2
        e += 1
    while a < 1:
        a *= 2
        e -= 1
    scaled = a * (1 << fmt.n_m)
    fl = scaled.numerator // scaled.denominator
    rem = scaled - fl
    half = Fraction(1, 2)
    m = fl + (1 if (rem > half or (rem == half and fl & 1)) else 0)
    if m == (1 << (fmt.n_m + 1)):
        m >>= 1
        e += 1
    biased = e + fmt.bias
    if not (1 <= biased <= (1 << fmt.n_e) - 2):
        return None
    return fmt.join(s, biased, m - (1 << fmt.n_m))


def oracle_float(fmt: FloatFormat, op: str, x_bits: int, y_bits: int,
                 unsigned: bool = False) -> OracleResult:
    """Exact-then-round ground truth.  Results outside the normal range are
    EXCLUDED, except the exact zero of addition/subtraction which maps to
    the canonical all-zeros encoding."""
    if not (fmt.is_normal(x_bits) and fmt.is_normal(y_bits)):
        return OracleResult(None, Domain.EXCLUDED)
    if unsigned and (x_bits >> (fmt.width - 1)) != (y_bits >> (fmt.width - 1)):
        return OracleResult(None, Domain.EXCLUDED)
    vx, vy = fmt.to_fraction(x_bits), fmt.to_fraction(y_bits)
    if op in ("fadd", "fadd-unsigned"):
        v = vx + vy
    elif op == "fsub":
        v = vx - vy
    elif op == "fmul":
        v = vx * vy
    elif op == "fdiv":
        v = vx / vy
    else:
        raise ValueError(f"unknown float op {op!r}")
    if v == 0:
        if op in ("fmul", "fdiv"):
            return OracleResult(None, Domain.EXCLUDED)
        return OracleResult(0)
    bits = round_nearest_even(fmt, v)
    if bits is None:
        return OracleResult(None, Domain.EXCLUDED)
    return OracleResult(bits)


# ---------------------------------------------------------------------------
# emit dispatch


def emit_for(op: str, variant: str, N: Optional[int] = None,
             fmt: Optional[FloatFormat] = None, **kw) -> MicroProgram:
    """Emit the program for one op/variant at the given size."""
    key = (op, variant)
    table = {
        ("add", "serial"): lambda: emit_add_serial(N),
        ("sub", "serial"): lambda: emit_sub_serial(N),
        ("mul", "serial"): lambda: emit_mult_serial(N, **kw),
        ("div", "serial"): lambda: emit_div_serial(N),
        ("add", "parallel"): lambda: emit_add_parallel(N),
        ("sub", "parallel"): lambda: emit_sub_parallel(N),
        ("mul", "parallel"): lambda: emit_mult_parallel(N, **kw),
        ("div", "parallel"): lambda: emit_div_parallel(N),
        ("fadd", "serial"): lambda: emit_fadd_signed_serial(fmt),
        ("fadd-unsigned", "serial"): lambda: emit_fadd_unsigned_serial(fmt),
        ("fsub", "serial"): lambda: emit_fsub_signed_serial(fmt),
        ("fmul", "serial"): lambda: emit_fmul_serial(fmt),
        ("fdiv", "serial"): lambda: emit_fdiv_serial(fmt),
        ("fadd", "parallel"): lambda: emit_fadd_parallel(fmt),
        ("fsub", "parallel"): lambda: emit_fsub_parallel(fmt),
        ("fmul", "parallel"): lambda: emit_fmul_parallel(fmt),
        ("fdiv", "parallel"): lambda: emit_fdiv_parallel(fmt),
        ("varshift", "serial"): lambda: emit_varshift_serial(N, kw.pop("n_t", 3), **kw),
        ("varshift", "parallel"): lambda: emit_varshift_parallel(N, kw.pop("n_t", 3), **kw),
        ("normalize", "serial"): lambda: emit_normalize_serial(N),
        ("normalize", "parallel"): lambda: emit_normalize_parallel(N),
    }
    if key not in table:
        raise ValueError(f"unknown op/variant {op!r}/{variant!r}")
    return table[key]()


# ---------------------------------------------------------------------------
# check reports


@dataclass
class CheckReport:
    op: str
    variant: str
    size: str
    cases: int = 0
    passed: int = 0
    failed: int = 0
    excluded: int = 0
    first_fail: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def csv_row(self) -> str:
        ff = self.first_fail or ""
        return (f"{self.op},{self.variant},{self.size},{self.cases},"
                f"{self.passed},{self.failed},{ff}")

    def __str__(self) -> str:
        state = "pass" if self.ok else f"FAIL ({self.first_fail})"
        return (f"{self.op}/{self.variant} [{self.size}]: "
                f"{self.passed}/{self.cases} {state}")


def _encode_batch(prog: MicroProgram, values: dict[str, Sequence[int]]) -> np.ndarray:
    n = len(next(iter(values.values())))
    cells = np.zeros((n, prog.row_width), dtype=bool)
    for name, vals in values.items():
        lay = prog.operands[name]
        cols = lay.columns(prog.partitions)
        if lay.width <= 64:
            arr = np.array([int(v) for v in vals], dtype=np.uint64)
            for i, c in enumerate(cols):
                cells[:, c] = (arr >> np.uint64(i)) & np.uint64(1)
        else:
            for i, c in enumerate(cols):
                cells[:, c] = [bool((int(v) >> i) & 1) for v in vals]
    return cells


def _decode(prog: MicroProgram, cells: np.ndarray, name: str) -> list[int]:
    vals = decode_operand(prog.operands[name], prog.partitions, cells)
    return [int(v) for v in vals]


def _run(prog: MicroProgram, values: dict[str, Sequence[int]],
         out_names: Sequence[str]) -> dict[str, list[int]]:
    cells = run_batch(_encode_batch(prog, values), prog)
    return {name: _decode(prog, cells, name) for name in out_names}


def _decode_result(op: str, variant: str, N: Optional[int], outs: dict, i: int):
    if op in ("add", "sub"):
        if variant == "serial":
            return outs["z"][i]
        return outs["z"][i] + (outs["zc"][i] << N)
    if op == "mul":
        if variant == "serial":
            return outs["z"][i]
        return outs["z"][i] + (outs["w"][i] << N)
    if op == "div":
        return (outs["q"][i], outs["r"][i])
    if op == "normalize":
        return (outs["z"][i], outs["t"][i])
    return outs["z"][i]


_OUT_NAMES = {
    ("add", "serial"): ["z"], ("sub", "serial"): ["z"], ("mul", "serial"): ["z"],
    ("add", "parallel"): ["z", "zc"], ("sub", "parallel"): ["z", "zc"],
    ("mul", "parallel"): ["z", "w"],
    ("div", "serial"): ["q", "r"], ("div", "parallel"): ["q", "r"],
}


def _fixed_inputs(op: str, variant: str, N: int, xs, ys) -> dict:
    if op != "div":
        return {"x": xs, "y": ys}
    if variant == "serial":
        return {"z": xs, "d": ys}
    lo = [int(z) & ((1 << N) - 1) for z in xs]
    hi = [int(z) >> N for z in xs]
    return {"z": lo, "w": hi, "d": ys}


def _check_cases(op: str, variant: str, size: str, prog: MicroProgram,
                 N: Optional[int], fmt: Optional[FloatFormat],
                 xs: Sequence[int], ys: Optional[Sequence[int]],
                 unsigned: bool = False, n_t: Optional[int] = None) -> CheckReport:
    report = CheckReport(op, variant, size)
    if op in FIXED_OPS:
        values = _fixed_inputs(op, variant, N, xs, ys)
        outs = _run(prog, values, _OUT_NAMES[(op, variant)])
        oracle = [oracle_fixed(op, N, x, y) for x, y in zip(xs, ys)]
    elif op in FLOAT_OPS or op == "fadd-unsigned":
        outs = _run(prog, {"x": xs, "y": ys}, ["z"])
        oracle = [oracle_float(fmt, op, x, y, unsigned=unsigned)
                  for x, y in zip(xs, ys)]
    elif op == "varshift":
        outs = _run(prog, {"x": xs, "t": ys}, ["z"])
        oracle = [OracleResult(x >> t) for x, t in zip(xs, ys)]
    elif op == "normalize":
        levels = (N - 1).bit_length()
        outs = _run(prog, {"x": xs}, ["z", "t"])
        oracle = []
        for x in xs:
            if x == 0:
                oracle.append(OracleResult(None, Domain.EXCLUDED))
            else:
                lz = N - x.bit_length()
                oracle.append(OracleResult(((x << lz) & ((1 << N) - 1), lz)))
        ys = xs
    else:
        raise ValueError(f"unknown op {op!r}")

    for i, want in enumerate(oracle):
        if want.excluded:
            report.excluded += 1
            continue
        got = _decode_result(op, variant, N, outs, i)
        report.cases += 1
        if got == want.value:
            report.passed += 1
        else:
            report.failed += 1
            if report.first_fail is None:
                parts = [f"x={xs[i]:#x}"]
                if ys is not None:
                    parts.append(f"y={ys[i]:#x}")
                parts.append(f"got={got};want={want.value}")
                report.first_fail = ";".join(parts)
    return report


def _size_label(N, fmt):
    # 'x' separator keeps the CSV column count stable
    return f"{fmt.n_e}x{fmt.n_m}" if fmt is not None else str(N)


def check_exhaustive(op: str, variant: str, N: Optional[int] = None,
                     fmt: Optional[FloatFormat] = None,
                     budget: int = 1 << 21, **kw) -> CheckReport:
    """Sweep every in-domain input; refuses (with an estimate) over budget."""
    unsigned = op == "fadd-unsigned"
    if op in FIXED_OPS:
        if op == "div":
            total = sum(d << N for d in range(1, 1 << N))
        else:
            total = 1 << (2 * N)
        if total > budget:
            raise BudgetError(f"{total} cases exceed budget {budget}")
        if op == "div":
            xs, ys = [], []
            for d in range(1, 1 << N):
                for z in range(d << N):
                    xs.append(z)
                    ys.append(d)
        else:
            xs = [x for x in range(1 << N) for _ in range(1 << N)]
            ys = [y for _ in range(1 << N) for y in range(1 << N)]
        prog = emit_for(op, variant, N=N, **kw)
    elif op in FLOAT_OPS or unsigned:
        normals = list(fmt.all_normals())
        total = len(normals) ** 2
        if total > budget:
            raise BudgetError(f"{total} cases exceed budget {budget}")
        xs = [x for x in normals for _ in normals]
        ys = [y for _ in normals for y in normals]
        prog = emit_for(op, variant, fmt=fmt)
    elif op == "varshift":
        n_t = kw.pop("n_t", 3)
        total = (1 << N) * (1 << n_t)
        if total > budget:
            raise BudgetError(f"{total} cases exceed budget {budget}")
        xs = [x for x in range(1 << N) for _ in range(1 << n_t)]
        ys = [t for _ in range(1 << N) for t in range(1 << n_t)]
        prog = emit_for(op, variant, N=N, n_t=n_t, **kw)
    elif op == "normalize":
        total = 1 << N
        if total > budget:
            raise BudgetError(f"{total} cases exceed budget {budget}")
        xs = list(range(1 << N))
        ys = None
        prog = emit_for(op, variant, N=N, **kw)
    else:
        raise ValueError(f"unknown op {op!r}")
    return _check_cases(op, variant, _size_label(N, fmt), prog, N, fmt, xs, ys,
                        unsigned=unsigned)


def check_random(op: str, variant: str, N: Optional[int] = None,
                 fmt: Optional[FloatFormat] = None, count: int = 10000,
                 seed: int = 0, **kw) -> CheckReport:
    """Seeded sampling of in-domain inputs; same seed, same report."""
    rng = np.random.default_rng(seed)
    unsigned = op == "fadd-unsigned"
    if op in FIXED_OPS:
        if op == "div":
            ds = [int(v) for v in rng.integers(1, 1 << N, count)]
            qs = [int(v) for v in rng.integers(0, 1 << N, count)]
            rs = [int(rng.integers(0, d)) for d in ds]
            xs = [q * d + r for q, d, r in zip(qs, ds, rs)]
            ys = ds
        else:
            xs = [int(v) for v in rng.integers(0, 1 << N, count)]
            ys = [int(v) for v in rng.integers(0, 1 << N, count)]
        prog = emit_for(op, variant, N=N, **kw)
    elif op in FLOAT_OPS or unsigned:
        def normals(n):
            s = rng.integers(0, 2, n)
            e = rng.integers(1, (1 << fmt.n_e) - 1, n)
            m = rng.integers(0, 1 << fmt.n_m, n, dtype=np.int64)
            return [fmt.join(int(a), int(b), int(c)) for a, b, c in zip(s, e, m)]
        xs = normals(count)
        ys = normals(count)
        if unsigned:
            # fold y's sign onto x's so every pair is in-domain
            w = fmt.width - 1
            ys = [(y & ~(1 << w)) | (x & (1 << w)) for x, y in zip(xs, ys)]
        prog = emit_for(op, variant, fmt=fmt)
    elif op == "varshift":
        n_t = kw.pop("n_t", 3)
        xs = [int(v) for v in rng.integers(0, 1 << N, count)]
        ys = [int(v) for v in rng.integers(0, 1 << n_t, count)]
        prog = emit_for(op, variant, N=N, n_t=n_t, **kw)
    elif op == "normalize":
        xs = [int(v) for v in rng.integers(1, 1 << N, count)]
        ys = None
        prog = emit_for(op, variant, N=N, **kw)
    else:
        raise ValueError(f"unknown op {op!r}")
    return _check_cases(op, variant, _size_label(N, fmt), prog, N, fmt, xs, ys,
                        unsigned=unsigned)
