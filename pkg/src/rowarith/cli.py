"""Command-line front end: verification suites, cost tables, throughput
projection, and program dumps.

Hardware parameters for throughput projection come exclusively from a user
config file (JSON: rows, cols, arrays, clock_period_s, energy_per_gate_j);
the repository ships only an illustrative example, not device truth.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .core import Accounting, cost, validate_program
from .dumpfmt import dump_program, parse_program
from .float_core import FloatFormat
from .harness import (
    CSV_HEADER,
    FIXED_OPS,
    FLOAT_OPS,
    check_exhaustive,
    check_random,
    emit_for,
)
from .parallel_fixed import MultTail
from .toolbox import AssocOp, emit_broadcast, emit_prefix, emit_reduce, emit_shift

TOOLBOX_OPS = ("toolbox-shift", "toolbox-broadcast", "toolbox-reduce", "toolbox-prefix")
ALL_OPS = FIXED_OPS + FLOAT_OPS + ("fadd-unsigned", "varshift", "normalize") + TOOLBOX_OPS

DEFAULT_NS = (8, 16, 32)
DEFAULT_FMT = "8,23"


def _parse_fmt(text: str) -> FloatFormat:
    try:
        ne, nm = (int(v) for v in text.split(","))
    except ValueError:
        raise SystemExit(f"error: --fmt expects 'Ne,Nm', got {text!r}")
    return FloatFormat(ne, nm)


def _emit_any(op: str, variant: str, n: Optional[int], fmt_text: Optional[str],
              tail: str = "prefix-adder", assoc: str = "OR", j: int = 1, src: int = 0):
    if op in TOOLBOX_OPS:
        k = n or 16
        if op == "toolbox-shift":
            return emit_shift(k, j)
        if op == "toolbox-broadcast":
            return emit_broadcast(k, src)
        if op == "toolbox-reduce":
            return emit_reduce(k, AssocOp[assoc])
        return emit_prefix(k, AssocOp[assoc])
    if op in FLOAT_OPS or op == "fadd-unsigned":
        fmt = _parse_fmt(fmt_text or DEFAULT_FMT)
        return emit_for(op, variant, fmt=fmt)
    kw = {}
    if op == "mul" and variant == "parallel":
        kw["tail"] = MultTail(tail)
    return emit_for(op, variant, N=n or 16, **kw)


def _write_rows(path: Optional[str], header: str, rows: list[str]):
    text = "\n".join([header] + rows) + "\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    sys.stdout.write(text)


def cmd_verify(args) -> int:
    selections = []
    if args.all:
        ns = [4] if args.exhaustive else list(args.n or DEFAULT_NS)
        count = 1000 if args.quick else (args.random or 10000)
        for op in FIXED_OPS:
            for variant in ("serial", "parallel"):
                for n in ns:
                    selections.append(dict(op=op, variant=variant, N=n))
        fmt = _parse_fmt(args.fmt or "4,3")
        for op in FLOAT_OPS:
            for variant in ("serial", "parallel"):
                selections.append(dict(op=op, variant=variant, fmt=fmt))
        selections.append(dict(op="fadd-unsigned", variant="serial", fmt=fmt))
    else:
        if args.op is None:
            raise SystemExit("error: --op or --all required")
        variants = [args.variant] if args.variant else ["serial", "parallel"]
        for variant in variants:
            if args.op in FLOAT_OPS or args.op == "fadd-unsigned":
                selections.append(dict(op=args.op, variant=variant,
                                       fmt=_parse_fmt(args.fmt or DEFAULT_FMT)))
            else:
                for n in (args.n or [4]):
                    selections.append(dict(op=args.op, variant=variant, N=n))
        count = args.random or 10000

    rows = []
    failures = 0
    for sel in selections:
        if args.exhaustive:
            rep = check_exhaustive(**sel, budget=args.budget)
        else:
            rep = check_random(**sel, count=count, seed=args.seed)
        rows.append(rep.csv_row())
        print(rep, file=sys.stderr)
        if not rep.ok:
            failures += 1
    _write_rows(args.csv, CSV_HEADER, rows)
    return 1 if failures else 0


def cmd_cost(args) -> int:
    accounting = Accounting(args.accounting)
    ops = [args.op] if args.op else list(FIXED_OPS)
    variants = [args.variant] if args.variant else ["serial", "parallel"]
    rows = []
    for op in ops:
        if op in TOOLBOX_OPS:
            variant_list = ["parallel"]
        elif op == "fadd-unsigned":
            variant_list = ["serial"]
        else:
            variant_list = variants
        for variant in variant_list:
            sizes = [None] if (op in FLOAT_OPS or op == "fadd-unsigned") \
                else list(args.n or DEFAULT_NS)
            for n in sizes:
                try:
                    prog = _emit_any(op, variant, n, args.fmt, tail=args.tail,
                                     assoc=args.assoc, j=args.j, src=args.src)
                except ValueError as e:
                    print(f"skip {op}/{variant}/{n}: {e}", file=sys.stderr)
                    continue
                rep = cost(prog, accounting)
                label = prog.meta.get("fmt", n if n is not None else "")
                label = str(label).replace(",", "x")
                rows.append(f"{op},{variant},{label},{rep.cycles},"
                            f"{rep.gate_count},{rep.scratch_peak}")
    _write_rows(args.csv, "op,variant,N,cycles,gates,scratch_peak", rows)
    return 0


def cmd_throughput(args) -> int:
    if not args.hw:
        raise SystemExit("error: --hw FILE with hardware parameters is required")
    with open(args.hw) as f:
        hw = json.load(f)
    missing = [k for k in ("rows", "cols", "arrays", "clock_period_s",
                           "energy_per_gate_j") if k not in hw]
    if missing:
        raise SystemExit(f"error: hardware config missing {missing}")
    ops = [args.op] if args.op else list(FIXED_OPS)
    variants = [args.variant] if args.variant else ["serial", "parallel"]
    rows = []
    for op in ops:
        for variant in variants:
            sizes = [None] if (op in FLOAT_OPS or op == "fadd-unsigned") \
                else list(args.n or DEFAULT_NS)
            for n in sizes:
                try:
                    prog = _emit_any(op, variant, n, args.fmt, tail=args.tail)
                except ValueError as e:
                    print(f"skip {op}/{variant}/{n}: {e}", file=sys.stderr)
                    continue
                rep = cost(prog, Accounting(args.accounting))
                if prog.row_width > hw["cols"]:
                    print(f"skip {op}/{variant}/{n}: needs {prog.row_width} columns, "
                          f"array has {hw['cols']}", file=sys.stderr)
                    continue
                ops_per_row = hw["cols"] // prog.row_width
                elems = hw["rows"] * hw["arrays"] * ops_per_row
                t = elems / (rep.cycles * hw["clock_period_s"])
                # energy per batch: every gate fires once per occupied row
                energy = rep.gate_count * hw["energy_per_gate_j"] * hw["rows"] * hw["arrays"] * ops_per_row
                per_watt = t / (energy / (rep.cycles * hw["clock_period_s"]))
                label = prog.meta.get("fmt", n if n is not None else "")
                label = str(label).replace(",", "x")
                rows.append(f"{op},{variant},{label},{t:.6g},{per_watt:.6g}")
    _write_rows(args.csv, "op,variant,N,throughput_ops_s,throughput_per_watt", rows)
    return 0


def cmd_dump(args) -> int:
    prog = _emit_any(args.op, args.variant or "serial", args.n and args.n[0],
                     args.fmt, tail=args.tail, assoc=args.assoc, j=args.j,
                     src=args.src)
    report = validate_program(prog)
    if not report.ok:
        print(report, file=sys.stderr)
        return 1
    dump_program(prog, args.out)
    # guard the external format: re-parse must reproduce the bytes
    again = parse_program(args.out)
    from .dumpfmt import dumps_program
    if dumps_program(again) != dumps_program(prog):
        print("round-trip mismatch", file=sys.stderr)
        return 1
    print(f"wrote {args.out}: {prog.cycles} cycles, {prog.gate_count()} gates",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rowarith",
                                description="gate-level row-arithmetic microcode tools")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_verify=False):
        sp.add_argument("--op", choices=ALL_OPS)
        sp.add_argument("--variant", choices=["serial", "parallel"])
        sp.add_argument("--n", type=int, nargs="*", help="bit width(s) / partition count")
        sp.add_argument("--fmt", help="float format as Ne,Nm (e.g. 8,23)")
        sp.add_argument("--accounting", choices=["logical", "memristive"],
                        default="logical")
        sp.add_argument("--tail", choices=[t.value for t in MultTail],
                        default="prefix-adder", help="parallel multiplier tail")
        sp.add_argument("--assoc", choices=[o.name for o in AssocOp], default="OR")
        sp.add_argument("--j", type=int, default=1, help="toolbox shift distance")
        sp.add_argument("--src", type=int, default=0, help="toolbox broadcast source")
        sp.add_argument("--csv", help="also write the CSV report to this path")

    sv = sub.add_parser("verify", help="run oracle checks")
    common(sv)
    sv.add_argument("--all", action="store_true", help="whole suite")
    sv.add_argument("--quick", action="store_true", help="small random counts")
    sv.add_argument("--exhaustive", action="store_true")
    sv.add_argument("--random", type=int, metavar="COUNT")
    sv.add_argument("--seed", type=int, default=0)
    sv.add_argument("--budget", type=int, default=1 << 21)
    sv.set_defaults(fn=cmd_verify)

    sc = sub.add_parser("cost", help="cycle/gate cost table")
    common(sc)
    sc.set_defaults(fn=cmd_cost)

    st = sub.add_parser("throughput", help="throughput projection from --hw config")
    common(st)
    st.add_argument("--hw", help="JSON hardware parameter file")
    st.set_defaults(fn=cmd_throughput)

    sd = sub.add_parser("dump", help="write a program dump")
    common(sd)
    sd.add_argument("--out", required=True)
    sd.set_defaults(fn=cmd_dump)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
