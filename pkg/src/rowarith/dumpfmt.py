"""Line-oriented program dump format with a bit-exact round trip.

    WIDTH <c>
    PARTITIONS <k>
    OPERAND <name> <CONTIGUOUS|STRIDED> base=<b> width=<w> role=<role> [...]
    STEP <idx> SW=<bitstring|-> ; <KIND>(<in>,...)-><out> ; ...

``SW=-`` stands for the empty switch list of an unpartitioned row.
"""

from __future__ import annotations

from typing import TextIO, Union

from .core import (
    CycleStep,
    GateInstance,
    GateKind,
    LayoutFormat,
    MicroProgram,
    OperandLayout,
    PartitionConfig,
    Role,
    SwitchConfig,
)

__all__ = ["dump_program", "parse_program", "dumps_program", "loads_program", "DumpError"]


class DumpError(ValueError):
    """Malformed program dump."""


def _operand_line(lay: OperandLayout) -> str:
    parts = [
        f"OPERAND {lay.name} {lay.fmt.value}",
        f"base={lay.base}",
        f"width={lay.width}",
        f"role={lay.role.value}",
    ]
    if lay.signed:
        parts.append("signed=1")
    if lay.float_fmt is not None:
        parts.append(f"float={lay.float_fmt[0]},{lay.float_fmt[1]}")
    if lay.consumed:
        parts.append("consumed=1")
    return " ".join(parts)


def _gate_text(g: GateInstance) -> str:
    return f"{g.kind.value}({','.join(str(c) for c in g.inputs)})->{g.output}"


def dumps_program(prog: MicroProgram) -> str:
    lines = [f"WIDTH {prog.row_width}", f"PARTITIONS {prog.partitions.k}"]
    for name in sorted(prog.operands):
        lines.append(_operand_line(prog.operands[name]))
    for i, step in enumerate(prog.steps):
        sw = step.switches.bitstring() or "-"
        gates = " ; ".join(_gate_text(g) for g in step.gates)
        lines.append(f"STEP {i} SW={sw} ; {gates}")
    return "\n".join(lines) + "\n"


def dump_program(prog: MicroProgram, fp: Union[str, TextIO]):
    text = dumps_program(prog)
    if isinstance(fp, str):
        with open(fp, "w") as f:
            f.write(text)
    else:
        fp.write(text)


def _parse_gate(text: str) -> GateInstance:
    text = text.strip()
    try:
        head, out = text.split("->")
        kind_name, args = head.split("(", 1)
        if not args.endswith(")"):
            raise ValueError
        args = args[:-1]
        kind = GateKind(kind_name)
        inputs = tuple(int(a) for a in args.split(",")) if args else ()
        return GateInstance(kind, inputs, int(out))
    except (ValueError, KeyError) as e:
        raise DumpError(f"bad gate {text!r}") from e


def _parse_operand(tokens: list[str]) -> OperandLayout:
    if len(tokens) < 3:
        raise DumpError(f"bad OPERAND line: {' '.join(tokens)}")
    name = tokens[0]
    try:
        fmt = LayoutFormat(tokens[1])
    except ValueError as e:
        raise DumpError(f"bad operand format {tokens[1]!r}") from e
    kv = {}
    for tok in tokens[2:]:
        if "=" not in tok:
            raise DumpError(f"bad operand attribute {tok!r}")
        k, v = tok.split("=", 1)
        kv[k] = v
    try:
        base = int(kv.pop("base"))
        width = int(kv.pop("width"))
        role = Role(kv.pop("role"))
    except (KeyError, ValueError) as e:
        raise DumpError(f"bad operand attributes for {name!r}") from e
    signed = kv.pop("signed", "0") == "1"
    consumed = kv.pop("consumed", "0") == "1"
    ffmt = None
    if "float" in kv:
        try:
            ne, nm = kv.pop("float").split(",")
            ffmt = (int(ne), int(nm))
        except ValueError as e:
            raise DumpError(f"bad float tag for {name!r}") from e
    if kv:
        raise DumpError(f"unknown operand attributes {sorted(kv)} for {name!r}")
    return OperandLayout(name, fmt, base, width, role, signed=signed,
                         float_fmt=ffmt, consumed=consumed)


def loads_program(text: str) -> MicroProgram:
    width = None
    k = None
    operands: dict[str, OperandLayout] = {}
    steps: list[CycleStep] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        tag = tokens[0]
        try:
            if tag == "WIDTH":
                width = int(tokens[1])
            elif tag == "PARTITIONS":
                k = int(tokens[1])
            elif tag == "OPERAND":
                lay = _parse_operand(tokens[1:])
                operands[lay.name] = lay
            elif tag == "STEP":
                if width is None or k is None:
                    raise DumpError("STEP before WIDTH/PARTITIONS header")
                idx = int(tokens[1])
                if idx != len(steps):
                    raise DumpError(f"step index {idx} out of order")
                if not tokens[2].startswith("SW="):
                    raise DumpError("missing SW= field")
                sw_text = tokens[2][3:]
                if sw_text == "-":
                    states: tuple[bool, ...] = ()
                elif sw_text and set(sw_text) <= {"0", "1"}:
                    states = tuple(ch == "1" for ch in sw_text)
                else:
                    raise DumpError(f"bad SW bitstring {sw_text!r}")
                if len(states) != k - 1:
                    raise DumpError(f"SW length {len(states)} != k-1 = {k - 1}")
                rest = line.split(";", 1)
                if len(rest) != 2:
                    raise DumpError("missing gate list")
                gates = tuple(_parse_gate(g) for g in rest[1].split(";"))
                steps.append(CycleStep(SwitchConfig(states), gates))
            else:
                raise DumpError(f"unknown line tag {tag!r}")
        except DumpError as e:
            raise DumpError(f"line {lineno}: {e}") from None
        except (IndexError, ValueError) as e:
            raise DumpError(f"line {lineno}: malformed ({raw!r})") from e
    if width is None or k is None:
        raise DumpError("missing WIDTH or PARTITIONS header")
    if width % k != 0:
        raise DumpError(f"width {width} not divisible by {k} partitions")
    cfg = PartitionConfig(k, width // k)
    operand_cols = set()
    for lay in operands.values():
        operand_cols.update(lay.columns(cfg))
    scratch = {g.output for s in steps for g in s.gates} - operand_cols
    return MicroProgram(width, cfg, tuple(steps), operands, frozenset(scratch))


def parse_program(fp: Union[str, TextIO]) -> MicroProgram:
    if isinstance(fp, str):
        with open(fp) as f:
            return loads_program(f.read())
    return loads_program(fp.read())
