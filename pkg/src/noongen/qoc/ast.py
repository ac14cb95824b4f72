"""Syntax tree for ``.qoc`` circuit programs and the canonical pretty-printer.

Source spans are carried on every node but excluded from equality, so a
program compares equal to the result of re-parsing its printed form.
"""

from dataclasses import dataclass, field

FUNCTIONS = ("arccos", "arcsin", "arctan", "cos", "sin", "tan", "sqrt")
CONSTANTS = ("pi",)
COMPARISONS = ("<", "<=", "==", ">", ">=")


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    offset: int


def _span():
    return field(default=None, compare=False, repr=False)


# -- expressions ----------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    span: Span = _span()


@dataclass(frozen=True)
class Name:
    id: str
    span: Span = _span()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object
    span: Span = _span()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    func: str
    arg: object
    span: Span = _span()


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object
    span: Span = _span()


# -- statements -----------------------------------------------------------------


@dataclass(frozen=True)
class BS:
    mode_a: int
    mode_b: int
    gamma: object
    chi: object = None
    span: Span = _span()


@dataclass(frozen=True)
class PS:
    mode: int
    chi: object
    span: Span = _span()


@dataclass(frozen=True)
class Detect:
    mode: int
    register: str
    span: Span = _span()


@dataclass(frozen=True)
class Vacuum:
    count: int
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: Compare
    body: tuple
    orelse: tuple = None
    span: Span = _span()


@dataclass(frozen=True)
class DiscardIf:
    cond: Compare
    span: Span = _span()


@dataclass(frozen=True)
class Unreachable:
    span: Span = _span()


@dataclass(frozen=True)
class Program:
    mode_count: int
    params: tuple
    statements: tuple
    span: Span = _span()

    @property
    def register_names(self):
        return frozenset(_registers(self.statements))

    @property
    def final_mode_count(self):
        return self.mode_count + _added_modes(self.statements)


def _registers(stmts):
    for st in stmts:
        if isinstance(st, Detect):
            yield st.register
        elif isinstance(st, If):
            yield from _registers(st.body)
            yield from _registers(st.orelse or ())


def _added_modes(stmts):
    total = 0
    for st in stmts:
        if isinstance(st, Vacuum):
            total += st.count
        elif isinstance(st, If):
            total += _added_modes(st.body)
    return total


# -- printing -------------------------------------------------------------------


def format_expr(e):
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Unary):
        return f"(-{format_expr(e.operand)})"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({format_expr(e.arg)})"
    if isinstance(e, Compare):
        return f"{format_expr(e.left)} {e.op} {format_expr(e.right)}"
    raise TypeError(f"not an expression: {e!r}")


def _format_block(stmts, indent):
    lines = []
    pad = "  " * indent
    for st in stmts:
        if isinstance(st, BS):
            chi = "" if st.chi is None else " " + format_expr(st.chi)
            lines.append(f"{pad}bs {st.mode_a} {st.mode_b} {format_expr(st.gamma)}{chi}")
        elif isinstance(st, PS):
            lines.append(f"{pad}ps {st.mode} {format_expr(st.chi)}")
        elif isinstance(st, Detect):
            lines.append(f"{pad}detect {st.mode} -> {st.register}")
        elif isinstance(st, Vacuum):
            lines.append(f"{pad}vacuum {st.count}")
        elif isinstance(st, DiscardIf):
            lines.append(f"{pad}discard_if {format_expr(st.cond)}")
        elif isinstance(st, Unreachable):
            lines.append(f"{pad}unreachable")
        elif isinstance(st, If):
            lines.append(f"{pad}if {format_expr(st.cond)} {{")
            lines.extend(_format_block(st.body, indent + 1))
            if st.orelse is None:
                lines.append(f"{pad}}}")
            else:
                lines.append(f"{pad}}} else {{")
                lines.extend(_format_block(st.orelse, indent + 1))
                lines.append(f"{pad}}}")
        else:
            raise TypeError(f"not a statement: {st!r}")
    return lines


def format_program(program):
    lines = [f"modes {program.mode_count}"]
    if program.params:
        lines.append("param " + " ".join(program.params))
    lines.extend(_format_block(program.statements, 0))
    return "\n".join(lines) + "\n"
