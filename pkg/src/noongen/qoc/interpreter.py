"""Execution of ``.qoc`` programs on :class:`~noongen.fock.StateVector` inputs.

Each statement maps onto one optics operation.  ``detect m -> x`` counts the
photons in mode ``m``, stores the count in register ``x`` and leaves the mode
in vacuum at the same index, so later statements may reuse it as an ancilla.
When a branch finishes, every measured mode that is still empty is removed.

Execution is organised as a tree whose nodes sit just before a detection; a
node is identified by the counts observed so far, which fixes its state.
Exhaustive mode walks the whole tree; sampled mode walks one root-to-leaf
path per shot and memoises expanded nodes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .. import optics
from ..errors import ContractViolation, NoonGenError
from ..fock import StateVector, drop_mode, attach_vacuum
from . import ast as A

_FUNCS = {
    "arccos": math.acos,
    "arcsin": math.asin,
    "arctan": math.atan,
    "cos": math.cos,
    "sin": math.sin,
    "tan": math.tan,
    "sqrt": math.sqrt,
}
_COMPARE = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


class QocRuntimeError(NoonGenError):
    """Evaluation failed; ``registers`` holds the assignment that caused it."""

    def __init__(self, message, registers=None, span=None):
        self.registers = dict(registers or {})
        self.span = span
        where = "" if span is None else f"line {span.line}, column {span.column}: "
        regs = ", ".join(f"{k}={v}" for k, v in sorted(self.registers.items()))
        super().__init__(f"{where}{message}" + (f" [registers: {regs}]" if regs else ""))


@dataclass(frozen=True)
class ProgramBranch:
    registers: dict
    probability: float
    state: StateVector
    discarded: bool
    path: tuple = field(default=(), compare=False)
    shots: int = None

    def to_json_dict(self, include_state=True):
        out = {
            "registers": dict(sorted(self.registers.items())),
            "probability": self.probability,
            "discarded": self.discarded,
        }
        if self.shots is not None:
            out["shots"] = self.shots
        if include_state:
            out["state"] = self.state.to_json_dict()
        return out


def evaluate(expr, env, registers=None):
    """Evaluate an expression to a finite float or raise :class:`QocRuntimeError`."""
    try:
        value = _eval(expr, env)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise QocRuntimeError(f"cannot evaluate {A.format_expr(expr)}: {exc}", registers, expr.span) from None
    if not math.isfinite(value):
        raise QocRuntimeError(f"{A.format_expr(expr)} is not finite", registers, expr.span)
    return value


def _eval(e, env):
    if isinstance(e, A.Num):
        return e.value
    if isinstance(e, A.Name):
        if e.id == "pi":
            return math.pi
        return float(env[e.id])
    if isinstance(e, A.Unary):
        return -_eval(e.operand, env)
    if isinstance(e, A.BinOp):
        a, b = _eval(e.left, env), _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    if isinstance(e, A.Call):
        return float(_FUNCS[e.func](_eval(e.arg, env)))
    raise TypeError(f"not an expression: {e!r}")


def _condition(cond, env, registers):
    left = evaluate(cond.left, env, registers)
    right = evaluate(cond.right, env, registers)
    return _COMPARE[cond.op](left, right)


def _reset_mode(state, mode):
    occ = state.occupations.copy()
    occ[:, mode] = 0
    return StateVector(occ, state.amplitudes, state.mode_count)


@dataclass
class _Node:
    frames: tuple  # ((statements, next_index), ...), innermost last
    registers: dict
    state: StateVector
    measured: frozenset
    probability: float
    path: tuple
    discarded: bool = False
    pending: A.Detect = None  # detection this node waits on; None for a leaf


class _Machine:
    def __init__(self, program, params, min_probability):
        self.program = program
        self.params = params
        self.min_probability = min_probability

    def env(self, node):
        return {**self.params, **node.registers}

    def advance(self, node):
        """Run deterministic statements until a detection, discard or the end."""
        frames = list(node.frames)
        state = node.state
        while frames:
            stmts, idx = frames[-1]
            if idx >= len(stmts):
                frames.pop()
                continue
            frames[-1] = (stmts, idx + 1)
            st = stmts[idx]
            if isinstance(st, A.Detect):
                node.frames, node.state, node.pending = tuple(frames), state, st
                return node
            state = self.step(st, state, node, frames)
            if node.discarded:
                break
        node.frames, node.state, node.pending = (), state, None
        return node

    def step(self, st, state, node, frames):
        regs = node.registers
        if isinstance(st, A.BS):
            env = self.env(node)
            gamma = evaluate(st.gamma, env, regs)
            chi = 0.0 if st.chi is None else evaluate(st.chi, env, regs)
            try:
                params = optics.BeamSplitterParams(gamma, chi, (st.mode_a, st.mode_b))
            except ContractViolation as exc:
                raise QocRuntimeError(str(exc), regs, st.span) from None
            return optics.apply_beam_splitter(state, params)
        if isinstance(st, A.PS):
            chi = evaluate(st.chi, self.env(node), regs)
            return optics.phase_shift(state, chi, st.mode)
        if isinstance(st, A.Vacuum):
            return attach_vacuum(state, st.count)
        if isinstance(st, A.If):
            if _condition(st.cond, self.env(node), regs):
                frames.append((st.body, 0))
            elif st.orelse:
                frames.append((st.orelse, 0))
            return state
        if isinstance(st, A.DiscardIf):
            if _condition(st.cond, self.env(node), regs):
                node.discarded = True
            return state
        if isinstance(st, A.Unreachable):
            raise QocRuntimeError("unreachable statement reached", regs, st.span)
        raise TypeError(f"unknown statement {st!r}")

    def children(self, node):
        st = node.pending
        kids = []
        for o in optics.measure_number(node.state, st.mode, self.min_probability):
            kid = _Node(
                frames=node.frames,
                registers={**node.registers, st.register: o.count},
                state=_reset_mode(o.post_state, st.mode),
                measured=node.measured | {st.mode},
                probability=node.probability * o.probability,
                path=node.path + (o.count,),
            )
            kids.append(self.advance(kid))
        return kids

    def finish(self, node, shots=None, probability=None):
        state = node.state
        for mode in sorted(node.measured, reverse=True):
            if state.mode_count > 1 and not (len(state) and state.occupations[:, mode].any()):
                state = drop_mode(state, mode)
        return ProgramBranch(
            registers=dict(node.registers),
            probability=node.probability if probability is None else probability,
            state=state,
            discarded=node.discarded,
            path=node.path,
            shots=shots,
        )


def _detect_count(stmts):
    total = 0
    for st in stmts:
        if isinstance(st, A.Detect):
            total += 1
        elif isinstance(st, A.If):
            total += max(_detect_count(st.body), _detect_count(st.orelse or ()))
    return total


def _check_params(program, params):
    params = dict(params or {})
    missing = [p for p in program.params if p not in params]
    extra = [p for p in params if p not in program.params]
    if missing or extra:
        raise ContractViolation(f"parameter mismatch: missing {missing}, unexpected {extra}")
    out = {}
    for k, v in params.items():
        v = float(v)
        if not math.isfinite(v):
            raise ContractViolation(f"parameter {k} must be finite")
        out[k] = v
    return out


def interpret(
    program,
    state,
    mode="exhaustive",
    params=None,
    seed=0,
    shots=10_000,
    min_probability=optics.MIN_OUTCOME_PROBABILITY,
):
    """Run ``program`` on ``state``.

    Returns :class:`ProgramBranch` objects sorted by the sequence of observed
    counts.  In ``"exhaustive"`` mode each terminal branch carries its exact
    probability.  In ``"sampled"`` mode shot ``i`` uses row ``i`` of a
    ``(shots, detections)`` uniform table drawn from ``default_rng(seed)``;
    branches report observed frequencies and shot counts.
    """
    if state.mode_count != program.mode_count:
        raise ContractViolation(
            f"program expects {program.mode_count} modes, input has {state.mode_count}"
        )
    if mode not in ("exhaustive", "sampled"):
        raise ContractViolation(f"unknown mode {mode!r}")
    machine = _Machine(program, _check_params(program, params), min_probability)
    root = machine.advance(_Node(((program.statements, 0),), {}, state, frozenset(), 1.0, ()))

    if mode == "exhaustive":
        leaves = []
        stack = [root]
        while stack:
            node = stack.pop()
            if node.pending is None:
                leaves.append(node)
            else:
                stack.extend(machine.children(node))
        leaves.sort(key=lambda n: n.path)
        return [machine.finish(n) for n in leaves]

    if shots < 1:
        raise ContractViolation("shots must be >= 1")
    depth = max(1, _detect_count(program.statements))
    draws = np.random.default_rng(seed).random((shots, depth))
    expanded = {}
    counts = {}
    for row in draws:
        node = root
        k = 0
        while node.pending is not None:
            if node.path not in expanded:
                kids = machine.children(node)
                cdf = np.cumsum([kid.probability for kid in kids])
                expanded[node.path] = (kids, cdf / cdf[-1])
            kids, cdf = expanded[node.path]
            j = min(int(np.searchsorted(cdf, row[k], side="right")), len(kids) - 1)
            node = kids[j]
            k += 1
        hit = counts.setdefault(node.path, [node, 0])
        hit[1] += 1
    out = [machine.finish(n, shots=c, probability=c / shots) for n, c in counts.values()]
    out.sort(key=lambda b: b.path)
    return out
