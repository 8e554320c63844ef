"""First-order forward (pushforward) and reverse (pullback) engines.

Forward mode propagates value/tangent pairs through the program; reverse
mode records primal intermediates on a tape and accumulates adjoints along
a reverse sweep.  ``pairing_residual`` probes the duality between the two,
``compose_vjp_check`` probes functoriality under syntactic composition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import instrument
from .errors import DimensionMismatchError, DomainError
from .slp import ARITY, Node, PrimitiveKind, Program, eval_primal


def local_partials(node: Node, args: Sequence[float]) -> tuple[float, ...]:
    """Value-level partial derivatives of one primitive at its operands."""
    op = node.op
    if op is PrimitiveKind.ADD:
        return (1.0, 1.0)
    if op is PrimitiveKind.SUB:
        return (1.0, -1.0)
    if op is PrimitiveKind.MUL:
        return (args[1], args[0])
    if op is PrimitiveKind.NEG:
        return (-1.0,)
    if op is PrimitiveKind.EXP:
        return (math.exp(args[0]),)
    if op is PrimitiveKind.LOG:
        if args[0] <= 0:
            raise DomainError("log requires a positive argument", args[0])
        return (1.0 / args[0],)
    if op is PrimitiveKind.SIN:
        return (math.cos(args[0]),)
    if op is PrimitiveKind.COS:
        return (-math.sin(args[0]),)
    if op is PrimitiveKind.TANH:
        t = math.tanh(args[0])
        return (1.0 - t * t,)
    if op is PrimitiveKind.SQRT:
        if args[0] <= 0:
            raise DomainError("sqrt derivative needs a positive argument", args[0])
        return (0.5 / math.sqrt(args[0]),)
    if op is PrimitiveKind.RECIP:
        if args[0] == 0:
            raise DomainError("reciprocal of zero", args[0])
        return (-1.0 / (args[0] * args[0]),)
    if op is PrimitiveKind.POW_CONST:
        e = node.const
        a = args[0]
        if e == 0:
            return (0.0,)
        if a == 0 and e < 1:
            raise DomainError("power derivative singular at zero", a)
        return (e * a ** (e - 1),)
    raise ValueError(f"no derivative rule for {op}")


def _forward_primal(prog: Program, x: Sequence[float]) -> list[float]:
    if len(x) != prog.n_inputs:
        raise DimensionMismatchError(
            f"program takes {prog.n_inputs} inputs, got {len(x)}")
    slots = [float(v) for v in x]
    sem_args = slots  # alias for readability
    for k, node in enumerate(prog.nodes):
        if node.op is PrimitiveKind.CONST:
            slots.append(node.const)
            continue
        args = [sem_args[r] for r in node.operands]
        try:
            slots.append(_apply_value(node, args))
        except DomainError as err:
            err.node = k
            raise
    return slots


def _apply_value(node: Node, args: Sequence[float]) -> float:
    op = node.op
    if op is PrimitiveKind.ADD:
        return args[0] + args[1]
    if op is PrimitiveKind.SUB:
        return args[0] - args[1]
    if op is PrimitiveKind.MUL:
        return args[0] * args[1]
    if op is PrimitiveKind.NEG:
        return -args[0]
    if op is PrimitiveKind.EXP:
        return math.exp(args[0])
    if op is PrimitiveKind.LOG:
        if args[0] <= 0:
            raise DomainError("log requires a positive argument", args[0])
        return math.log(args[0])
    if op is PrimitiveKind.SIN:
        return math.sin(args[0])
    if op is PrimitiveKind.COS:
        return math.cos(args[0])
    if op is PrimitiveKind.TANH:
        return math.tanh(args[0])
    if op is PrimitiveKind.SQRT:
        if args[0] < 0:
            raise DomainError("sqrt of a negative argument", args[0])
        return math.sqrt(args[0])
    if op is PrimitiveKind.RECIP:
        if args[0] == 0:
            raise DomainError("reciprocal of zero", args[0])
        return 1.0 / args[0]
    if op is PrimitiveKind.POW_CONST:
        return args[0] ** node.const
    raise ValueError(f"unhandled primitive {op}")


def eval_dual(prog: Program, x: Sequence[float],
              v: Sequence[float]) -> tuple[list[float], list[float]]:
    """One forward sweep with a single tangent; returns (outputs, tangents)."""
    if len(x) != prog.n_inputs or len(v) != prog.n_inputs:
        raise DimensionMismatchError("point/tangent length mismatch")
    vals = [float(a) for a in x]
    dots = [float(a) for a in v]
    for k, node in enumerate(prog.nodes):
        if node.op is PrimitiveKind.CONST:
            vals.append(node.const)
            dots.append(0.0)
            continue
        args = [vals[r] for r in node.operands]
        try:
            vals.append(_apply_value(node, args))
            parts = local_partials(node, args)
        except DomainError as err:
            err.node = k
            raise
        dots.append(sum(p * dots[r] for p, r in zip(parts, node.operands)))
    return ([vals[r] for r in prog.outputs],
            [dots[r] for r in prog.outputs])


def jvp(prog: Program, x: Sequence[float], v: Sequence[float]) -> list[float]:
    """Jacobian-vector product J_f(x) v without materializing the Jacobian."""
    return eval_dual(prog, x, v)[1]


@dataclass
class Tape:
    """Recorded primal intermediates plus one adjoint accumulator per slot."""

    program: Program
    primals: list[float]
    adjoints: list[float] = field(default_factory=list)

    def __post_init__(self):
        instrument.counters["tape_allocations"] += 1
        if not self.adjoints:
            self.adjoints = [0.0] * len(self.primals)

    def reset(self):
        for i in range(len(self.adjoints)):
            self.adjoints[i] = 0.0


def record_tape(prog: Program, x: Sequence[float]) -> Tape:
    return Tape(program=prog, primals=_forward_primal(prog, x))


def reverse_sweep(tape: Tape, omega: Sequence[float]) -> list[float]:
    """Accumulate adjoints from a seed covector; returns input adjoints."""
    prog = tape.program
    if len(omega) != prog.n_outputs:
        raise DimensionMismatchError(
            f"covector length {len(omega)} != {prog.n_outputs} outputs")
    adj = tape.adjoints
    for w, r in zip(omega, prog.outputs):
        adj[r] += float(w)
    for k in range(prog.n_nodes - 1, -1, -1):
        node = prog.nodes[k]
        u_bar = adj[prog.n_inputs + k]
        if node.op is PrimitiveKind.CONST:
            continue
        args = [tape.primals[r] for r in node.operands]
        parts = local_partials(node, args)
        for p, r in zip(parts, node.operands):
            adj[r] += p * u_bar
    return adj[:prog.n_inputs]


def vjp(prog: Program, x: Sequence[float],
        omega: Sequence[float]) -> list[float]:
    """Vector-Jacobian product J_f(x)^T omega via tape and reverse sweep."""
    tape = record_tape(prog, x)
    return reverse_sweep(tape, omega)


def pairing_residual(prog: Program, x: Sequence[float], v: Sequence[float],
                     omega: Sequence[float]) -> float:
    """Normalized defect of <J^T omega, v> == <omega, J v>."""
    forward = float(np.dot(omega, jvp(prog, x, v)))
    backward = float(np.dot(vjp(prog, x, omega), v))
    return abs(backward - forward) / max(1.0, abs(forward))


def compose_programs(f: Program, g: Program) -> Program:
    """Syntactic composition g(f(.)) by inlining f ahead of g."""
    if f.n_outputs != g.n_inputs:
        raise DimensionMismatchError(
            f"f has {f.n_outputs} outputs but g takes {g.n_inputs} inputs")

    def remap(ref: int) -> int:
        if ref < g.n_inputs:
            return f.outputs[ref]
        return f.n_slots + (ref - g.n_inputs)

    g_nodes = tuple(
        Node(n.op, tuple(remap(r) for r in n.operands), n.const)
        for n in g.nodes)
    return Program(n_inputs=f.n_inputs, nodes=f.nodes + g_nodes,
                   outputs=tuple(remap(r) for r in g.outputs))


def compose_vjp_check(f: Program, g: Program, x: Sequence[float],
                      omega: Sequence[float]) -> float:
    """Relative gap between pullback through g∘f and chained pullbacks."""
    composed = compose_programs(f, g)
    direct = np.asarray(vjp(composed, x, omega))
    y = eval_primal(f, x)
    chained = np.asarray(vjp(f, x, vjp(g, y, omega)))
    scale = max(1.0, float(np.linalg.norm(direct)))
    return float(np.linalg.norm(direct - chained)) / scale
