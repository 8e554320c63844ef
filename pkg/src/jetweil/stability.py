"""Multiplicative backward-stability accounting for reverse sweeps.

Each sweep step gets an adjoint-Lipschitz constant and a relative-error
term derived from the primitive's condition number at the recorded primal;
their product bounds the computed pullback norm.  Fan-out is counted as an
explicit duplication step of norm sqrt(r), which is what makes the product
inequality literally checkable on arbitrary DAGs.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .modes import record_tape, reverse_sweep
from .slp import Node, PrimitiveKind, Program

UNIT_ROUNDOFF = 2.0 ** -53
KAPPA_CAP = 1.0 / UNIT_ROUNDOFF


def adjoint_lipschitz(node: Node, primal_operands: Sequence[float]) -> float:
    """Operator norm of the primitive's local adjoint map at the primal."""
    op = node.op
    if op in (PrimitiveKind.ADD, PrimitiveKind.SUB):
        return math.sqrt(2.0)
    if op is PrimitiveKind.MUL:
        a, b = primal_operands
        return math.hypot(a, b)
    if op is PrimitiveKind.CONST:
        return 0.0
    if op is PrimitiveKind.NEG:
        return 1.0
    a = primal_operands[0]
    if op is PrimitiveKind.EXP:
        return math.exp(a)
    if op is PrimitiveKind.LOG:
        return 1.0 / abs(a)
    if op is PrimitiveKind.SIN:
        return abs(math.cos(a))
    if op is PrimitiveKind.COS:
        return abs(math.sin(a))
    if op is PrimitiveKind.TANH:
        t = math.tanh(a)
        return abs(1.0 - t * t)
    if op is PrimitiveKind.SQRT:
        return 0.5 / math.sqrt(a)
    if op is PrimitiveKind.RECIP:
        return 1.0 / (a * a)
    if op is PrimitiveKind.POW_CONST:
        e = node.const
        return abs(e) * abs(a) ** (e - 1) if a != 0 or e >= 1 else KAPPA_CAP
    raise ValueError(f"no adjoint norm for {op}")


def condition_estimate(node: Node,
                       primal_operands: Sequence[float]) -> tuple[float, bool]:
    """Relative condition number of the primitive; (value, capped-flag)."""
    op = node.op
    if op in (PrimitiveKind.MUL, PrimitiveKind.RECIP, PrimitiveKind.NEG):
        return 1.0, False
    if op is PrimitiveKind.CONST:
        return 0.0, False
    if op in (PrimitiveKind.ADD, PrimitiveKind.SUB):
        a, b = primal_operands
        s = a + b if op is PrimitiveKind.ADD else a - b
        num = abs(a) + abs(b)
        if s == 0:
            return (KAPPA_CAP, True) if num > 0 else (1.0, False)
        return min(num / abs(s), KAPPA_CAP), num / abs(s) >= KAPPA_CAP
    a = primal_operands[0]
    if op is PrimitiveKind.EXP:
        return abs(a), False
    if op is PrimitiveKind.SQRT:
        return 0.5, False
    if op is PrimitiveKind.POW_CONST:
        return abs(node.const), False
    # generic |a * phi'(a) / phi(a)| with a documented cap at singular primals
    if op is PrimitiveKind.LOG:
        la = math.log(a)
        if la == 0:
            return KAPPA_CAP, True
        return min(abs(1.0 / la), KAPPA_CAP), abs(1.0 / la) >= KAPPA_CAP
    if op is PrimitiveKind.SIN:
        s, c = math.sin(a), math.cos(a)
        if s == 0:
            return (1.0, False) if a == 0 else (KAPPA_CAP, True)
        k = abs(a * c / s)
        return min(k, KAPPA_CAP), k >= KAPPA_CAP
    if op is PrimitiveKind.COS:
        s, c = math.sin(a), math.cos(a)
        if c == 0:
            return KAPPA_CAP, True
        k = abs(a * s / c)
        return min(k, KAPPA_CAP), k >= KAPPA_CAP
    if op is PrimitiveKind.TANH:
        if a == 0:
            return 1.0, False
        t = math.tanh(a)
        k = abs(a * (1.0 - t * t) / t)
        return min(k, KAPPA_CAP), k >= KAPPA_CAP
    raise ValueError(f"no condition rule for {op}")


@dataclass(frozen=True)
class StabilityRow:
    kind: str              # "primitive" or "fan"
    node: int | None       # node index, or duplicated slot for fan rows
    lipschitz: float       # effective step constant entering the product
    local_norm: float      # raw local adjoint norm (primitive rows)
    kappa: float
    delta: float
    capped: bool


@dataclass(frozen=True)
class StabilityReport:
    rows: tuple[StabilityRow, ...]
    product_bound: float
    observed_norm: float
    first_order_error: float

    def to_json_dict(self) -> dict:
        return {
            "rows": [{"kind": r.kind, "node": r.node,
                      "lipschitz": r.lipschitz, "local_norm": r.local_norm,
                      "kappa": r.kappa, "delta": r.delta, "capped": r.capped}
                     for r in self.rows],
            "product_bound": self.product_bound,
            "observed_norm": self.observed_norm,
            "first_order_error": self.first_order_error,
        }


def _fanout_counts(prog: Program) -> Counter:
    uses: Counter = Counter()
    for node in prog.nodes:
        for r in node.operands:
            uses[r] += 1
    for r in prog.outputs:
        uses[r] += 1
    return uses


def stability_bound(prog: Program, x: Sequence[float],
                    omega: Sequence[float], delta_const: float = 4.0,
                    force_zero_delta: bool = False) -> StabilityReport:
    """Run a reverse sweep and assemble the multiplicative norm bound.

    Each primitive contributes max(local adjoint norm, 1): the sweep step
    acts as identity on every other live adjoint, so sub-unit local norms
    cannot shrink the whole state.  Each slot read r >= 2 times contributes
    a duplication step of norm sqrt(r).
    """
    tape = record_tape(prog, x)
    grad = reverse_sweep(tape, omega)
    observed = float(np.linalg.norm(grad))

    rows: list[StabilityRow] = []
    product = 1.0
    delta_sum = 0.0
    for k in range(prog.n_nodes - 1, -1, -1):
        node = prog.nodes[k]
        args = [tape.primals[r] for r in node.operands]
        local = adjoint_lipschitz(node, args)
        kappa, capped = condition_estimate(node, args)
        delta = 0.0 if force_zero_delta else delta_const * UNIT_ROUNDOFF * kappa
        eff = max(local, 1.0) if node.op is not PrimitiveKind.CONST else 1.0
        product *= (1.0 + delta) * eff
        delta_sum += delta
        rows.append(StabilityRow(kind="primitive", node=k, lipschitz=eff,
                                 local_norm=local, kappa=kappa, delta=delta,
                                 capped=capped))
    for slot, count in sorted(_fanout_counts(prog).items()):
        if count < 2:
            continue
        delta = 0.0 if force_zero_delta else delta_const * UNIT_ROUNDOFF
        eff = math.sqrt(count)
        product *= (1.0 + delta) * eff
        delta_sum += delta
        rows.append(StabilityRow(kind="fan", node=slot, lipschitz=eff,
                                 local_norm=eff, kappa=1.0, delta=delta,
                                 capped=False))
    bound = product * float(np.linalg.norm(omega))
    return StabilityReport(rows=tuple(rows), product_bound=bound,
                           observed_norm=observed,
                           first_order_error=delta_sum)
