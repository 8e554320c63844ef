"""Lightweight global counters used by tests and the benchmark harness."""
from __future__ import annotations

counters: dict[str, int] = {
    "tape_allocations": 0,
    "lifted_primitives": 0,
}


def reset():
    for key in counters:
        counters[key] = 0


def snapshot() -> dict[str, int]:
    return dict(counters)
