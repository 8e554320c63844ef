import math
import random

import numpy as np
import pytest

from jetweil import instrument
from jetweil.errors import DimensionMismatchError
from jetweil.modes import (Tape, compose_programs, compose_vjp_check,
                           eval_dual, jvp, pairing_residual, record_tape,
                           reverse_sweep, vjp)
from jetweil.slp import Program, parse_program, random_program

PROD = parse_program("input a b\nt = mul a b\noutput t")
IDENTITY = Program(n_inputs=2, nodes=(), outputs=(0, 1))


def test_jvp_product_example():
    assert jvp(PROD, [3.0, 5.0], [1.0, 0.0]) == [5.0]
    assert jvp(PROD, [3.0, 5.0], [0.0, 1.0]) == [3.0]


def test_jvp_identity():
    assert jvp(IDENTITY, [1.0, 2.0], [0.25, -4.0]) == [0.25, -4.0]


def test_jvp_sin_at_zero():
    prog = parse_program("input x\ny = sin x\noutput y")
    assert jvp(prog, [0.0], [1.0]) == [1.0]


def test_vjp_product_example():
    assert vjp(PROD, [3.0, 5.0], [1.0]) == [5.0, 3.0]


def test_vjp_identity():
    assert vjp(IDENTITY, [1.0, 2.0], [0.5, 0.25]) == [0.5, 0.25]


def test_vjp_square():
    prog = parse_program("input x\ny = mul x x\noutput y")
    assert vjp(prog, [3.0], [1.0]) == [6.0]


def test_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        jvp(PROD, [1.0], [1.0, 2.0])
    with pytest.raises(DimensionMismatchError):
        vjp(PROD, [1.0, 2.0], [1.0, 2.0])


def test_pairing_zero_tangent():
    assert pairing_residual(PROD, [3.0, 5.0], [0.0, 0.0], [1.0]) == 0.0


def test_pairing_linear_program():
    prog = parse_program("input a b c\ns = add a b\nt = sub s c\n"
                         "u = neg b\noutput t u")
    rng = random.Random(0)
    for _ in range(20):
        x = [rng.uniform(-1, 1) for _ in range(3)]
        v = [rng.uniform(-1, 1) for _ in range(3)]
        w = [rng.uniform(-1, 1) for _ in range(2)]
        assert pairing_residual(prog, x, v, w) <= 1e-13


def test_tape_shape_and_counter():
    instrument.reset()
    tape = record_tape(PROD, [3.0, 5.0])
    assert len(tape.primals) == PROD.n_slots
    assert instrument.snapshot()["tape_allocations"] == 1
    assert all(a == 0.0 for a in tape.adjoints)
    reverse_sweep(tape, [1.0])
    tape.reset()
    assert all(a == 0.0 for a in tape.adjoints)


def test_eval_dual_returns_outputs_too():
    y, dy = eval_dual(PROD, [3.0, 5.0], [1.0, 1.0])
    assert y == [15.0]
    assert dy == [8.0]


def test_compose_identity():
    prog = parse_program("input x\ny = sin x\noutput y")
    ident = Program(n_inputs=1, nodes=(), outputs=(0,))
    composed = compose_programs(prog, ident)
    assert vjp(composed, [0.3], [1.0]) == vjp(prog, [0.3], [1.0])
    assert compose_vjp_check(ident, ident, [0.4], [1.0]) == 0.0


def test_compose_square_then_sin():
    f = parse_program("input x\ny = mul x x\noutput y")
    g = parse_program("input y\nz = sin y\noutput z")
    gap = compose_vjp_check(f, g, [1.0], [1.0])
    assert gap <= 1e-13
    composed = compose_programs(f, g)
    grad = vjp(composed, [1.0], [1.0])[0]
    assert abs(grad - 2.0 * math.cos(1.0)) < 1e-14


def test_compose_arity_mismatch():
    g = parse_program("input a b\nt = mul a b\noutput t")
    f = parse_program("input x\ny = sin x\noutput y")
    with pytest.raises(DimensionMismatchError):
        compose_programs(f, g)


def test_gradient_against_central_differences():
    rng = random.Random(5)
    h = 1e-5
    for i in range(50):
        prog = random_program(seed=500 + i, depth=rng.randint(1, 20),
                              n_inputs=rng.randint(1, 4))
        x = [rng.uniform(-1, 1) for _ in range(prog.n_inputs)]
        grad = vjp(prog, x, [1.0])
        from jetweil.slp import eval_primal
        for j in range(prog.n_inputs):
            xp = list(x)
            xm = list(x)
            xp[j] += h
            xm[j] -= h
            fd = (eval_primal(prog, xp)[0] - eval_primal(prog, xm)[0]) / (2 * h)
            assert abs(fd - grad[j]) / max(1.0, abs(grad[j])) <= 1e-6


def test_duality_fuzz():
    rng = random.Random(21)
    worst = 0.0
    for i in range(300):
        prog = random_program(seed=7000 + i, depth=rng.randint(1, 50),
                              n_inputs=rng.randint(1, 8))
        x = [rng.uniform(-1, 1) for _ in range(prog.n_inputs)]
        v = [rng.uniform(-1, 1) for _ in range(prog.n_inputs)]
        w = [rng.uniform(-1, 1)]
        worst = max(worst, pairing_residual(prog, x, v, w))
    assert worst <= 1e-10


def test_functoriality_fuzz():
    rng = random.Random(22)
    worst = 0.0
    for i in range(150):
        f = random_program(seed=8000 + i, depth=rng.randint(1, 25),
                           n_inputs=rng.randint(1, 4))
        g = random_program(seed=9000 + i, depth=rng.randint(1, 25),
                           n_inputs=1)
        x = [rng.uniform(-1, 1) for _ in range(f.n_inputs)]
        worst = max(worst, compose_vjp_check(f, g, x, [1.0]))
    assert worst <= 1e-10
