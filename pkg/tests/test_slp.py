import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetweil.errors import (DomainError, NumericOverflowError, ParseError)
from jetweil.slp import (Node, PrimitiveKind, Program, RealSemantics,
                         eval_generic, eval_primal, parse_program,
                         pretty_print, random_program)

SQUARE = "input x\ny = mul x x\noutput y\n"
SIN_PROD = "input a b\nt = mul a b\ns = sin t\noutput s\n"


def test_parse_minimal():
    prog = parse_program(SQUARE)
    assert prog.n_inputs == 1
    assert prog.n_nodes == 1
    assert prog.outputs == (1,)


def test_parse_two_node():
    prog = parse_program(SIN_PROD)
    assert prog.n_inputs == 2
    assert prog.n_nodes == 2
    assert prog.nodes[1].op is PrimitiveKind.SIN


def test_parse_comments_and_blank_lines():
    text = "# header\ninput x\n\n# mid\ny = sin x  # trailing\noutput y\n"
    prog = parse_program(text)
    assert prog.n_nodes == 1


@pytest.mark.parametrize("text,fragment", [
    ("output z", "must start with an 'input'"),
    ("input x\noutput z", "undefined name 'z'"),
    ("input x\ny = frob x\noutput y", "unknown primitive"),
    ("input x\ny = mul x\noutput y", "expects 2 operands"),
    ("input x\nx = sin x\noutput x", "duplicate name"),
    ("input x\ny = sin z\noutput y", "undefined name 'z'"),
    ("input x\ny = const nope\noutput y", "numeric literal"),
    ("", "empty program"),
    ("input x\ny = sin x", "must end with an 'output'"),
])
def test_parse_diagnostics(text, fragment):
    with pytest.raises(ParseError) as exc:
        parse_program(text)
    assert fragment in str(exc.value)


def test_parse_error_carries_line():
    with pytest.raises(ParseError) as exc:
        parse_program("input x\ny = mul x\noutput y")
    assert exc.value.line == 2


def test_div_desugars_to_recip_mul():
    prog = parse_program("input a b\nq = div a b\noutput q")
    ops = [n.op for n in prog.nodes]
    assert ops == [PrimitiveKind.RECIP, PrimitiveKind.MUL]
    assert eval_primal(prog, [6.0, 3.0]) == [2.0]


def test_const_and_pow_payloads():
    prog = parse_program("input x\nc = const 2.5\ny = pow x 3\nz = mul c y\n"
                         "output z")
    assert prog.nodes[0].const == 2.5
    assert prog.nodes[1].const == 3.0
    assert eval_primal(prog, [2.0]) == [20.0]


def test_roundtrip_identity():
    for text in (SQUARE, SIN_PROD,
                 "input a b\nq = div a b\nr = tanh q\noutput r q\n"):
        prog = parse_program(text)
        assert parse_program(pretty_print(prog)) == prog


def test_eval_primal_examples():
    assert eval_primal(parse_program(SQUARE), [3.0]) == [9.0]
    out = eval_primal(parse_program(SIN_PROD), [1.0, math.pi])
    assert abs(out[0]) < 1e-15


def test_eval_primal_domain_error_names_node():
    prog = parse_program("input x\na = neg x\nb = log a\noutput b")
    with pytest.raises(DomainError) as exc:
        eval_primal(prog, [1.0])
    assert exc.value.node == 1


def test_eval_primal_overflow():
    prog = parse_program("input x\na = exp x\nb = exp a\nc = exp b\noutput c")
    with pytest.raises(NumericOverflowError) as exc:
        eval_primal(prog, [5.0])
    assert exc.value.node is not None


def test_eval_generic_matches_primal():
    rng = random.Random(3)
    sem = RealSemantics()
    for i in range(200):
        prog = random_program(seed=i, depth=rng.randint(1, 30),
                              n_inputs=rng.randint(1, 5))
        x = [rng.uniform(-1, 1) for _ in range(prog.n_inputs)]
        assert eval_generic(prog, x, sem) == eval_primal(prog, x)


def test_empty_program_identity():
    prog = Program(n_inputs=2, nodes=(), outputs=(0, 1))
    assert eval_primal(prog, [4.0, 5.0]) == [4.0, 5.0]


def test_program_validation():
    with pytest.raises(ValueError):
        Program(n_inputs=1, nodes=(Node(PrimitiveKind.SIN, (1,)),),
                outputs=(1,))
    with pytest.raises(ValueError):
        Program(n_inputs=1, nodes=(), outputs=(5,))
    with pytest.raises(ValueError):
        Program(n_inputs=1,
                nodes=(Node(PrimitiveKind.DIV, (0, 0)),), outputs=(1,))


def test_node_arity_checked():
    with pytest.raises(ValueError):
        Node(PrimitiveKind.ADD, (0,))


def test_random_program_deterministic():
    a = random_program(seed=11, depth=20, n_inputs=3)
    b = random_program(seed=11, depth=20, n_inputs=3)
    assert a == b
    assert a != random_program(seed=12, depth=20, n_inputs=3)


def test_random_program_depth_one():
    prog = random_program(seed=0, depth=1, n_inputs=2)
    assert prog.n_nodes >= 1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), depth=st.integers(1, 40),
       n=st.integers(1, 6), point=st.integers(0, 10 ** 6))
def test_safe_programs_never_raise(seed, depth, n, point):
    prog = random_program(seed=seed, depth=depth, n_inputs=n)
    rng = random.Random(point)
    x = [rng.uniform(-1, 1) for _ in range(n)]
    eval_primal(prog, x)  # must not raise


def test_safe_fuzz_ten_thousand_evals():
    rng = random.Random(99)
    evals = 0
    while evals < 10 ** 4:
        prog = random_program(seed=rng.randrange(10 ** 9),
                              depth=rng.randint(1, 30),
                              n_inputs=rng.randint(1, 6))
        for _ in range(10):
            x = [rng.uniform(-1, 1) for _ in range(prog.n_inputs)]
            eval_primal(prog, x)
            evals += 1
