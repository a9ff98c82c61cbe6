import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multpit.circuit import (
    Add, Circuit, CircuitBuilder, CircuitError, Input, Mul, baur_strassen,
    combine_outputs, constant_circuit, degree_bound, evaluate, mult_complexity, power_sum,
    substitute, validate,
)
from multpit.mmtensor import decomposition_to_circuit, strassen_decomposition
from multpit.pitgen import matrix_generator
from multpit.ring import EpsSeries, Fp, RingError, to_field

from oracles import P, dual_gradient, fp_point, interpolated_degree, random_circuit


def xy():
    return Circuit(2, (Input(0), Input(1), Mul(0, 1)), (2,))


def square_of_sum():
    return Circuit(2, (Input(0), Input(1), Add(0, 1), Mul(2, 2)), (3,))


def test_validate():
    assert validate(Circuit(1, (Input(0),), (0,))) is None
    assert "g0" in validate(Circuit(1, (Add(0, 1),), (0,)))
    assert validate(Circuit(1, (Input(0),), (3,))) is not None
    assert validate(Circuit(1, (Input(2),), (0,))) is not None
    assert validate(Circuit(1, (Input(0),), ())) is not None
    with pytest.raises(CircuitError):
        Circuit(1, (Input(0),), (3,)).check()


def test_eval_examples():
    assert evaluate(xy(), [3, 5]) == [15]
    b = CircuitBuilder(1)
    x = b.input(0)
    e = b.const(EpsSeries([0, 1]))
    c = b.build([b.add(x, b.mul(e, x))])
    assert c.eval([EpsSeries([2, 0])]) == [EpsSeries([2, 2])]
    assert evaluate(square_of_sum(), [1, 2]) == [9]


def test_eval_arity_and_ring_checks():
    with pytest.raises(CircuitError):
        xy().eval([1])
    with pytest.raises(RingError):
        xy().eval([Fp(1, 7), Fp(1, 11)])
    with pytest.raises(RingError):
        xy().eval([Fp(1, 7), EpsSeries([1, 0])])


def test_edge_scalars():
    c = Circuit(2, (Input(0), Input(1), Add(0, 1, 2, Fraction(-1, 2)), Mul(2, 0, 3, 1)), (3,))
    assert c.eval([Fraction(1), Fraction(4)]) == [0]
    assert c.eval([Fraction(2), Fraction(2)]) == [3 * 3 * 2]


def test_mult_complexity_examples():
    c = Circuit(2, (Input(0), Input(1), Add(0, 1)), (2,))
    assert mult_complexity(c) == 0
    assert mult_complexity(decomposition_to_circuit(strassen_decomposition())) == 7
    assert mult_complexity(power_sum(4, 8)) == 3


def test_degree_bound_examples():
    assert degree_bound(xy()) == [2]
    b = CircuitBuilder(1)
    x1 = b.add(b.input(0), b.const(1))
    sq = b.mul(x1, x1)
    assert degree_bound(b.build([b.mul(sq, sq)])) == [4]
    assert degree_bound(constant_circuit(5)) == [0]


def test_power_sum():
    assert power_sum(2, 2).eval([1, 1]) == [4]
    assert power_sum(3, 5).eval([1, 1, 1]) == [243]
    for d in range(1, 40):
        c = power_sum(2, d)
        assert c.mult_complexity() <= 2 * (d.bit_length() - 1)
        assert c.eval([1, 2]) == [3 ** d]
    with pytest.raises(CircuitError):
        power_sum(3, 0)


def test_baur_strassen_examples():
    g = baur_strassen(xy())
    rng = random.Random(1)
    for _ in range(20):
        x, y = fp_point(rng, 2)
        assert g.eval([x, y]) == [x * y, y, x]
    assert baur_strassen(square_of_sum()).eval([1, 2]) == [9, 6, 6]
    assert baur_strassen(power_sum(3, 4)).eval([1, 1, 1]) == [81, 108, 108, 108]
    with pytest.raises(CircuitError):
        baur_strassen(Circuit(1, (Input(0),), (0, 0)))


def test_baur_strassen_unused_variable():
    c = Circuit(3, (Input(0), Input(2), Mul(0, 1)), (2,))
    assert baur_strassen(c).eval([2, 7, 5]) == [10, 5, 0, 2]


def test_baur_strassen_random_against_dual_numbers():
    rng = random.Random(2024)
    for _ in range(50):
        n = rng.randint(1, 10)
        c = random_circuit(rng, n, rng.randint(n + 1, 30))
        g = baur_strassen(c)
        assert g.mult_complexity() <= 3 * c.mult_complexity()
        for _ in range(20):
            pt = fp_point(rng, n)
            vals = g.eval(pt)
            assert vals[0] == c.eval(pt)[0]
            assert vals[1:] == dual_gradient(c, pt)


def test_baur_strassen_eps_edges():
    # circuits over F(eps) differentiate coefficientwise
    eps = EpsSeries([0, 1])
    c = Circuit(2, (Input(0), Input(1), Mul(0, 1, eps, 1), Mul(2, 0)), (3,))
    g = baur_strassen(c)
    pt = [EpsSeries([Fp(3, P), 0]), EpsSeries([Fp(5, P), 0])]
    f, dx, dy = g.eval(pt)
    assert f == EpsSeries([0, Fp(45, P)])
    assert dx == EpsSeries([0, Fp(30, P)])
    assert dy == EpsSeries([0, Fp(9, P)])


def test_substitute_examples():
    x2 = Circuit(1, (Input(0), Mul(0, 0)), (1,))
    y_plus_z = Circuit(2, (Input(0), Input(1), Add(0, 1)), (2,))
    assert substitute(x2, [y_plus_z]).eval([1, 2]) == [9]
    ident = [Circuit(3, (Input(i),), (0,)) for i in range(3)]
    c = power_sum(3, 3)
    assert substitute(c, ident).eval([1, 2, 4]) == c.eval([1, 2, 4])
    with pytest.raises(CircuitError):
        substitute(c, ident[:2])
    with pytest.raises(CircuitError):
        substitute(xy(), [Circuit(1, (Input(0),), (0,)), Circuit(2, (Input(0),), (0,))])


def test_substitute_generator_into_determinant():
    b = CircuitBuilder(4)
    x = [b.input(i) for i in range(4)]
    det = b.build([b.add(b.mul(x[0], x[3]), b.mul(x[1], x[2]), 1, -1)])
    composed = substitute(det, matrix_generator(2, 1))
    rng = random.Random(3)
    for _ in range(100):
        assert composed.eval(fp_point(rng, composed.n_inputs)) == [0]


def test_substitute_bounds_and_functoriality():
    rng = random.Random(5)
    for _ in range(20):
        c = random_circuit(rng, 3, 12)
        subs = [random_circuit(rng, 2, 6) for _ in range(3)]
        comp = substitute(c, subs)
        assert comp.mult_complexity() <= c.mult_complexity() + sum(s.mult_complexity() for s in subs)
        ident = [Circuit(3, (Input(i),), (0,)) for i in range(3)]
        twice = substitute(substitute(c, ident), subs)
        for _ in range(5):
            q = fp_point(rng, 2)
            inner = [s.eval(q)[0] for s in subs]
            assert comp.eval(q) == c.eval(inner) == twice.eval(q)


def test_q_matches_fp_for_integer_circuits():
    rng = random.Random(8)
    for _ in range(30):
        c = random_circuit(rng, 4, 15, scalars=(1, -1, 2, 3))
        pt = [rng.randint(-5, 5) for _ in range(4)]
        q = c.eval(pt)[0]
        assert to_field(q, P) == c.eval([Fp(v, P) for v in pt])[0]


def test_degree_bound_never_underestimates():
    rng = random.Random(11)
    checked = 0
    while checked < 40:
        n = rng.randint(1, 3)
        c = random_circuit(rng, n, rng.randint(n + 1, 9), max_degree=4,
                           scalars=(1, -1, 2))
        bound = degree_bound(c)[0]
        assert interpolated_degree(c) <= bound
        checked += 1
    # cancellation makes the bound strict
    b = CircuitBuilder(1)
    x = b.input(0)
    sq = b.mul(x, x)
    c = b.build([b.add(sq, sq, 1, -1)])
    assert interpolated_degree(c) == -1 and degree_bound(c) == [2]


def test_combine_outputs():
    c = combine_outputs(power_sum(2, 2), power_sum(2, 2))
    assert c.eval([3, 4]) == [0]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 64), st.lists(st.integers(-4, 4), min_size=5, max_size=5))
def test_power_sum_property(n, d, vals):
    c = power_sum(n, d)
    assert c.eval(vals[:n]) == [sum(vals[:n]) ** d]
    assert c.degree_bound() == [d]
