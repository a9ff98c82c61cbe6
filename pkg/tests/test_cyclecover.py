import itertools
import random
from fractions import Fraction

import pytest

from multpit.cyclecover import (
    MinorSequence, ProjectionError, berkowitz_det, build_m, build_m_prime,
    det_cycle_cover_reference, leading_minors, minor_det, projection_scaling,
    verify_projection_identity, verify_projection_symbolic,
)
from multpit.ring import EpsSeries, Fp

from oracles import P, fp_point, permutation_det

EPS = EpsSeries([0, 1])


def dense(Mx, values):
    """The evaluated matrix as eps-series entries (K=2)."""
    out = [[EpsSeries([0, 0]) for _ in range(Mx.size)] for _ in range(Mx.size)]
    for (i, j), e in Mx.entries.items():
        if e.is_var:
            out[i][j] = EpsSeries([e.coef * values[e.var], 0])
        else:
            out[i][j] = EpsSeries.constant(e.const, 2) if not isinstance(e.const, EpsSeries) else e.const
    return out


def test_minor_sequence():
    assert MinorSequence((5, 5, 3)).multiplicities(4) == {4: 2, 3: 1}
    with pytest.raises(ProjectionError):
        MinorSequence((3, 4))
    with pytest.raises(ProjectionError):
        MinorSequence(())
    with pytest.raises(ProjectionError):
        MinorSequence((2, 0))


def test_build_m_prime_small():
    Mx = build_m_prime((1, 1))
    assert Mx.size == 2
    for x in (Fraction(4), Fraction(-3, 2)):
        assert det_cycle_cover_reference(dense(Mx, [x])) == EpsSeries([1, -x])
    Mx = build_m_prime((1, 1, 1))
    assert det_cycle_cover_reference(dense(Mx, [Fraction(2), Fraction(5)])) == EpsSeries([1, 10])
    with pytest.raises(ProjectionError):
        build_m_prime((1, 2))
    with pytest.raises(ProjectionError):
        build_m_prime((2,))


def test_m_prime_block_structure():
    dims = (2, 3, 1, 2)
    Mx = build_m_prime(dims)
    N = sum(dims)
    off = [0, 2, 5, 6]
    for i in range(N):
        for j in range(N):
            e = Mx.entry(i, j)
            bi = max(b for b in range(4) if off[b] <= i)
            bj = max(b for b in range(4) if off[b] <= j)
            if i == j:
                assert e.const == 1
            elif bj == bi + 1 and bi < 3:
                assert e.is_var and e.coef == 1
            elif bi == 3 and bj == 0 and i - off[3] == j:
                assert e.const == EPS
            else:
                assert e is None


def test_det_m_prime_is_one_minus_trace_at_m3():
    rng = random.Random(0)
    Mx = build_m_prime((2, 2, 2, 2))
    for _ in range(20):
        vals = fp_point(rng, Mx.n_vars)
        X, Y, Z = ([vals[4 * t:4 * t + 4][2 * i:2 * i + 2] for i in range(2)] for t in range(3))
        XY = [[X[i][0] * Y[0][j] + X[i][1] * Y[1][j] for j in range(2)] for i in range(2)]
        tr = sum((XY[i][0] * Z[0][i] + XY[i][1] * Z[1][i] for i in range(2)), Fp(0, P))
        assert minor_det(Mx, 8, vals) == EpsSeries([Fp(1, P), -tr])


def test_entry_discipline():
    for dims in [(1, 1), (2, 3, 2), (3, 1, 2, 3), (1, 2, 2, 2, 1)]:
        N = sum(dims)
        for sigma in [(N,), (N, N), (N + 2, N - 1)]:
            Mx = build_m(dims, sigma)
            for e in Mx.entries.values():
                if e.is_var:
                    assert e.const is None and isinstance(e.coef, Fraction)
                else:
                    assert isinstance(e.const, (Fraction, EpsSeries))
            for i in range(N, Mx.size):
                for j in range(Mx.size):
                    e = Mx.entry(i, j)
                    assert (e is not None and e.const == 1) if i == j else e is None


def test_scaling_matrix():
    assert projection_scaling((1, 1, 1), MinorSequence((3,))) == (1,)
    assert projection_scaling((1, 1, 1), MinorSequence((3, 3))) == (Fraction(1, 2),)
    assert projection_scaling((2, 2, 2, 2), MinorSequence((8, 7))) == (Fraction(1, 2), 1)
    assert projection_scaling((2, 2, 2, 2), MinorSequence((9, 8, 7, 5))) == (Fraction(1, 3), Fraction(1, 2))


def test_build_m_examples():
    for sigma in [(3,), (3, 3)]:
        rep = verify_projection_symbolic((1, 1, 1), sigma)
        assert rep.passed, (rep.product, rep.expected)
    assert verify_projection_identity((2, 2, 2, 2), (8, 7), 100).passed
    with pytest.raises(ProjectionError):
        build_m((2, 2, 2), (5,))


def test_minor_det_examples():
    rng = random.Random(1)
    Mx = build_m_prime((1, 1))
    assert minor_det(Mx, 2, [4]) == EpsSeries([1, -4])
    for dims in [(2, 2, 2, 2), (3, 1, 3)]:
        Mx = build_m(dims, (sum(dims),))
        vals = fp_point(rng, Mx.n_vars)
        assert minor_det(Mx, 1, vals) == 1
        for k in range(1, sum(dims) - dims[0] + 1):
            assert minor_det(Mx, k, vals) == EpsSeries([Fp(1, P), Fp(0, P)])
    with pytest.raises(ProjectionError):
        minor_det(Mx, 0, vals)
    with pytest.raises(ProjectionError):
        minor_det(Mx, 2, vals[:-1])


def test_leading_minors_block_formula():
    # size N - n1 + l minor equals 1 + (-1)^m eps tr((X1...Xm)[:l, :l]) for M'
    rng = random.Random(2)
    dims = (3, 2, 3)
    Mx = build_m_prime(dims)
    vals = fp_point(rng, Mx.n_vars)
    X = [vals[2 * i:2 * i + 2] for i in range(3)]
    Y = [vals[6 + 3 * i:9 + 3 * i] for i in range(2)]
    Pm = [[X[i][0] * Y[0][j] + X[i][1] * Y[1][j] for j in range(3)] for i in range(3)]
    for ell in range(1, 4):
        k = sum(dims) - 3 + ell
        partial = sum((Pm[i][i] for i in range(ell)), Fp(0, P))
        assert minor_det(Mx, k, vals) == EpsSeries([Fp(1, P), partial])


def test_main_identity_small_sweep():
    for m in range(1, 4):
        for head in itertools.product(range(1, 3), repeat=m):
            dims = head + (head[0],)
            N = sum(dims)
            for sigma in [(N,), (N, N), (N, N, N - 1), (N + 2,)]:
                rep = verify_projection_identity(dims, sigma, 20, seed=7)
                assert rep.passed and rep.failures == 0, (dims, sigma, rep.counterexample)
                assert rep.max_k == sigma[0]


def test_symbolic_cases():
    for dims in [(1, 1), (1, 1, 1), (2, 2), (1, 2, 1), (1, 1, 1, 1)]:
        N = sum(dims)
        for sigma in [(N,), (N, N), (N, N, N - 1), (N + 2,)]:
            assert verify_projection_symbolic(dims, sigma).passed
    with pytest.raises(ProjectionError):
        verify_projection_symbolic((2, 2, 2), (6,))


def test_adversarial_variants_fail():
    rep = verify_projection_identity((2, 2, 2, 2), (8, 8), 10, scale=False)
    assert not rep.passed and rep.failures == 10
    got, want = rep.counterexample["got"], rep.counterexample["expected"]
    assert got[0] == 1 and got[1] == 2 * want[1] % P

    # the opposite sign gives -tr
    rep = verify_projection_identity((2, 2, 2, 2), (8,), 10, sign=1)
    got, want = rep.counterexample["got"], rep.counterexample["expected"]
    assert got[1] == -want[1] % P
    assert not verify_projection_symbolic((1, 1), (2,), sign=1).passed


def test_trials_independent_of_jobs():
    a = verify_projection_identity((2, 2, 2, 2), (8, 8), 12, seed=5, scale=False)
    b = verify_projection_identity((2, 2, 2, 2), (8, 8), 12, seed=5, scale=False, jobs=3)
    assert a == b


def test_higher_truncation_order():
    rep = verify_projection_identity((2, 1, 2), (5, 4), 20, K=4)
    assert rep.passed
    with pytest.raises(ProjectionError):
        verify_projection_identity((1, 1), (2,), 5, K=1)


def test_cycle_cover_examples():
    one, zero = Fraction(1), Fraction(0)
    I3 = [[one if i == j else zero for j in range(3)] for i in range(3)]
    assert det_cycle_cover_reference(I3) == 1
    assert det_cycle_cover_reference([[zero, one], [one, zero]]) == -1
    with pytest.raises(ValueError):
        det_cycle_cover_reference([[one] * 7 for _ in range(7)])


def test_berkowitz_matches_leibniz():
    rng = random.Random(3)
    for n in range(1, 7):
        for _ in range(5):
            M = [[Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(n)] for _ in range(n)]
            assert berkowitz_det(M) == permutation_det(M)


def test_oracle_agreement_q_and_eps3():
    rng = random.Random(4)
    for _ in range(100):
        n = rng.randint(1, 5)
        Mq = [[Fraction(rng.randint(-9, 9), rng.randint(1, 4)) if rng.random() < 0.8 else Fraction(0)
               for _ in range(n)] for _ in range(n)]
        assert det_cycle_cover_reference(Mq) == berkowitz_det(Mq)
        Me = [[EpsSeries([Fp(rng.randrange(P), P) for _ in range(3)]) for _ in range(n)]
              for _ in range(n)]
        assert det_cycle_cover_reference(Me) == berkowitz_det(Me)


def test_leading_minors_all_sizes():
    rng = random.Random(9)
    n = 6
    M = [[Fraction(rng.randint(-4, 4)) for _ in range(n)] for _ in range(n)]
    rows = [{j: [M[i][j]] for j in range(n) if M[i][j] != 0} for i in range(n)]
    dets = leading_minors(rows, n, 1)
    for k in range(1, n + 1):
        got = dets[k - 1][0] or 0
        assert got == permutation_det([r[:k] for r in M[:k]])
