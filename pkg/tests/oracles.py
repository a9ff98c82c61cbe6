"""Independent reference computations and random instance generators for tests."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from multpit.abp import AffineForm, TraceABP
from multpit.circuit import CircuitBuilder
from multpit.ring import EpsSeries, Fp

P = (1 << 61) - 1


def random_circuit(rng: random.Random, n_vars: int, n_gates: int, *, max_degree: int | None = None,
                   scalars=(1, -1, 2, 3, Fraction(1, 2), Fraction(-2, 3))):
    """Random single-output circuit whose output is the last gate."""
    b = CircuitBuilder(n_vars)
    pool = [b.input(v) for v in range(n_vars)]
    deg = {g: 1 for g in pool}
    if rng.random() < 0.3:
        g = b.const(rng.choice(scalars))
        pool.append(g)
        deg[g] = 0
    ops = 0
    while len(b.gates) < n_gates or ops == 0:
        l, r = rng.choice(pool), rng.choice(pool)
        a, c = rng.choice(scalars), rng.choice(scalars)
        if rng.random() < 0.5:
            d = deg[l] + deg[r]
            if max_degree is not None and d > max_degree:
                continue
            g = b.mul(l, r, a, c)
        else:
            d = max(deg[l], deg[r])
            g = b.add(l, r, a, c)
        deg[g] = d
        pool.append(g)
        ops += 1
    return b.build([len(b.gates) - 1])


def dual_gradient(c, point):
    """Forward-mode derivatives: evaluate with x_i -> x_i + eps, one i at a time."""
    grads = []
    for i in range(c.n_inputs):
        pt = [EpsSeries([x, Fp(1 if j == i else 0, x.modulus)]) for j, x in enumerate(point)]
        v = c.eval(pt)[0]
        grads.append(v.coeff(1) if isinstance(v, EpsSeries) else v * 0)
    return grads


def forward_differences(values: dict, n: int, size: int) -> dict:
    """Multivariate forward differences Delta^k f(0) from values on {0..size-1}^n."""
    table = dict(values)
    for axis in range(n):
        for step in range(1, size):
            new = dict(table)
            for idx in table:
                if idx[axis] >= step:
                    prev = list(idx)
                    prev[axis] -= 1
                    new[idx] = table[idx] - table[tuple(prev)]
            table = new
    return table


def interpolated_degree(c, grid: int = 7) -> int:
    """True total degree of a single-output circuit over Q (per-variable degree < grid).

    In the binomial basis prod C(x_i, k_i) the coefficients are the forward
    differences at 0, and the largest |k| with a nonzero coefficient is the
    total degree.
    """
    n = c.n_inputs
    values = {idx: Fraction(c.eval(list(idx))[0]) for idx in itertools.product(range(grid), repeat=n)}
    diffs = forward_differences(values, n, grid)
    degs = [sum(k) for k, v in diffs.items() if v != 0]
    return max(degs, default=-1)


def random_trace_abp(rng: random.Random, k_max: int = 3, m_max: int = 4, n_vars: int = 6) -> TraceABP:
    m = rng.randint(1, m_max)
    n1 = rng.randint(1, k_max)
    dims = [n1] + [rng.randint(1, k_max) for _ in range(m - 1)] + [n1]
    mats = []
    for a, b in zip(dims, dims[1:]):
        M = []
        for _ in range(a):
            row = []
            for _ in range(b):
                terms = {v: rng.randint(-3, 3) for v in rng.sample(range(n_vars), rng.randint(0, 2))}
                row.append(AffineForm.make(rng.randint(-2, 2), terms))
            M.append(row)
        mats.append(M)
    return TraceABP(tuple(dims), mats, n_vars)


def fp_point(rng: random.Random, n: int, p: int = P) -> list:
    return [Fp(rng.randrange(p), p) for _ in range(n)]


def permutation_det(M):
    """Leibniz formula with the sign from inversion counting."""
    n = len(M)
    total = 0
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = 1
        for i in range(n):
            term = term * M[i][perm[i]]
        total = total + (-term if inv % 2 else term)
    return total


def minors(M, r: int):
    n = len(M)
    for rows in itertools.combinations(range(n), r):
        for cols in itertools.combinations(range(n), r):
            yield [[M[i][j] for j in cols] for i in rows]
