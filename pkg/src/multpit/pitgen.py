"""Low-rank matrix hitting-set generator and the PIT procedures built on it.

The n variables of a circuit are arranged as a sqrt(n) x sqrt(n) matrix X
and replaced by X = Y Z with Y of shape sqrt(n) x r' and Z of shape
r' x sqrt(n).  Every coordinate of the substitution has degree two, so a
composed circuit of degree at most 2D is nonzero iff it is nonzero
somewhere on a grid with 2D+1 points per coordinate.
"""

from __future__ import annotations

import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Sequence

from .circuit import Circuit, CircuitBuilder, substitute
from .mmtensor import brank_lb_inverse
from .ring import DEFAULT_PRIME, Fp, check_prime, format_literal

DEFAULT_BUDGET = 10**8
GENERATOR_DEGREE = 2


class PITError(ValueError):
    pass


class BudgetExceeded(PITError):
    pass


def ceil_sqrt(n: int) -> int:
    r = isqrt(n)
    return r if r * r == n else r + 1


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    s: int
    sqrt_n: int
    k: int
    r: int
    rank_used: int
    seed_length: int
    generator_degree: int = GENERATOR_DEGREE

    @property
    def padded_n(self) -> int:
        return self.sqrt_n * self.sqrt_n

    @property
    def padding(self) -> int:
        return self.padded_n - self.n

    @property
    def nontrivial(self) -> bool:
        return self.seed_length < self.n

    @property
    def stated_bound(self) -> int:
        """8 sqrt(n) k, an upper estimate of the exact seed length."""
        return 8 * self.sqrt_n * self.k

    @property
    def effective_rank(self) -> int:
        return min(self.rank_used, self.sqrt_n)

    def lines(self) -> list[str]:
        return [
            f"n: {self.n}",
            f"padded_n: {self.padded_n}",
            f"sqrt_n: {self.sqrt_n}",
            f"s: {self.s}",
            f"k: {self.k}",
            f"r: {self.r}",
            f"rank_used: {self.rank_used}",
            f"effective_rank: {self.effective_rank}",
            f"seed_length: {self.seed_length}",
            f"stated_bound: {self.stated_bound}",
            f"generator_degree: {self.generator_degree}",
            f"nontrivial: {'true' if self.nontrivial else 'false'}",
        ]


def params_for(n: int, s: int) -> GeneratorParams:
    """k = brank_lb_inverse(6s+1), r = 4k, seed length 2 sqrt(n) (r-1)."""
    if n < 1:
        raise PITError("n must be positive")
    if s < 0:
        raise PITError("s must be nonnegative")
    sq = ceil_sqrt(n)
    k = brank_lb_inverse(6 * s + 1)
    r = 4 * k
    return GeneratorParams(n, s, sq, k, r, r - 1, 2 * sq * (r - 1))


# -- the generator ----------------------------------------------------------


def matrix_generator(sqrt_n: int, rank: int) -> list[Circuit]:
    """Coordinate circuits of X = Y Z, row-major in X.

    Fresh variables: Y (sqrt_n x rank, row-major) then Z (rank x sqrt_n,
    row-major).  Ranks above sqrt_n are clamped to sqrt_n.
    """
    if sqrt_n < 1:
        raise PITError("sqrt_n must be positive")
    if rank < 1:
        raise PITError("rank must be at least 1")
    rank = min(rank, sqrt_n)
    n_fresh = 2 * sqrt_n * rank
    z0 = sqrt_n * rank
    out = []
    for i in range(sqrt_n):
        for j in range(sqrt_n):
            b = CircuitBuilder(n_fresh)
            acc = None
            for t in range(rank):
                g = b.mul(b.input(i * rank + t), b.input(z0 + t * sqrt_n + j))
                acc = g if acc is None else b.add(acc, g)
            out.append(b.build([acc]))
    return out


def generator_point(sqrt_n: int, rank: int, seed_point: Sequence) -> list:
    """X = Y Z evaluated directly (row-major), for witnesses and tests."""
    rank = min(rank, sqrt_n)
    z0 = sqrt_n * rank
    out = []
    for i in range(sqrt_n):
        for j in range(sqrt_n):
            acc = 0
            for t in range(rank):
                acc = acc + seed_point[i * rank + t] * seed_point[z0 + t * sqrt_n + j]
            out.append(acc)
    return out


def compose_with_generator(c: Circuit, rank: int) -> Circuit:
    """c(YZ): variables beyond n in the padded square are dummies set to 0."""
    sq = ceil_sqrt(max(c.n_inputs, 1))
    if rank == 0:
        b = CircuitBuilder(0)
        zero = b.build([b.const(0)])
        return substitute(c, [zero] * c.n_inputs)
    gens = matrix_generator(sq, rank)
    return substitute(c, gens[:c.n_inputs])


# -- randomized test --------------------------------------------------------


def _nonzero(v) -> bool:
    return bool(v)


def _fmt_point(point) -> str:
    return ",".join(format_literal(x) for x in point)


@dataclass
class PITReport:
    verdict: str
    mode: str
    fields: dict = field(default_factory=dict)
    witness: list | None = None
    exit_code: int = 0

    def lines(self) -> list[str]:
        out = [f"mode: {self.mode}"]
        out += [f"{k}: {v}" for k, v in self.fields.items()]
        if self.witness is not None:
            out.append(f"witness: {_fmt_point(self.witness)}")
        out.append(f"verdict: {self.verdict}")
        return out


def random_point(seed: int, trial: int, n: int, p: int) -> list[Fp]:
    rng = random.Random(f"{seed}:{trial}")
    return [Fp(rng.randrange(p), p) for _ in range(n)]


def pit_randomized(c: Circuit, trials: int = 20, prime: int = DEFAULT_PRIME,
                   seed: int = 0) -> PITReport:
    """Schwartz-Zippel: evaluate at independent uniform points of F_p."""
    if trials < 1:
        raise PITError("trials must be at least 1")
    check_prime(prime)
    D = max(c.degree_bound(), default=0)
    if prime <= D:
        raise PITError(f"prime {prime} does not exceed the degree bound {D}")
    fields = {"prime": prime, "seed": seed, "trials": trials, "degree_bound": D}
    for t in range(trials):
        point = random_point(seed, t, c.n_inputs, prime)
        vals = c.eval(point)
        for o, v in enumerate(vals):
            if _nonzero(v):
                fields.update({"trial": t, "output": o, "value": format_literal(v)})
                return PITReport("NONZERO", "randomized", fields, point, 1)
    bound = Fraction(D, prime) ** trials
    fields["error_bound"] = f"(D/p)^trials = ({D}/{prime})^{trials}" if D else "0"
    fields["error_bound_log2"] = _log2_bound(bound)
    return PITReport("LIKELY_ZERO", "randomized", fields, None, 0)


def _log2_bound(q: Fraction) -> str:
    if q == 0:
        return "-inf"
    # floor of log2 is enough for a report
    return str(q.numerator.bit_length() - q.denominator.bit_length())


# -- deterministic test -----------------------------------------------------


def _grid_block(args):
    c, first, W, ell = args
    for rest in itertools.product(W, repeat=ell - 1):
        point = (first,) + rest
        for o, v in enumerate(c.eval(point)):
            if _nonzero(v):
                return list(point), o, format_literal(v)
    return None


def grid_search(c: Circuit, W: Sequence, jobs: int = 1):
    """First (lexicographic) point of W^ell where some output is nonzero."""
    ell = c.n_inputs
    if ell == 0:
        for o, v in enumerate(c.eval([])):
            if _nonzero(v):
                return [], o, format_literal(v)
        return None
    blocks = [(c, w, tuple(W), ell) for w in W]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for res in pool.map(_grid_block, blocks):
                if res is not None:
                    return res
        return None
    for blk in blocks:
        res = _grid_block(blk)
        if res is not None:
            return res
    return None


def pit_deterministic(c: Circuit, s_budget: int, mode: str = "grid", *,
                      rank: int | None = None, budget: int = DEFAULT_BUDGET,
                      trials: int = 20, prime: int = DEFAULT_PRIME, seed: int = 0,
                      jobs: int = 1) -> PITReport:
    """Compose with the generator, then decide on a grid (or test randomly).

    The grid W = {0, ..., 2D} uses D = degree bound of ``c``: the composed
    circuit has degree at most 2D, so 2D+1 points per coordinate suffice.
    """
    if mode not in ("grid", "compose_then_random"):
        raise PITError(f"unknown mode {mode!r}")
    s = c.mult_complexity()
    if s > s_budget:
        raise PITError(f"circuit has multiplicative complexity {s} > budget s={s_budget}")
    params = params_for(max(c.n_inputs, 1), s_budget)
    rank_used = params.effective_rank if rank is None else min(rank, params.sqrt_n)
    if rank_used < 1:
        raise PITError("rank must be at least 1")
    composed = compose_with_generator(c, rank_used)
    ell = composed.n_inputs
    D = max(c.degree_bound(), default=0)
    fields = {
        "n": c.n_inputs,
        "s": s,
        "s_budget": s_budget,
        "rank_used": rank_used,
        "seed_length": ell,
        "degree_bound": D,
        "composed_degree_bound": max(composed.degree_bound(), default=0),
    }
    if mode == "compose_then_random":
        rep = pit_randomized(composed, trials, prime, seed)
        rep.mode = "compose_then_random"
        rep.fields = {**fields, **rep.fields}
        return rep

    W = list(range(GENERATOR_DEGREE * D + 1))
    points = len(W) ** ell
    fields.update({"grid_size": len(W), "grid_points": points, "budget": budget})
    if points > budget:
        raise BudgetExceeded(f"grid has {points} points, budget is {budget}")
    res = grid_search(composed, W, jobs)
    if res is None:
        return PITReport("ZERO", "grid", fields, None, 0)
    point, o, value = res
    fields.update({"output": o, "value": value})
    return PITReport("NONZERO", "grid", fields, point, 1)


# -- determinantal ideal ----------------------------------------------------


def ideal_membership_probabilistic(c: Circuit, r: int, trials: int = 20,
                                   prime: int = DEFAULT_PRIME, seed: int = 0) -> PITReport:
    """Is c in the ideal of r x r minors?  Tests c(YZ) with inner dimension r-1.

    A nonzero value of c at a matrix of rank < r certifies non-membership.
    """
    if r < 1:
        raise PITError("r must be at least 1")
    sq = ceil_sqrt(max(c.n_inputs, 1))
    composed = compose_with_generator(c, r - 1)
    rep = pit_randomized(composed, trials, prime, seed)
    rep.mode = "ideal"
    rep.fields = {"n": c.n_inputs, "sqrt_n": sq, "r": r, "rank_used": min(r - 1, sq),
                  **rep.fields}
    if rep.verdict == "NONZERO":
        rep.verdict = "NOT_IN_IDEAL"
        if r > 1:
            X = generator_point(sq, r - 1, rep.witness)[:c.n_inputs]
            rep.fields["matrix_point"] = _fmt_point(X)
    else:
        rep.verdict = "IN_IDEAL_LIKELY"
    return rep

