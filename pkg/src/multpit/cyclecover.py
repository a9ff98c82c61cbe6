"""Principal-minor products that border-compute tr(X1 ... Xm).

For matrices of variables X1 (n1 x n2), ..., Xm (nm x n1) put
N = n1 + ... + nm + n1 and build the N x N block matrix

    [ I    X1                 ]
    [      I    X2            ]
    [           ...   ...     ]
    [                 I    Xm ]
    [ eps*I               I   ]

(the adjacency matrix of the layered trace ABP for tr(X1...Xm) with unit
self-loops and eps-weighted sink-to-source edges).  Its leading principal
minors of size N - n1 + l equal 1 + (-1)^m eps tr((X1...Xm)[:l, :l]) modulo
eps^2.  Rescaling the rows of X1 by a diagonal matrix determined by a
minor sequence sigma, with the sign (-1)^m folded in, makes

    prod_i det(M[:sigma_i, :sigma_i]) = 1 + eps tr(X1 ... Xm) + O(eps^2).

Determinants are computed with Berkowitz's algorithm, which needs no
division and is therefore sound over F[eps]/(eps^K).
"""

from __future__ import annotations

import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .poly import Poly
from .ring import DEFAULT_PRIME, EpsSeries, Fp, RingError, check_prime, reduce_rational

CYCLE_COVER_LIMIT = 6
SYMBOLIC_LIMIT = 4


class ProjectionError(ValueError):
    pass


# -- minor sequences and the structured matrix ------------------------------


@dataclass(frozen=True)
class MinorSequence:
    sigma: tuple

    def __post_init__(self):
        s = tuple(int(x) for x in self.sigma)
        if not s:
            raise ProjectionError("minor sequence is empty")
        if any(x < 1 for x in s):
            raise ProjectionError("minor sizes must be positive")
        if any(a < b for a, b in zip(s, s[1:])):
            raise ProjectionError(f"minor sequence {s} is not non-increasing")
        object.__setattr__(self, "sigma", s)

    def __iter__(self):
        return iter(self.sigma)

    def __len__(self):
        return len(self.sigma)

    @property
    def top(self) -> int:
        return self.sigma[0]

    def multiplicities(self, N: int) -> dict[int, int]:
        """a_k = number of sigma_j equal to k; sizes beyond N count as N."""
        out: dict[int, int] = {}
        for s in self.sigma:
            k = min(s, N)
            out[k] = out.get(k, 0) + 1
        return out


@dataclass(frozen=True)
class Entry:
    """Either a constant (rational or eps-series) or ``coef * x_var``."""

    const: Any = None
    coef: Fraction = Fraction(1)
    var: int | None = None

    @property
    def is_var(self) -> bool:
        return self.var is not None


@dataclass(frozen=True)
class ProjMatrix:
    size: int
    dims: tuple
    entries: dict = field(hash=False)  # (row, col) -> Entry, zeros omitted
    sign: int = 1
    scaling: tuple | None = None  # diagonal of the row rescaling of X1
    sigma: tuple | None = None

    @property
    def m(self) -> int:
        return len(self.dims) - 1

    @property
    def N(self) -> int:
        return sum(self.dims)

    @property
    def n_vars(self) -> int:
        return sum(a * b for a, b in zip(self.dims, self.dims[1:]))

    def var_offsets(self) -> list[int]:
        offs = [0]
        for a, b in zip(self.dims, self.dims[1:]):
            offs.append(offs[-1] + a * b)
        return offs

    def block_offsets(self) -> list[int]:
        offs = [0]
        for d in self.dims:
            offs.append(offs[-1] + d)
        return offs

    def entry(self, i: int, j: int) -> Entry | None:
        return self.entries.get((i, j))


def _check_dims(dims: Sequence[int]) -> tuple:
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2:
        raise ProjectionError("need at least two layer sizes (m >= 1)")
    if any(d < 1 for d in dims):
        raise ProjectionError("layer sizes must be positive")
    if dims[0] != dims[-1]:
        raise ProjectionError(
            f"dimension chain must close up: n1={dims[0]} but n_(m+1)={dims[-1]}")
    return dims


_EPS = EpsSeries([0, 1])


def build_m_prime(dims: Sequence[int], size: int | None = None) -> ProjMatrix:
    """Adjacency matrix of the trace ABP with self-loops and eps feedback edges."""
    dims = _check_dims(dims)
    N = sum(dims)
    size = N if size is None else size
    if size < N:
        raise ProjectionError(f"matrix size {size} is below N={N}")
    m = len(dims) - 1
    entries: dict = {}
    for i in range(size):
        entries[(i, i)] = Entry(const=Fraction(1))
    boff = [0]
    for d in dims:
        boff.append(boff[-1] + d)
    v = 0
    for t in range(m):
        for a in range(dims[t]):
            for c in range(dims[t + 1]):
                entries[(boff[t] + a, boff[t + 1] + c)] = Entry(var=v)
                v += 1
    for a in range(dims[0]):
        entries[(boff[m] + a, a)] = Entry(const=_EPS)
    return ProjMatrix(size, dims, entries)


def projection_scaling(dims: Sequence[int], sigma: MinorSequence) -> tuple:
    """Diagonal of the row rescaling applied to X1.

    Entry i (0-based) is 1 / sum_{l > i} a_{N - n1 + l}: the number of minors
    in the product whose leading block contains sink t_i.
    """
    dims = _check_dims(dims)
    N, n1 = sum(dims), dims[0]
    a = sigma.multiplicities(N)
    out = []
    for i in range(1, n1 + 1):
        denom = sum(a.get(N - n1 + l, 0) for l in range(i, n1 + 1))
        assert denom >= 1, "a_N >= 1 whenever sigma_1 >= N"
        out.append(Fraction(1, denom))
    return tuple(out)


def build_m(dims: Sequence[int], sigma: Sequence[int] | MinorSequence, *,
            scale: bool = True, sign: int | None = None) -> ProjMatrix:
    """The matrix whose sigma-minor product is 1 + eps tr(X1...Xm) + O(eps^2).

    ``scale=False`` skips the diagonal rescaling and ``sign`` overrides the
    sign folded into X1; both exist to exhibit what breaks without them.
    """
    dims = _check_dims(dims)
    sigma = sigma if isinstance(sigma, MinorSequence) else MinorSequence(tuple(sigma))
    N, m = sum(dims), len(dims) - 1
    if sigma.top < N:
        raise ProjectionError(f"sigma_1={sigma.top} is below N={N}")
    if sign is None:
        sign = -1 if m % 2 else 1
    scaling = projection_scaling(dims, sigma) if scale else (Fraction(1),) * dims[0]
    base = build_m_prime(dims, sigma.top)
    entries = dict(base.entries)
    for a in range(dims[0]):
        for c in range(dims[1]):
            key = (a, dims[0] + c)
            e = entries[key]
            entries[key] = Entry(coef=e.coef * sign * scaling[a], var=e.var)
    return ProjMatrix(sigma.top, dims, entries, sign,
                      scaling if scale else None, sigma.sigma)


# -- Berkowitz over truncated series ----------------------------------------
#
# A series is a list of K slots; a slot is None (structural zero) or a value
# supporting + - * (int mod p, Fraction, Poly, or a numpy object array that
# carries one value per independent trial).


def _mod(x, p):
    if x is None or p is None:
        return x
    return x % p


def _smul(x, y, K, p):
    out = [None] * K
    for i in range(K):
        xi = x[i]
        if xi is None:
            continue
        for j in range(K - i):
            yj = y[j]
            if yj is None:
                continue
            t = xi * yj
            o = out[i + j]
            out[i + j] = t if o is None else o + t
    if p is not None:
        out = [None if o is None else o % p for o in out]
    return out


def _sacc(acc, x, y, K):
    """acc += x*y in place, without reduction."""
    for i in range(K):
        xi = x[i]
        if xi is None:
            continue
        for j in range(K - i):
            yj = y[j]
            if yj is None:
                continue
            t = xi * yj
            o = acc[i + j]
            acc[i + j] = t if o is None else o + t


def _sneg(x):
    return [None if s is None else -s for s in x]


def _smodl(x, p):
    if p is None:
        return x
    return [None if s is None else s % p for s in x]


def _is_none(x) -> bool:
    return all(s is None for s in x)


def leading_minors(rows: Sequence[dict], n: int, K: int, p: int | None = None) -> list:
    """Determinants of the leading k x k blocks, k = 1..n (Berkowitz).

    ``rows[i]`` maps column index to a series; absent entries are zero.
    The characteristic polynomial of each leading block is obtained from
    the previous one by a Toeplitz product, so all leading minors come out
    of a single pass.
    """
    one = [1] + [None] * (K - 1)
    chi = [one]
    dets = []
    for k in range(n):
        row = rows[k]
        diag = row.get(k)
        r = [(j, x) for j, x in row.items() if j < k]
        col = {i: rows[i][k] for i in range(k) if k in rows[i]} if r else {}
        if not col:
            new = [list(c) for c in chi] + [[None] * K]
            if diag is not None:
                nd = _sneg(diag)
                for i in range(k + 1):
                    _sacc(new[i + 1], nd, chi[i], K)
                new = [_smodl(c, p) for c in new]
        else:
            t = [one, _sneg(diag) if diag is not None else [None] * K]
            v = [col.get(i) for i in range(k)]
            sub = [[(j, x) for j, x in rows[i].items() if j < k] for i in range(k)]
            for it in range(k):
                s = [None] * K
                for j, x in r:
                    if v[j] is not None:
                        _sacc(s, x, v[j], K)
                t.append(_smodl(_sneg(s), p))
                if it == k - 1:
                    break
                nv = []
                for ent in sub:
                    s = [None] * K
                    for j, x in ent:
                        if v[j] is not None:
                            _sacc(s, x, v[j], K)
                    nv.append(None if _is_none(s) else _smodl(s, p))
                v = nv
            new = [[None] * K for _ in range(k + 2)]
            for d, td in enumerate(t):
                if _is_none(td):
                    continue
                for i in range(max(0, d - 0), min(k + 1 + d, k + 2)):
                    j = i - d
                    if 0 <= j <= k:
                        _sacc(new[i], td, chi[j], K)
            new = [_smodl(c, p) for c in new]
        chi = new
        last = chi[-1]
        det = last if (k + 1) % 2 == 0 else _sneg(last)
        dets.append(_smodl(det, p))
    return dets


def _series_slots(x, K: int, p: int | None):
    """Scalar or EpsSeries -> K slots (ints mod p when p is given)."""
    cs = x.coeffs if isinstance(x, EpsSeries) else (x,)
    out = []
    for j in range(K):
        c = cs[j] if j < len(cs) else 0
        if c == 0:
            out.append(None)
        elif p is None:
            out.append(c)
        elif isinstance(c, Fp):
            if c.modulus != p:
                raise RingError(f"modulus mismatch: {c.modulus} vs {p}")
            out.append(c.value)
        else:
            out.append(reduce_rational(c, p))
    return out


def _slots_to_series(slots, p: int | None, zero=Fraction(0)) -> EpsSeries:
    if p is None:
        return EpsSeries([zero if s is None else s for s in slots])
    return EpsSeries([Fp(0 if s is None else s, p) for s in slots])


def _ring_of(values) -> tuple[int, int | None]:
    """(K, modulus) for a collection of scalars / series."""
    K, p = 1, None
    for x in values:
        if isinstance(x, EpsSeries):
            K = max(K, x.K)
            cs = x.coeffs
        else:
            cs = (x,)
        for c in cs:
            if isinstance(c, Fp):
                if p is not None and p != c.modulus:
                    raise RingError("mixed moduli")
                p = c.modulus
    return K, p


def berkowitz_det(matrix: Sequence[Sequence]):
    """Division-free determinant of a square matrix of scalars or eps-series."""
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("matrix is not square")
    if n == 0:
        return Fraction(1)
    flat = [x for row in matrix for x in row]
    K, p = _ring_of(flat)
    series = any(isinstance(x, EpsSeries) for x in flat)
    rows = []
    for row in matrix:
        d = {}
        for j, x in enumerate(row):
            s = _series_slots(x, K, p)
            if not _is_none(s):
                d[j] = s
        rows.append(d)
    det = leading_minors(rows, n, K, p)[-1]
    out = _slots_to_series(det, p)
    return out if series else out.coeffs[0]


def det_cycle_cover_reference(matrix: Sequence[Sequence]):
    """Determinant as a signed sum over cycle covers (factorial time).

    A cycle cover is a permutation split into cycles; its sign is
    (-1)^(number of even-length cycles).
    """
    k = len(matrix)
    if k > CYCLE_COVER_LIMIT:
        raise ValueError(f"cycle-cover expansion limited to k <= {CYCLE_COVER_LIMIT}")
    if any(len(row) != k for row in matrix):
        raise ValueError("matrix is not square")
    total = None
    for perm in itertools.permutations(range(k)):
        weight = None
        for i in range(k):
            x = matrix[i][perm[i]]
            if x == 0:
                weight = None
                break
            weight = x if weight is None else weight * x
        else:
            if k == 0:
                weight = Fraction(1)
        if weight is None:
            continue
        if _even_cycles(perm) % 2:
            weight = -weight
        total = weight if total is None else total + weight
    if total is None:
        sample = matrix[0][0] if k else Fraction(0)
        return sample * 0 if k else Fraction(1)
    return total


def _even_cycles(perm) -> int:
    seen = [False] * len(perm)
    even = 0
    for s in range(len(perm)):
        if seen[s]:
            continue
        length = 0
        i = s
        while not seen[i]:
            seen[i] = True
            i = perm[i]
            length += 1
        if length % 2 == 0:
            even += 1
    return even


# -- evaluation of the structured matrix ------------------------------------


def _rows_at(Mx: ProjMatrix, values: Sequence, k: int, K: int, p: int | None) -> list[dict]:
    rows: list[dict] = [dict() for _ in range(k)]
    for (i, j), e in Mx.entries.items():
        if i >= k or j >= k:
            continue
        if e.is_var:
            c = e.coef
            if p is None:
                val = c * values[e.var]
            else:
                val = reduce_rational(c, p) * values[e.var] % p
            slots = [val] + [None] * (K - 1)
        else:
            slots = _series_slots(e.const, K, p)
            if _is_none(slots):
                continue
        rows[i][j] = slots
    return rows


def minor_det(Mx: ProjMatrix, k: int, assignment: Sequence, K: int = 2) -> EpsSeries:
    """det of the leading k x k block of Mx evaluated at ``assignment``."""
    if not 1 <= k <= Mx.size:
        raise ProjectionError(f"minor size {k} outside 1..{Mx.size}")
    if len(assignment) != Mx.n_vars:
        raise ProjectionError(
            f"assignment has {len(assignment)} values, matrix uses {Mx.n_vars}")
    _, p = _ring_of(assignment)
    if p is None:
        values = [Fraction(x) if isinstance(x, int) else x for x in assignment]
    else:
        values = [x.value if isinstance(x, Fp) else reduce_rational(x, p) for x in assignment]
    rows = _rows_at(Mx, values, k, K, p)
    return _slots_to_series(leading_minors(rows, k, K, p)[-1], p)


# -- verification -----------------------------------------------------------


@dataclass
class ProjectionReport:
    dims: tuple
    sigma: tuple
    trials: int
    prime: int
    seed: int
    K: int
    passed: bool
    failures: int
    max_k: int
    scaling: tuple | None
    sign: int
    counterexample: dict | None = None

    def lines(self) -> list[str]:
        out = [
            f"dims: {','.join(map(str, self.dims))}",
            f"sigma: {','.join(map(str, self.sigma))}",
            f"N: {sum(self.dims)}",
            f"trials: {self.trials}",
            f"prime: {self.prime}",
            f"seed: {self.seed}",
            f"K: {self.K}",
            f"max_k: {self.max_k}",
            f"sign: {self.sign:+d}",
            "scaling: " + (",".join(_fmt(q) for q in self.scaling) if self.scaling else "none"),
            f"failures: {self.failures}",
            f"result: {'pass' if self.passed else 'fail'}",
        ]
        if self.counterexample:
            ce = self.counterexample
            out.append(f"counterexample_trial: {ce['trial']}")
            out.append("counterexample_assignment: " + ",".join(map(str, ce["assignment"])))
            out.append(f"counterexample_got: {ce['got'][0]};{ce['got'][1]}")
            out.append(f"counterexample_expected: {ce['expected'][0]};{ce['expected'][1]}")
        return out


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def trial_assignment(seed: int, trial: int, n_vars: int, p: int) -> list[int]:
    """The uniform F_p assignment used by a given trial (its own RNG stream)."""
    rng = random.Random(f"{seed}:{trial}")
    return [rng.randrange(p) for _ in range(n_vars)]


def _trace_lanes(dims, values, p):
    """tr(X1 ... Xm) from the raw assignment, by direct matrix products."""
    mats = []
    v = 0
    for a, b in zip(dims, dims[1:]):
        M = []
        for _ in range(a):
            M.append(values[v:v + b])
            v += b
        mats.append(M)
    P = mats[0]
    for M in mats[1:]:
        P = [[sum(P[i][t] * M[t][j] for t in range(len(M))) % p
              for j in range(len(M[0]))] for i in range(len(P))]
    return sum(P[i][i] for i in range(len(P))) % p


def _run_trials(Mx: ProjMatrix, trial_ids: Sequence[int], seed: int, p: int, K: int):
    """(per-trial c0, per-trial c1, per-trial trace) for the given trials."""
    T = len(trial_ids)
    draws = [trial_assignment(seed, t, Mx.n_vars, p) for t in trial_ids]
    lanes = [np.array([draws[t][v] for t in range(T)], dtype=object)
             for v in range(Mx.n_vars)]
    rows = _rows_at(Mx, lanes, Mx.size, K, p)
    dets = leading_minors(rows, Mx.size, K, p)
    prod = [1] + [None] * (K - 1)
    for s in Mx.sigma:
        prod = _smul(prod, dets[s - 1], K, p)
    trace = _trace_lanes(Mx.dims, lanes, p)

    def lane(x, t):
        if x is None:
            return 0
        return int(x[t]) if isinstance(x, np.ndarray) else int(x) % p

    c0 = [lane(prod[0], t) for t in range(T)]
    c1 = [lane(prod[1] if K > 1 else None, t) for t in range(T)]
    tr = [lane(trace, t) for t in range(T)]
    return c0, c1, tr, draws


def _chunk_worker(args):
    Mx, ids, seed, p, K = args
    return _run_trials(Mx, ids, seed, p, K)


def verify_projection_identity(dims: Sequence[int], sigma: Sequence[int], trials: int = 100,
                               prime: int = DEFAULT_PRIME, seed: int = 0, *, K: int = 2,
                               jobs: int = 1, scale: bool = True,
                               sign: int | None = None) -> ProjectionReport:
    """Check prod_i det(M[:sigma_i, :sigma_i]) == 1 + eps tr(X1...Xm) mod eps^2
    at ``trials`` independent uniform points of F_p.

    Trials are evaluated together, one numpy object lane per trial; every
    trial draws from its own RNG stream so the outcome does not depend on
    ``jobs``.
    """
    if trials < 1:
        raise ProjectionError("trials must be at least 1")
    if K < 2:
        raise ProjectionError("the identity is read off the eps^1 coefficient; need K >= 2")
    check_prime(prime)
    Mx = build_m(dims, sigma, scale=scale, sign=sign)
    ids = list(range(trials))
    if jobs > 1 and trials > 1:
        chunks = [ids[i::jobs] for i in range(jobs) if ids[i::jobs]]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_chunk_worker, [(Mx, c, seed, prime, K) for c in chunks]))
        merged: dict[int, tuple] = {}
        for chunk, (c0, c1, tr, draws) in zip(chunks, parts):
            for pos, t in enumerate(chunk):
                merged[t] = (c0[pos], c1[pos], tr[pos], draws[pos])
        c0 = [merged[t][0] for t in ids]
        c1 = [merged[t][1] for t in ids]
        tr = [merged[t][2] for t in ids]
        draws = [merged[t][3] for t in ids]
    else:
        c0, c1, tr, draws = _run_trials(Mx, ids, seed, prime, K)

    failures = 0
    counterexample = None
    for t in ids:
        if c0[t] != 1 or c1[t] != tr[t]:
            failures += 1
            if counterexample is None:
                counterexample = {"trial": t, "assignment": draws[t],
                                  "got": (c0[t], c1[t]), "expected": (1, tr[t])}
    return ProjectionReport(tuple(Mx.dims), tuple(Mx.sigma), trials, prime, seed, K,
                            failures == 0, failures, Mx.size, Mx.scaling, Mx.sign,
                            counterexample)


@dataclass
class SymbolicReport:
    dims: tuple
    sigma: tuple
    passed: bool
    product: EpsSeries
    expected: EpsSeries


def verify_projection_symbolic(dims: Sequence[int], sigma: Sequence[int], *,
                               scale: bool = True, sign: int | None = None) -> SymbolicReport:
    """Full polynomial expansion of the minor product via cycle covers (N <= 4)."""
    Mx = build_m(dims, sigma, scale=scale, sign=sign)
    if Mx.N > SYMBOLIC_LIMIT:
        raise ProjectionError(f"symbolic check limited to N <= {SYMBOLIC_LIMIT}")
    zero = Poly()
    size = Mx.size
    grid = [[EpsSeries([zero, zero]) for _ in range(size)] for _ in range(size)]
    for (i, j), e in Mx.entries.items():
        if e.is_var:
            grid[i][j] = EpsSeries([Poly.var(e.var, e.coef), zero])
        else:
            cs = e.const.coeffs if isinstance(e.const, EpsSeries) else (e.const,)
            cs = list(cs[:2]) + [0] * (2 - len(cs[:2]))
            grid[i][j] = EpsSeries([Poly.const(c) for c in cs])
    product = EpsSeries([Poly.const(1), zero])
    for s in Mx.sigma:
        minor = [row[:s] for row in grid[:s]]
        product = product * det_cycle_cover_reference(minor)

    # tr(X1 ... Xm) expanded directly
    mats = []
    v = 0
    for a, b in zip(Mx.dims, Mx.dims[1:]):
        mats.append([[Poly.var(v + r * b + c) for c in range(b)] for r in range(a)])
        v += a * b
    P = mats[0]
    for M in mats[1:]:
        P = [[sum((P[i][t] * M[t][j] for t in range(len(M))), zero)
              for j in range(len(M[0]))] for i in range(len(P))]
    trace = sum((P[i][i] for i in range(len(P))), zero)
    expected = EpsSeries([Poly.const(1), trace])
    return SymbolicReport(Mx.dims, Mx.sigma, product == expected, product, expected)
