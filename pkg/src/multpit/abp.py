"""Layered algebraic branching programs and trace ABPs.

A trace ABP is a chain of matrices M_1 ... M_m of affine forms with
M_i of shape dims[i-1] x dims[i] and dims[0] == dims[m]; it computes the
trace of the matrix product.  An ABP is the special case dims[0] == 1,
where the trace is the single (1,1) entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .circuit import Circuit, CircuitBuilder, Linear, ZERO


class ABPError(ValueError):
    pass


@dataclass(frozen=True)
class AffineForm:
    constant: Fraction
    terms: tuple  # sorted ((var, coef), ...) with nonzero coefs

    @classmethod
    def make(cls, constant=0, terms: Mapping[int, object] | None = None) -> "AffineForm":
        clean = {}
        for v, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                clean[v] = clean.get(v, ZERO) + c
        return cls(Fraction(constant), tuple(sorted((v, c) for v, c in clean.items() if c != 0)))

    @classmethod
    def var(cls, i: int, coef=1) -> "AffineForm":
        return cls.make(0, {i: coef})

    @classmethod
    def const(cls, c) -> "AffineForm":
        return cls.make(c)

    def is_zero(self) -> bool:
        return self.constant == 0 and not self.terms

    def __add__(self, other: "AffineForm") -> "AffineForm":
        d = dict(self.terms)
        for v, c in other.terms:
            d[v] = d.get(v, ZERO) + c
        return AffineForm.make(self.constant + other.constant, d)

    def scale(self, s) -> "AffineForm":
        return AffineForm.make(self.constant * s, {v: c * s for v, c in self.terms})

    def max_var(self) -> int:
        return max((v for v, _ in self.terms), default=-1)

    def eval(self, point):
        acc = self.constant
        for v, c in self.terms:
            acc = acc + c * point[v]
        return acc


ZERO_FORM = AffineForm.make(0)


@dataclass(frozen=True)
class TraceABP:
    dims: tuple
    matrices: tuple  # matrices[i][row][col] -> AffineForm
    n_vars: int

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "matrices", tuple(
            tuple(tuple(row) for row in M) for M in self.matrices))
        problem = self._problem()
        if problem:
            raise ABPError(problem)

    def _problem(self) -> str | None:
        dims, mats = self.dims, self.matrices
        if len(dims) < 2 or len(mats) != len(dims) - 1:
            return "need m >= 1 matrices and m+1 dimensions"
        if any(d < 1 for d in dims):
            return "layer sizes must be positive"
        if dims[0] != dims[-1]:
            return f"first and last layer sizes differ ({dims[0]} vs {dims[-1]})"
        for i, M in enumerate(mats):
            if len(M) != dims[i] or any(len(row) != dims[i + 1] for row in M):
                return f"M{i + 1} is not {dims[i]}x{dims[i + 1]}"
            for row in M:
                for f in row:
                    if f.max_var() >= self.n_vars:
                        return f"M{i + 1} uses a variable beyond nvars={self.n_vars}"
        return None

    @property
    def m(self) -> int:
        return len(self.matrices)

    @property
    def size(self) -> int:
        return sum(self.dims)

    @property
    def width(self) -> int:
        return max(self.dims)

    def eval(self, point):
        return trace_eval(self, point)


class ABP(TraceABP):
    """Single-source, single-sink program: boundary layers have one vertex."""

    def _problem(self) -> str | None:
        problem = super()._problem()
        if problem is None and self.dims[0] != 1:
            return "an ABP has single-vertex source and sink layers"
        return problem


def _evaluated(t: TraceABP, point):
    return [[[f.eval(point) for f in row] for row in M] for M in t.matrices]


def _matmul(A, B):
    inner = len(B)
    return [[sum((A[i][k] * B[k][j] for k in range(1, inner)), A[i][0] * B[0][j])
             for j in range(len(B[0]))] for i in range(len(A))]


def trace_eval(t: TraceABP, point):
    if len(point) != t.n_vars:
        raise ABPError(f"expected {t.n_vars} values, got {len(point)}")
    mats = _evaluated(t, point)
    P = mats[0]
    for M in mats[1:]:
        P = _matmul(P, M)
    return sum((P[i][i] for i in range(1, len(P))), P[0][0])


def trace_to_abp(t: TraceABP) -> ABP:
    """Single-source ABP computing the same polynomial.

    One copy of the program per source s_i keeps only s_i and t_i; the copies
    run in parallel between one merged source and one merged sink.  With n_1
    sources the result has size 2 + n_1 * (inner layer sizes) <= w*s and
    width n_1 * max inner layer <= w^2.
    """
    n1, m, dims = t.dims[0], t.m, t.dims
    mats = t.matrices
    if m == 1:
        total = ZERO_FORM
        for i in range(n1):
            total = total + mats[0][i][i]
        return ABP((1, 1), (((total,),),), t.n_vars)

    new_dims = [1] + [n1 * d for d in dims[1:-1]] + [1]
    out = []
    # first layer: source -> copy i of layer 1 via row i of M_1
    first = [[ZERO_FORM] * new_dims[1]]
    for i in range(n1):
        for c in range(dims[1]):
            first[0][i * dims[1] + c] = mats[0][i][c]
    out.append(first)
    # inner layers: block-diagonal copies
    for j in range(1, m - 1):
        rows, cols = dims[j], dims[j + 1]
        block = [[ZERO_FORM] * (n1 * cols) for _ in range(n1 * rows)]
        for i in range(n1):
            for a in range(rows):
                for c in range(cols):
                    block[i * rows + a][i * cols + c] = mats[j][a][c]
        out.append(block)
    # last layer: copy i of layer m-1 -> sink via column i of M_m
    rows = dims[m - 1]
    last = [[ZERO_FORM] for _ in range(n1 * rows)]
    for i in range(n1):
        for a in range(rows):
            last[i * rows + a][0] = mats[m - 1][a][i]
    out.append(last)
    return ABP(tuple(new_dims), tuple(out), t.n_vars)


def build_trace_product(dims: Sequence[int]) -> TraceABP:
    """Trace ABP for tr(X1 ... Xm) with generic variable matrices.

    Xi has shape dims[i-1] x dims[i]; variables are numbered matrix by
    matrix in row-major order.
    """
    dims = tuple(dims)
    mats = []
    v = 0
    for i in range(len(dims) - 1):
        M = []
        for _ in range(dims[i]):
            M.append([AffineForm.var(v + c) for c in range(dims[i + 1])])
            v += dims[i + 1]
        mats.append(M)
    return TraceABP(dims, mats, v)


def build_trace_mm(k: int, m: int) -> TraceABP:
    if k < 1 or m < 1:
        raise ABPError("build_trace_mm needs k >= 1 and m >= 1")
    return build_trace_product((k,) * (m + 1))


def abp_to_circuit(t: TraceABP) -> Circuit:
    """Iterated matrix product as a circuit; the last factor only feeds the diagonal."""
    b = CircuitBuilder(t.n_vars)

    def form(f: AffineForm) -> Linear:
        lin = Linear(const=f.constant)
        for v, c in f.terms:
            lin = lin + Linear.of(b.input(v), c)
        return lin

    mats = [[[form(f) for f in row] for row in M] for M in t.matrices]

    def dot(row, col) -> Linear:
        acc = Linear()
        for x, y in zip(row, col):
            if (x.is_constant() and x.const == 0) or (y.is_constant() and y.const == 0):
                continue
            acc = acc + b.product(x, y)
        return acc

    P = mats[0]
    for M in mats[1:-1]:
        cols = list(zip(*M))
        P = [[dot(row, col) for col in cols] for row in P]
    if t.m == 1:
        diag = [P[i][i] for i in range(len(P))]
    else:
        last = mats[-1]
        diag = [dot(P[i], [last[r][i] for r in range(len(last))]) for i in range(len(P))]
    total = Linear()
    for d in diag:
        total = total + d
    return b.build([b.emit_linear(total)])
