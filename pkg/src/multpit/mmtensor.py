"""Matrix-multiplication tensors and (border) rank-one decompositions.

Index conventions for <n,m,p>: x_{i,j} is x-variable i*m+j, y_{j,k} is
y-variable j*p+k and z_{i,k} (the output coordinate (XY)_{i,k}) is
z-index i*p+k.  A decomposition is a list of terms (u, v, w) of linear
forms with eps-series coefficients; it describes the tensor
sum_t u_t(x) v_t(y) w_t(z).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Sequence

from .abp import AffineForm
from .circuit import Add, Circuit, CircuitBuilder, Const, Input, Linear
from .poly import Poly
from .ring import EpsSeries, format_literal, pad_series


class TensorError(ValueError):
    pass


@dataclass(frozen=True)
class Tensor3:
    shape: tuple  # sizes of the x-, y- and z-blocks
    table: dict  # (a, b, c) -> nonzero Fraction
    mm_dims: tuple | None = None

    def entry(self, a: int, b: int, c: int) -> Fraction:
        return self.table.get((a, b, c), Fraction(0))

    def nonzeros(self) -> int:
        return len(self.table)

    def trilinear(self) -> Poly:
        """sum t_abc x_a y_b z_c with x, y, z numbered consecutively."""
        A, B, _ = self.shape
        out = Poly()
        for (a, b, c), t in self.table.items():
            out = out + Poly.var(a, t) * Poly.var(A + b) * Poly.var(A + B + c)
        return out


def mm_tensor(n: int, m: int, p: int) -> Tensor3:
    if min(n, m, p) < 1:
        raise TensorError("tensor dimensions must be positive")
    table = {}
    for i in range(n):
        for j in range(m):
            for k in range(p):
                table[(i * m + j, j * p + k, i * p + k)] = Fraction(1)
    return Tensor3((n * m, m * p, n * p), table, (n, m, p))


@dataclass(frozen=True)
class Decomposition:
    dims: tuple  # (n, m, p)
    terms: tuple  # ((u, v, w), ...), each a tuple of EpsSeries

    def __post_init__(self):
        n, m, p = self.dims
        sizes = (n * m, m * p, n * p)
        K = max([1] + [c.K for t in self.terms for form in t for c in form
                       if isinstance(c, EpsSeries)])
        clean = []
        for idx, t in enumerate(self.terms):
            if len(t) != 3:
                raise TensorError(f"term {idx + 1} does not have three forms")
            forms = []
            for name, form, size in zip("uvw", t, sizes):
                if len(form) != size:
                    raise TensorError(
                        f"term {idx + 1}: {name} has {len(form)} coefficients, expected {size}")
                forms.append(tuple(pad_series(form, K)))
            clean.append(tuple(forms))
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def rank(self) -> int:
        return len(self.terms)

    @property
    def K(self) -> int:
        if not self.terms:
            return 1
        return self.terms[0][0][0].K


@dataclass
class VerifyResult:
    status: str  # "exact", "border" or "fail"
    K: int
    shift: int = 0
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def _var_name(block: str, idx: int, dims: tuple) -> str:
    n, m, p = dims
    cols = {"x": m, "y": p, "z": p}[block]
    return f"{block}({idx // cols + 1},{idx % cols + 1})"


def _eps_degree(form) -> int:
    deg = 0
    for c in form:
        for j, x in enumerate(c.coeffs):
            if x != 0:
                deg = max(deg, j)
    return deg


def full_order(d: Decomposition) -> int:
    """Truncation order at which the expansion loses nothing."""
    du = max((_eps_degree(t[0]) for t in d.terms), default=0)
    dv = max((_eps_degree(t[1]) for t in d.terms), default=0)
    dw = max((_eps_degree(t[2]) for t in d.terms), default=0)
    return du + dv + dw + 1


def expand_decomposition(d: Decomposition, K: int | None = None) -> dict:
    """Coefficient table of sum_t u_t v_t w_t as polynomials in eps.

    By default the expansion is carried out to ``full_order(d)`` so that no
    eps-power is truncated away.
    """
    K = full_order(d) if K is None else K
    out: dict = {}
    for u, v, w in d.terms:
        u, v, w = pad_series(u, K), pad_series(v, K), pad_series(w, K)
        us = [(a, c) for a, c in enumerate(u) if not c.is_zero()]
        vs = [(b, c) for b, c in enumerate(v) if not c.is_zero()]
        ws = [(c_, c) for c_, c in enumerate(w) if not c.is_zero()]
        for a, ca in us:
            for b, cb in vs:
                ab = ca * cb
                if ab.is_zero():
                    continue
                for c, cc in ws:
                    key = (a, b, c)
                    val = ab * cc
                    out[key] = out[key] + val if key in out else val
    return out


def verify_decomposition(d: Decomposition, t: Tensor3, shift: int = 0) -> VerifyResult:
    """Expand the decomposition and compare with ``eps^shift * t``.

    ``exact``: the expansion equals t with no eps-tail (shift 0).
    ``border``: the eps^shift coefficient equals t, lower coefficients vanish
    and higher ones may not.  Otherwise ``fail`` with the first differing
    coefficient as witness.
    """
    n, m, p = d.dims
    if (n * m, m * p, n * p) != tuple(t.shape):
        raise TensorError(f"decomposition blocks {d.dims} do not match tensor shape {t.shape}")
    K = max(full_order(d), shift + 1)
    if shift < 0:
        raise TensorError("shift must be nonnegative")
    got = expand_decomposition(d, K)
    keys = sorted(set(got) | set(t.table))
    tail = False
    for key in keys:
        series = got.get(key)
        coeffs = series.coeffs if series is not None else (Fraction(0),) * K
        for j, c in enumerate(coeffs):
            want = t.entry(*key) if j == shift else Fraction(0)
            if j > shift:
                if c != 0:
                    tail = True
                continue
            if c != want:
                a, b, cz = key
                return VerifyResult("fail", K, shift, {
                    "index": key,
                    "monomial": " ".join((_var_name("x", a, d.dims), _var_name("y", b, d.dims),
                                          _var_name("z", cz, d.dims))),
                    "eps_power": j,
                    "got": c,
                    "expected": want,
                })
    if shift == 0 and not tail:
        return VerifyResult("exact", K, shift)
    return VerifyResult("border", K, shift)


def _coef(c: EpsSeries):
    """Plain scalar when the series has no eps-tail."""
    if all(x == 0 for x in c.coeffs[1:]):
        return c.coeffs[0]
    return c


def _linear_of(form: Sequence[EpsSeries], gates: Sequence[int]) -> Linear:
    return Linear({g: _coef(c) for g, c in zip(gates, form) if not c.is_zero()})


def decomposition_to_circuit(d: Decomposition, shift: int = 0, *, check: bool = True) -> Circuit:
    """Bilinear circuit for XY: one Mul per term, outputs (XY)_{i,k} at index i*p+k.

    Inputs are the x-variables followed by the y-variables.  For a border
    decomposition the outputs are eps^shift XY + O(eps^(shift+1)).
    """
    n, m, p = d.dims
    if check:
        res = verify_decomposition(d, mm_tensor(n, m, p), shift)
        if not res.ok:
            raise TensorError(f"decomposition does not verify: {res.witness}")
    nx, ny = n * m, m * p
    b = CircuitBuilder(nx + ny)
    xs = [b.input(i) for i in range(nx)]
    ys = [b.input(nx + i) for i in range(ny)]
    outs = [Linear() for _ in range(n * p)]
    for u, v, w in d.terms:
        prod = b.product(_linear_of(u, xs), _linear_of(v, ys))
        if prod.is_constant() and prod.const == 0:
            continue
        for c, coef in enumerate(w):
            if not coef.is_zero():
                outs[c] = outs[c] + prod.scale(_coef(coef))
    return b.build([b.emit_linear(o) for o in outs])


def schoolbook_circuit(n: int, m: int, p: int) -> Circuit:
    return decomposition_to_circuit(trivial_decomposition(n, m, p), check=False)


# -- bilinear programs ------------------------------------------------------


@dataclass(frozen=True)
class BilinearProgram:
    """Products of affine forms followed by linear output combinations.

    Variables 0..n_x-1 are the x-block, n_x..n_x+n_y-1 the y-block.  Output
    o is ``sum_t outputs[o][0][t] * product_t + outputs[o][1]``.
    """

    n_x: int
    n_y: int
    products: tuple  # ((AffineForm, AffineForm), ...)
    outputs: tuple  # ((dict t -> coef, AffineForm), ...)

    @property
    def mult_complexity(self) -> int:
        return len(self.products)


def bilinear_from_circuit(c: Circuit, n_x: int) -> BilinearProgram:
    """Read a circuit whose Mul gates multiply affine functions of the inputs.

    Raises TensorError when some Mul gate has a non-affine operand or an
    edge scalar is not rational.
    """
    c.check()
    # each gate is ("lin", AffineForm) or ("quad", {t: coef}, AffineForm)
    val: list = []
    products: list = []

    def scal(s):
        if isinstance(s, EpsSeries):
            if s.K == 1 or all(x == 0 for x in s.coeffs[1:]):
                return Fraction(s.coeffs[0])
            raise TensorError("eps-valued edge scalars have no bilinear normal form")
        return Fraction(s)

    def scaled(v, s):
        if v[0] == "lin":
            return ("lin", v[1].scale(s))
        return ("quad", {t: q * s for t, q in v[1].items()}, v[2].scale(s))

    def plus(v, w):
        if v[0] == "lin" and w[0] == "lin":
            return ("lin", v[1] + w[1])
        qv = v[1] if v[0] == "quad" else {}
        qw = w[1] if w[0] == "quad" else {}
        lv = v[-1]
        lw = w[-1]
        q = dict(qv)
        for t, x in qw.items():
            q[t] = q.get(t, Fraction(0)) + x
        return ("quad", {t: x for t, x in q.items() if x != 0}, lv + lw)

    for gid, g in enumerate(c.gates):
        if isinstance(g, Input):
            val.append(("lin", AffineForm.var(g.var)))
        elif isinstance(g, Const):
            val.append(("lin", AffineForm.const(scal(g.value))))
        elif isinstance(g, Add):
            val.append(plus(scaled(val[g.left], scal(g.alpha)), scaled(val[g.right], scal(g.beta))))
        else:
            l, r = scaled(val[g.left], scal(g.alpha)), scaled(val[g.right], scal(g.beta))
            if l[0] != "lin" or r[0] != "lin":
                raise TensorError(f"gate g{gid} multiplies a non-affine operand")
            if not l[1].terms or not r[1].terms:
                # product with a constant stays affine
                k, f = (l[1].constant, r[1]) if not l[1].terms else (r[1].constant, l[1])
                val.append(("lin", f.scale(k)))
                continue
            products.append((l[1], r[1]))
            val.append(("quad", {len(products) - 1: Fraction(1)}, AffineForm.const(0)))
    outs = []
    for o in c.outputs:
        v = val[o]
        if v[0] == "lin":
            outs.append(({}, v[1]))
        else:
            outs.append((v[1], v[2]))
    n_y = c.n_inputs - n_x
    if n_y < 0:
        raise TensorError("n_x exceeds the number of inputs")
    return BilinearProgram(n_x, n_y, tuple(products), tuple(outs))


def _split(f: AffineForm, n_x: int) -> tuple[dict, dict]:
    xs = {v: c for v, c in f.terms if v < n_x}
    ys = {v - n_x: c for v, c in f.terms if v >= n_x}
    return xs, ys


def polarize(prog: BilinearProgram) -> list[tuple]:
    """Rank-one terms (u, v, w) for the bilinear part of a program.

    The x*y part of (lx + ly + c)(l'x + l'y + c') is lx*l'y + ly*l'x, so a
    program with s products yields at most 2s terms.
    """
    nx, ny = prog.n_x, prog.n_y
    zero = Fraction(0)
    terms = []
    for t, (f, g) in enumerate(prog.products):
        w = [coefs.get(t, zero) for coefs, _ in prog.outputs]
        if all(c == 0 for c in w):
            continue
        fx, fy = _split(f, nx)
        gx, gy = _split(g, nx)
        for left, right in ((fx, gy), (gx, fy)):
            if not left or not right:
                continue
            u = [left.get(i, zero) for i in range(nx)]
            v = [right.get(i, zero) for i in range(ny)]
            terms.append((u, v, list(w)))
    return terms


def bilinear_to_decomposition(prog: BilinearProgram, dims: Sequence[int]) -> Decomposition:
    """Decomposition of <n,m,p>-shaped bilinear part, at most 2s terms."""
    n, m, p = dims
    if prog.n_x != n * m or prog.n_y != m * p:
        raise TensorError(f"program blocks ({prog.n_x}, {prog.n_y}) do not match {tuple(dims)}")
    if len(prog.outputs) != n * p:
        raise TensorError(f"program has {len(prog.outputs)} outputs, expected {n * p}")
    return Decomposition(tuple(dims), tuple(polarize(prog)))


def expand_terms(terms, shape) -> dict:
    """Exact coefficient table of sum u (x) v (x) w for rational terms."""
    out: dict = {}
    for u, v, w in terms:
        for a, b, c in itertools.product(range(shape[0]), range(shape[1]), range(shape[2])):
            x = u[a] * v[b] * w[c]
            if x:
                out[(a, b, c)] = out.get((a, b, c), 0) + x
    return {k: x for k, x in out.items() if x != 0}


def bilinear_part_tensor(prog: BilinearProgram, nz: int | None = None) -> Tensor3:
    """Tensor of the x*y monomials of each output, by polynomial expansion."""
    nx, ny = prog.n_x, prog.n_y
    nz = len(prog.outputs) if nz is None else nz

    def poly(f: AffineForm) -> Poly:
        out = Poly.const(f.constant)
        for v, c in f.terms:
            out = out + Poly.var(v, c)
        return out

    prods = [poly(f) * poly(g) for f, g in prog.products]
    table = {}
    for o, (coefs, lin) in enumerate(prog.outputs):
        total = poly(lin)
        for t, q in coefs.items():
            total = total + prods[t] * q
        for mono, c in total.terms.items():
            if len(mono) == 2 and mono[0][1] == 1 and mono[1][1] == 1:
                a, b = mono[0][0], mono[1][0]
                if a < nx <= b:
                    table[(a, b - nx, o)] = c
    return Tensor3((nx, ny, nz), table)


# -- standard decompositions ------------------------------------------------


def trivial_decomposition(n: int, m: int, p: int) -> Decomposition:
    """One term x_{i,j} y_{j,k} z_{i,k} per index triple."""
    nx, ny, nz = n * m, m * p, n * p
    terms = []
    for i in range(n):
        for j in range(m):
            for k in range(p):
                u = [0] * nx
                v = [0] * ny
                w = [0] * nz
                u[i * m + j] = v[j * p + k] = w[i * p + k] = 1
                terms.append((u, v, w))
    return Decomposition((n, m, p), tuple(terms))


# Strassen's seven products; coefficient vectors over (11, 12, 21, 22).
_STRASSEN = (
    ((1, 0, 0, 1), (1, 0, 0, 1), (1, 0, 0, 1)),
    ((0, 0, 1, 1), (1, 0, 0, 0), (0, 0, 1, -1)),
    ((1, 0, 0, 0), (0, 1, 0, -1), (0, 1, 0, 1)),
    ((0, 0, 0, 1), (-1, 0, 1, 0), (1, 0, 1, 0)),
    ((1, 1, 0, 0), (0, 0, 0, 1), (-1, 1, 0, 0)),
    ((-1, 0, 1, 0), (1, 1, 0, 0), (0, 0, 0, 1)),
    ((0, 1, 0, -1), (0, 0, 1, 1), (1, 0, 0, 0)),
)


def strassen_decomposition() -> Decomposition:
    return Decomposition((2, 2, 2), tuple(tuple(list(f) for f in t) for t in _STRASSEN))


def format_decomposition_term(term) -> list[str]:
    return [" ".join(format_literal(c) for c in form) for form in term]


# -- certified lower bound ---------------------------------------------------


def brank_lb(k: int) -> int:
    """Least integer L with L >= 2k^2 - log2(k) - 1.

    Decided without floating point: L is admissible iff 2^(2k^2-1-L) <= k.
    """
    if k < 1:
        raise TensorError("brank_lb needs k >= 1")
    top = 2 * k * k - 1
    L = top
    while (1 << (top - (L - 1))) <= k:
        L -= 1
    return L


def brank_lb_inverse(s: int) -> int:
    """Least k >= 1 with brank_lb(k) >= s."""
    if s <= 1:
        return 1
    k = max(1, isqrt(s // 2))
    while k > 1 and brank_lb(k - 1) >= s:
        k -= 1
    while brank_lb(k) < s:
        k += 1
    return k
