"""Text formats: circuits (.acir), decompositions (.dec), trace ABPs (.tabp).

All three are line based with ``#`` comments.  Parsers raise
:class:`FormatError` carrying the offending line number; serializers emit
the canonical form, so ``dump(parse(text))`` is stable.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .abp import ABPError, AffineForm, TraceABP
from .circuit import Add, Circuit, CircuitError, Const, Input, Mul
from .mmtensor import Decomposition, TensorError
from .ring import EpsSeries, format_literal, format_scalar, parse_literal, parse_scalar


class FormatError(ValueError):
    def __init__(self, line: int | None, msg: str):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _int(tok: str, no: int, what: str) -> int:
    if not re.fullmatch(r"\d+", tok):
        raise FormatError(no, f"expected a nonnegative integer for {what}, got {tok!r}")
    return int(tok)


def _lit(tok: str, no: int):
    try:
        return parse_literal(tok)
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(no, str(e)) from None


# -- circuits ---------------------------------------------------------------

_GATE_RE = re.compile(r"g(\d+)")


def _gate_ref(tok: str, no: int) -> int:
    m = _GATE_RE.fullmatch(tok)
    if not m:
        raise FormatError(no, f"expected a gate reference g<k>, got {tok!r}")
    return int(m.group(1))


def parse_acir(text: str) -> Circuit:
    n_inputs = None
    gates: list = []
    outputs = None
    for no, line in _lines(text):
        toks = line.split()
        head = toks[0]
        if head == "ninputs":
            if n_inputs is not None:
                raise FormatError(no, "duplicate ninputs line")
            if len(toks) != 2:
                raise FormatError(no, "usage: ninputs <n>")
            n_inputs = _int(toks[1], no, "ninputs")
            continue
        if n_inputs is None:
            raise FormatError(no, "ninputs must come first")
        if head == "output":
            if outputs is not None:
                raise FormatError(no, "duplicate output line")
            if len(toks) < 2:
                raise FormatError(no, "output needs at least one gate")
            outputs = [_gate_ref(t, no) for t in toks[1:]]
            for o in outputs:
                if o >= len(gates):
                    raise FormatError(no, f"output g{o} does not exist")
            continue
        if outputs is not None:
            raise FormatError(no, "gates after the output line")
        gid = _gate_ref(head, no)
        if gid != len(gates):
            raise FormatError(no, f"gate ids must be dense and ascending: expected g{len(gates)}")
        if len(toks) < 2:
            raise FormatError(no, "missing gate kind")
        kind, args = toks[1], toks[2:]
        if kind == "input":
            if len(args) != 1:
                raise FormatError(no, "usage: g<k> input <var>")
            var = _int(args[0], no, "input variable")
            if var >= n_inputs:
                raise FormatError(no, f"input variable {var} out of range (ninputs {n_inputs})")
            gates.append(Input(var))
        elif kind == "const":
            if len(args) != 1:
                raise FormatError(no, "usage: g<k> const <scalar>")
            gates.append(Const(_lit(args[0], no)))
        elif kind in ("add", "mul"):
            if len(args) not in (2, 4):
                raise FormatError(no, f"usage: g<k> {kind} g<i> g<j> [<alpha> <beta>]")
            l, r = _gate_ref(args[0], no), _gate_ref(args[1], no)
            for ref in (l, r):
                if ref >= gid:
                    raise FormatError(no, f"g{gid} references g{ref}, which is not earlier")
            alpha, beta = (Fraction(1), Fraction(1))
            if len(args) == 4:
                alpha, beta = _lit(args[2], no), _lit(args[3], no)
            gates.append((Add if kind == "add" else Mul)(l, r, alpha, beta))
        else:
            raise FormatError(no, f"unknown gate kind {kind!r}")
    if n_inputs is None:
        raise FormatError(None, "missing ninputs line")
    if outputs is None:
        raise FormatError(None, "missing output line")
    try:
        return Circuit(n_inputs, tuple(gates), tuple(outputs)).check()
    except CircuitError as e:
        raise FormatError(None, str(e)) from None


def dump_acir(c: Circuit) -> str:
    out = [f"ninputs {c.n_inputs}"]
    for gid, g in enumerate(c.gates):
        if isinstance(g, Input):
            out.append(f"g{gid} input {g.var}")
        elif isinstance(g, Const):
            out.append(f"g{gid} const {format_literal(g.value)}")
        else:
            kind = "add" if isinstance(g, Add) else "mul"
            line = f"g{gid} {kind} g{g.left} g{g.right}"
            if not (g.alpha == 1 and g.beta == 1):
                line += f" {format_literal(g.alpha)} {format_literal(g.beta)}"
            out.append(line)
    out.append("output " + " ".join(f"g{o}" for o in c.outputs))
    return "\n".join(out) + "\n"


# -- decompositions ---------------------------------------------------------


def _literal_degree(x) -> int:
    if not isinstance(x, EpsSeries):
        return 0
    deg = 0
    for j, c in enumerate(x.coeffs):
        if c != 0:
            deg = j
    return deg


def parse_dec(text: str) -> Decomposition:
    lines = list(_lines(text))
    if len(lines) < 2:
        raise FormatError(None, "expected 'tensor <n> <m> <p>' and 'terms <r>' headers")
    no, line = lines[0]
    toks = line.split()
    if len(toks) != 4 or toks[0] != "tensor":
        raise FormatError(no, "usage: tensor <n> <m> <p>")
    dims = tuple(_int(t, no, "tensor dimension") for t in toks[1:])
    if min(dims) < 1:
        raise FormatError(no, "tensor dimensions must be positive")
    no, line = lines[1]
    toks = line.split()
    if len(toks) != 2 or toks[0] != "terms":
        raise FormatError(no, "usage: terms <r>")
    r = _int(toks[1], no, "terms")
    body = lines[2:]
    if len(body) != 3 * r:
        last = body[-1][0] if body else no
        raise FormatError(last, f"expected {3 * r} form lines for {r} terms, found {len(body)}")
    n, m, p = dims
    sizes = {"u": n * m, "v": m * p, "w": n * p}
    terms = []
    K = 1
    for t in range(r):
        forms = []
        for slot, (no, line) in zip("uvw", body[3 * t:3 * t + 3]):
            if not line.startswith(slot + ":"):
                raise FormatError(no, f"expected '{slot}:' line for term {t + 1}")
            toks = line[2:].split()
            if len(toks) != sizes[slot]:
                raise FormatError(no, f"{slot} needs {sizes[slot]} coefficients, found {len(toks)}")
            vals = [_lit(tok, no) for tok in toks]
            K = max([K] + [_literal_degree(x) + 1 for x in vals])
            forms.append(vals)
        terms.append(tuple(forms))
    # K is the largest eps-degree present plus one
    terms = [tuple([[_to_order(x, K) for x in f] for f in term]) for term in terms]
    try:
        return Decomposition(dims, tuple(terms))
    except TensorError as e:
        raise FormatError(None, str(e)) from None


def _to_order(x, K: int) -> EpsSeries:
    cs = list(x.coeffs) if isinstance(x, EpsSeries) else [x]
    cs = cs[:K] + [Fraction(0)] * (K - len(cs))
    return EpsSeries(cs)


def dump_dec(d: Decomposition) -> str:
    n, m, p = d.dims
    out = [f"tensor {n} {m} {p}", f"terms {d.rank}"]
    for term in d.terms:
        for slot, form in zip("uvw", term):
            out.append(f"{slot}: " + " ".join(_trimmed(c) for c in form))
    return "\n".join(out) + "\n"


def _trimmed(x) -> str:
    # trailing zero eps-coefficients carry no information; the parser re-derives K
    if isinstance(x, EpsSeries):
        deg = _literal_degree(x)
        return format_literal(EpsSeries(x.coeffs[:deg + 1]) if deg else x.coeffs[0])
    return format_literal(x)


# -- trace ABPs -------------------------------------------------------------

_AFF_TERM = re.compile(
    r"\s*([+-])?\s*(?:(\d+(?:/\d+)?)\s*\*\s*x(\d+)|x(\d+)|(\d+(?:/\d+)?))\s*")
_ENTRY_RE = re.compile(r"M(\d+)\s+(\d+)\s+(\d+)\s*=\s*(.+)")


def parse_affine(s: str, no: int | None = None) -> AffineForm:
    pos = 0
    const = Fraction(0)
    terms: dict = {}
    first = True
    s = s.strip()
    if not s:
        raise FormatError(no, "empty affine form")
    while pos < len(s):
        m = _AFF_TERM.match(s, pos)
        if not m or m.end() == pos:
            raise FormatError(no, f"malformed affine form near {s[pos:]!r}")
        sign, coef, var1, var2, num = m.groups()
        if sign is None and not first:
            raise FormatError(no, f"missing '+' or '-' near {s[pos:]!r}")
        first = False
        neg = sign == "-"
        try:
            if num is not None:
                val = parse_scalar(num)
                const += -val if neg else val
            else:
                c = parse_scalar(coef) if coef is not None else Fraction(1)
                v = int(var1 if var1 is not None else var2)
                terms[v] = terms.get(v, Fraction(0)) + (-c if neg else c)
        except ValueError as e:
            raise FormatError(no, str(e)) from None
        pos = m.end()
    return AffineForm.make(const, terms)


def format_affine(f: AffineForm) -> str:
    parts = []
    if f.constant != 0 or not f.terms:
        parts.append(format_scalar(f.constant))
    for v, c in f.terms:
        mag = abs(c)
        body = f"x{v}" if mag == 1 else f"{format_scalar(mag)}*x{v}"
        if not parts:
            parts.append(body if c > 0 else "-" + body)
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    return " ".join(parts)


def parse_tabp(text: str) -> TraceABP:
    dims = None
    n_vars = None
    mats = None
    seen = set()
    for no, line in _lines(text):
        toks = line.split()
        if toks[0] == "dims":
            if dims is not None:
                raise FormatError(no, "duplicate dims line")
            dims = tuple(_int(t, no, "layer size") for t in toks[1:])
            if len(dims) < 2 or min(dims) < 1:
                raise FormatError(no, "dims needs at least two positive layer sizes")
            if dims[0] != dims[-1]:
                raise FormatError(no, "first and last layer sizes must agree")
            mats = [[[AffineForm.make(0) for _ in range(dims[i + 1])] for _ in range(dims[i])]
                    for i in range(len(dims) - 1)]
            continue
        if toks[0] == "nvars":
            if n_vars is not None:
                raise FormatError(no, "duplicate nvars line")
            if len(toks) != 2:
                raise FormatError(no, "usage: nvars <v>")
            n_vars = _int(toks[1], no, "nvars")
            continue
        if dims is None or n_vars is None:
            raise FormatError(no, "dims and nvars must precede matrix entries")
        m = _ENTRY_RE.fullmatch(line)
        if not m:
            raise FormatError(no, "usage: M<i> <row> <col> = <affine>")
        i, row, col = (int(g) for g in m.groups()[:3])
        if not 1 <= i <= len(mats):
            raise FormatError(no, f"matrix index {i} out of range 1..{len(mats)}")
        if not 1 <= row <= dims[i - 1] or not 1 <= col <= dims[i]:
            raise FormatError(no, f"entry ({row},{col}) outside M{i} of shape {dims[i - 1]}x{dims[i]}")
        if (i, row, col) in seen:
            raise FormatError(no, f"duplicate entry M{i} {row} {col}")
        seen.add((i, row, col))
        form = parse_affine(m.group(4), no)
        if form.max_var() >= n_vars:
            raise FormatError(no, f"variable x{form.max_var()} out of range (nvars {n_vars})")
        mats[i - 1][row - 1][col - 1] = form
    if dims is None or n_vars is None:
        raise FormatError(None, "missing dims or nvars header")
    try:
        return TraceABP(dims, mats, n_vars)
    except ABPError as e:
        raise FormatError(None, str(e)) from None


def dump_tabp(t: TraceABP) -> str:
    out = ["dims " + " ".join(map(str, t.dims)), f"nvars {t.n_vars}"]
    for i, M in enumerate(t.matrices, 1):
        for r, row in enumerate(M, 1):
            for c, f in enumerate(row, 1):
                if not f.is_zero():
                    out.append(f"M{i} {r} {c} = {format_affine(f)}")
    return "\n".join(out) + "\n"
