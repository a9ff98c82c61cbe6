"""Multi-output algebraic circuits with edge scalars.

Gates are stored in topological order; a gate may only reference gates
with smaller ids.  ``Add(l, r, a, b)`` computes ``a*v_l + b*v_r`` and
``Mul(l, r, a, b)`` computes ``(a*v_l) * (b*v_r)``.  Edge scalars are
rationals or eps-series (so circuits over F(eps) are representable).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .ring import RingError, ring_tag, to_field

ONE = Fraction(1)
ZERO = Fraction(0)


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Input:
    var: int


@dataclass(frozen=True)
class Const:
    value: Any


@dataclass(frozen=True)
class Add:
    left: int
    right: int
    alpha: Any = ONE
    beta: Any = ONE


@dataclass(frozen=True)
class Mul:
    left: int
    right: int
    alpha: Any = ONE
    beta: Any = ONE


Gate = Input | Const | Add | Mul


def _scalar(x):
    if isinstance(x, bool):
        raise TypeError("bool is not a ring element")
    if isinstance(x, int):
        return Fraction(x)
    return x


@dataclass(frozen=True)
class Circuit:
    n_inputs: int
    gates: tuple
    outputs: tuple
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "outputs", tuple(self.outputs))

    # -- structure ---------------------------------------------------------

    def validate(self) -> str | None:
        """First violated invariant, or None when the circuit is well formed."""
        if self.n_inputs < 0:
            return "negative input count"
        for k, g in enumerate(self.gates):
            if isinstance(g, Input):
                if not 0 <= g.var < self.n_inputs:
                    return f"g{k}: input variable {g.var} out of range [0, {self.n_inputs})"
            elif isinstance(g, (Add, Mul)):
                for ref in (g.left, g.right):
                    if not 0 <= ref < k:
                        return f"g{k}: operand g{ref} is not an earlier gate"
            elif not isinstance(g, Const):
                return f"g{k}: unknown gate {g!r}"
        if not self.outputs:
            return "circuit has no outputs"
        for o in self.outputs:
            if not 0 <= o < len(self.gates):
                return f"output g{o} is not a gate"
        return None

    def check(self) -> "Circuit":
        problem = self.validate()
        if problem:
            raise CircuitError(problem)
        return self

    @property
    def size(self) -> int:
        return len(self.gates)

    def mult_complexity(self) -> int:
        return sum(1 for g in self.gates if isinstance(g, Mul))

    def degree_bound(self) -> list[int]:
        """Syntactic degree of every output (an upper bound on the true degree)."""
        deg = []
        for g in self.gates:
            if isinstance(g, Input):
                deg.append(1)
            elif isinstance(g, Const):
                deg.append(0)
            elif isinstance(g, Add):
                deg.append(max(deg[g.left], deg[g.right]))
            else:
                deg.append(deg[g.left] + deg[g.right])
        return [deg[o] for o in self.outputs]

    # -- evaluation --------------------------------------------------------

    def eval(self, point: Sequence) -> list:
        if len(point) != self.n_inputs:
            raise CircuitError(
                f"expected {self.n_inputs} inputs, got {len(point)}")
        tags = {ring_tag(x) for x in point}
        if len(tags) > 1:
            raise RingError(f"inhomogeneous evaluation point: {sorted(tags)}")
        tag = tags.pop() if tags else ("Q",)
        prog = self._program(_field_of(tag))
        vals: list = []
        append = vals.append
        for op, a, b, x, y in prog:
            if op == 0:
                append(point[a])
            elif op == 1:
                append(a)
            else:
                u = vals[a] if x is None else x * vals[a]
                v = vals[b] if y is None else y * vals[b]
                append(u + v if op == 2 else u * v)
        return [vals[o] for o in self.outputs]

    def _program(self, p: int | None):
        key = ("prog", p)
        prog = self._cache.get(key)
        if prog is None:
            self.check()
            lift = (lambda s: s) if p is None else (lambda s: to_field(s, p))

            def edge(s):
                return None if s == 1 else lift(s)

            prog = []
            for g in self.gates:
                if isinstance(g, Input):
                    prog.append((0, g.var, None, None, None))
                elif isinstance(g, Const):
                    prog.append((1, lift(g.value), None, None, None))
                else:
                    prog.append((2 if isinstance(g, Add) else 3,
                                 g.left, g.right, edge(g.alpha), edge(g.beta)))
            self._cache[key] = prog
        return prog


def _field_of(tag: tuple) -> int | None:
    if tag[0] == "Fp":
        return tag[1]
    if tag[0] == "eps" and tag[2][0] == "Fp":
        return tag[2][1]
    return None


def validate(c: Circuit) -> str | None:
    return c.validate()


def evaluate(c: Circuit, point: Sequence) -> list:
    return c.eval(point)


def mult_complexity(c: Circuit) -> int:
    return c.mult_complexity()


def degree_bound(c: Circuit) -> list[int]:
    return c.degree_bound()


# -- building ---------------------------------------------------------------


class Linear:
    """Unmaterialised linear combination ``const + sum coef*gate``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=ZERO):
        self.terms = {g: c for g, c in (terms or {}).items() if c != 0}
        self.const = _scalar(const)

    @classmethod
    def of(cls, gid: int, coef=ONE) -> "Linear":
        return cls({gid: _scalar(coef)})

    def __add__(self, other: "Linear") -> "Linear":
        terms = dict(self.terms)
        for g, c in other.terms.items():
            terms[g] = terms.get(g, ZERO) + c
        return Linear(terms, self.const + other.const)

    def scale(self, s) -> "Linear":
        s = _scalar(s)
        return Linear({g: c * s for g, c in self.terms.items()}, self.const * s)

    def is_constant(self) -> bool:
        return not self.terms


class CircuitBuilder:
    def __init__(self, n_inputs: int):
        self.n_inputs = n_inputs
        self.gates: list = []
        self._inputs: dict[int, int] = {}
        self._consts: dict = {}

    def _emit(self, gate) -> int:
        self.gates.append(gate)
        return len(self.gates) - 1

    def input(self, var: int) -> int:
        gid = self._inputs.get(var)
        if gid is None:
            gid = self._inputs[var] = self._emit(Input(var))
        return gid

    def const(self, value) -> int:
        value = _scalar(value)
        key = (type(value).__name__, value)
        gid = self._consts.get(key)
        if gid is None:
            gid = self._consts[key] = self._emit(Const(value))
        return gid

    def add(self, l: int, r: int, alpha=ONE, beta=ONE) -> int:
        return self._emit(Add(l, r, _scalar(alpha), _scalar(beta)))

    def mul(self, l: int, r: int, alpha=ONE, beta=ONE) -> int:
        return self._emit(Mul(l, r, _scalar(alpha), _scalar(beta)))

    def copy_gate(self, gate) -> int:
        return self._emit(gate)

    # Linear-combination helpers: scalars ride on edges wherever possible.

    def scaled(self, lin: Linear) -> tuple[int, Any]:
        """Gate g and scalar s with s*g equal to ``lin``."""
        items = list(lin.terms.items())
        has_const = lin.const != 0
        if not items:
            return self.const(lin.const), ONE
        if len(items) == 1 and not has_const:
            return items[0]
        if has_const:
            items.append((self.const(lin.const), ONE))
        g, c = items[0]
        h, d = items[1]
        acc = self.add(g, h, c, d)
        for h, d in items[2:]:
            acc = self.add(acc, h, ONE, d)
        return acc, ONE

    def emit_linear(self, lin: Linear) -> int:
        g, s = self.scaled(lin)
        if s == 1:
            return g
        return self.add(g, g, s, ZERO)

    def product(self, a: Linear, b: Linear) -> Linear:
        if a.is_constant():
            return b.scale(a.const)
        if b.is_constant():
            return a.scale(b.const)
        g, s = self.scaled(a)
        h, t = self.scaled(b)
        return Linear.of(self.mul(g, h, s, t))

    def build(self, outputs: Sequence[int]) -> Circuit:
        return Circuit(self.n_inputs, tuple(self.gates), tuple(outputs)).check()


# -- transforms -------------------------------------------------------------


def baur_strassen(c: Circuit) -> Circuit:
    """Circuit computing (f, df/dx_1, ..., df/dx_n) by reverse accumulation.

    The forward gates are copied verbatim; every multiplication gate adds at
    most two multiplications on the way back, so the result has
    multiplicative complexity at most 3 * mult_complexity(c).
    """
    c.check()
    if len(c.outputs) != 1:
        raise CircuitError("baur_strassen needs a single-output circuit")
    b = CircuitBuilder(c.n_inputs)
    for g in c.gates:
        gid = b.copy_gate(g)
        if isinstance(g, Input):
            b._inputs.setdefault(g.var, gid)

    # adjoint[k] accumulates (gate, coef) contributions; the gate None stands
    # for the constant 1 seeded at the output.
    adjoint: list[list] = [[] for _ in c.gates]
    adjoint[c.outputs[0]].append((None, ONE))

    def settle(parts) -> tuple[int | None, Any]:
        if len(parts) == 1:
            return parts[0]
        lin = Linear()
        for g, s in parts:
            if g is None:
                lin = lin + Linear(const=s)
            else:
                lin = lin + Linear.of(g, s)
        if lin.is_constant():
            return None, lin.const
        return b.scaled(lin)

    var_parts: dict[int, list] = {}
    for k in range(len(c.gates) - 1, -1, -1):
        parts = adjoint[k]
        if not parts:
            continue
        g = c.gates[k]
        if isinstance(g, Const):
            continue
        a_gate, a_scale = settle(parts)
        if isinstance(g, Input):
            var_parts.setdefault(g.var, []).append((a_gate, a_scale))
        elif isinstance(g, Add):
            adjoint[g.left].append((a_gate, a_scale * g.alpha))
            adjoint[g.right].append((a_gate, a_scale * g.beta))
        else:
            ab = g.alpha * g.beta
            for target, other in ((g.left, g.right), (g.right, g.left)):
                if a_gate is None:
                    adjoint[target].append((other, a_scale * ab))
                else:
                    adjoint[target].append((b.mul(a_gate, other, a_scale, ab), ONE))

    outputs = [c.outputs[0]]
    for v in range(c.n_inputs):
        parts = var_parts.get(v)
        if not parts:
            outputs.append(b.const(ZERO))
            continue
        gate, scale = settle(parts)
        if gate is None:
            outputs.append(b.const(scale))
        elif scale == 1:
            outputs.append(gate)
        else:
            outputs.append(b.add(gate, gate, scale, ZERO))
    return b.build(outputs)


def substitute(c: Circuit, subs: Sequence[Circuit]) -> Circuit:
    """Replace variable i of ``c`` by the single output of ``subs[i]``.

    All replacement circuits must share one fresh variable space.
    """
    c.check()
    if len(subs) != c.n_inputs:
        raise CircuitError(
            f"need {c.n_inputs} replacements, got {len(subs)}")
    spaces = {s.n_inputs for s in subs}
    if len(spaces) > 1:
        raise CircuitError(f"replacements use different variable spaces: {sorted(spaces)}")
    n_fresh = spaces.pop() if spaces else 0
    b = CircuitBuilder(n_fresh)
    inlined: dict[int, int] = {}

    def inline(sub: Circuit) -> int:
        sub.check()
        if len(sub.outputs) != 1:
            raise CircuitError("replacement circuits must have one output")
        ids = _inline_into(b, sub, lambda var: b.input(var))
        return ids[sub.outputs[0]]

    def var_gate(var: int) -> int:
        if var not in inlined:
            inlined[var] = inline(subs[var])
        return inlined[var]

    ids = _inline_into(b, c, var_gate)
    return b.build([ids[o] for o in c.outputs])


def _inline_into(b: CircuitBuilder, c: Circuit, var_gate) -> list[int]:
    ids: list[int] = []
    for g in c.gates:
        if isinstance(g, Input):
            ids.append(var_gate(g.var))
        elif isinstance(g, Const):
            ids.append(b.const(g.value))
        elif isinstance(g, Add):
            ids.append(b.add(ids[g.left], ids[g.right], g.alpha, g.beta))
        else:
            ids.append(b.mul(ids[g.left], ids[g.right], g.alpha, g.beta))
    return ids


def power_sum(n: int, d: int) -> Circuit:
    """(x_1 + ... + x_n)^d by left-to-right square-and-multiply."""
    if n < 1:
        raise CircuitError("power_sum needs n >= 1")
    if d < 1:
        raise CircuitError("power_sum needs d >= 1; build a Const circuit for d = 0")
    b = CircuitBuilder(n)
    base = b.input(0)
    for i in range(1, n):
        base = b.add(base, b.input(i))
    acc = base
    for bit in bin(d)[3:]:
        acc = b.mul(acc, acc)
        if bit == "1":
            acc = b.mul(acc, base)
    return b.build([acc])


def constant_circuit(value, n_inputs: int = 0) -> Circuit:
    b = CircuitBuilder(n_inputs)
    return b.build([b.const(value)])


def combine_outputs(c: Circuit, d: Circuit, alpha=ONE, beta=-ONE) -> Circuit:
    """Output-wise ``alpha*c + beta*d`` over a shared variable space."""
    if c.n_inputs != d.n_inputs or len(c.outputs) != len(d.outputs):
        raise CircuitError("circuits differ in inputs or output count")
    b = CircuitBuilder(c.n_inputs)
    left = _inline_into(b, c, b.input)
    right = _inline_into(b, d, b.input)
    outs = [b.add(left[o], right[q], alpha, beta)
            for o, q in zip(c.outputs, d.outputs)]
    return b.build(outs)

