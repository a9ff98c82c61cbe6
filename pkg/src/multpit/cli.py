"""Command line entry point: ``multpit <group> <command> [options]``.

Every report is a block of ``key: value`` lines that starts with the run
configuration, so identical invocations produce identical output.  Exit
status is 0 for ZERO / pass, 1 for NONZERO / fail and 2 for errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

from . import __version__
from .circuit import CircuitError, baur_strassen
from .cyclecover import (SYMBOLIC_LIMIT, ProjectionError, verify_projection_identity,
                         verify_projection_symbolic)
from .formats import FormatError, dump_acir, parse_acir, parse_dec
from .mmtensor import TensorError, decomposition_to_circuit, mm_tensor, verify_decomposition
from .pitgen import (DEFAULT_BUDGET, PITError, compose_with_generator,
                     ideal_membership_probabilistic, params_for, pit_deterministic,
                     pit_randomized)
from .ring import DEFAULT_PRIME, RingError, check_prime, format_literal

LOWER_BOUND = ("brank(<k,k,k>) >= 2k^2 - log2(k) - 1 "
               "(Landsberg-Michalek 2018, border rank of matrix multiplication)")

EXIT_OK, EXIT_NONZERO, EXIT_ERROR = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    prime: int = DEFAULT_PRIME
    seed: int = 0
    trials: int | None = None
    K: int = 2
    budget: int = DEFAULT_BUDGET
    output: str | None = None
    jobs: int = 1

    def lines(self) -> list[str]:
        out = [f"command: {self.command}"]
        for path in self.inputs:
            out.append(f"input: {path}")
        out += [f"prime: {self.prime}", f"seed: {self.seed}", f"K: {self.K}",
                f"budget: {self.budget}", f"jobs: {self.jobs}"]
        if self.trials is not None:
            out.append(f"trials: {self.trials}")
        if self.output:
            out.append(f"output: {self.output}")
        return out


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name}={raw!r} is not an integer") from None


def _int_list(s: str) -> list[int]:
    try:
        vals = [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="multpit",
        description="Hitting-set generator for low multiplicative complexity and its verifiers.")
    ap.add_argument("--version", action="store_true",
                    help="print the version and the certified lower bound in use")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    groups = ap.add_subparsers(dest="group")

    def common(p, trials: int | None = None):
        p.add_argument("--prime", type=int, default=None,
                       help="prime modulus (env MULTPIT_PRIME, default 2^61-1)")
        p.add_argument("--seed", type=int, default=0)
        if trials is not None:
            p.add_argument("--trials", type=int, default=trials)

    pit = groups.add_parser("pit", help="generator parameters and identity tests")
    pcmds = pit.add_subparsers(dest="cmd")
    p = pcmds.add_parser("params", help="seed length for n variables and budget s")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p = pcmds.add_parser("check", help="test a circuit for being identically zero")
    p.add_argument("--circuit", required=True)
    p.add_argument("--s", type=int, default=None, help="multiplicative complexity budget")
    p.add_argument("--mode", choices=("det", "rand", "compose"), default="det")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--budget", type=int, default=None,
                   help="grid enumeration budget (env MULTPIT_BUDGET, default 1e8)")
    common(p, trials=20)
    p = pcmds.add_parser("compose", help="substitute the rank-R matrix generator")
    p.add_argument("--circuit", required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p = pcmds.add_parser("ideal", help="membership in the ideal of r x r minors")
    p.add_argument("--circuit", required=True)
    p.add_argument("--r", type=int, required=True)
    common(p, trials=20)

    lem = groups.add_parser("lemma31", help="principal-minor product identity")
    lcmds = lem.add_subparsers(dest="cmd")
    p = lcmds.add_parser("verify", help="check prod det(M[:sigma_i]) = 1 + eps tr(X1...Xm)")
    p.add_argument("--dims", type=_int_list, required=True)
    p.add_argument("--sigma", type=_int_list, required=True)
    p.add_argument("--no-scale", action="store_true", help="omit the diagonal rescaling")
    p.add_argument("--sign", type=int, choices=(-1, 1), default=None,
                   help="override the sign folded into X1")
    common(p, trials=100)

    dec = groups.add_parser("dec", help="rank-one decompositions of <n,m,p>")
    dcmds = dec.add_subparsers(dest="cmd")
    p = dcmds.add_parser("verify")
    p.add_argument("--file", required=True)
    p.add_argument("--shift", type=int, default=0, help="compare against eps^shift * T")
    p = dcmds.add_parser("circuit", help="bilinear circuit with one Mul per term")
    p.add_argument("--file", required=True)
    p.add_argument("--shift", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    circ = groups.add_parser("circuit", help="circuit utilities")
    ccmds = circ.add_subparsers(dest="cmd")
    p = ccmds.add_parser("info")
    p.add_argument("--circuit", required=True)
    p = ccmds.add_parser("grad", help="value and gradient by reverse accumulation")
    p.add_argument("--circuit", required=True)
    p.add_argument("-o", "--output", required=True)
    return ap


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None


def _load_circuit(path: str):
    try:
        return parse_acir(_read(path))
    except FormatError as e:
        raise UsageError(f"{path}: {e}") from None


def dispatch(args: argparse.Namespace) -> tuple[int, list[str]]:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    prime = getattr(args, "prime", None)
    if prime is None:
        prime = _env_int("MULTPIT_PRIME", DEFAULT_PRIME)
    check_prime(prime)
    budget = getattr(args, "budget", None)
    if budget is None:
        budget = _env_int("MULTPIT_BUDGET", DEFAULT_BUDGET)
    cfg = RunConfig(f"{args.group} {args.cmd}", prime=prime, seed=getattr(args, "seed", 0),
                    trials=getattr(args, "trials", None), budget=budget,
                    output=getattr(args, "output", None), jobs=args.jobs)
    if cfg.trials is not None and cfg.trials < 1:
        raise UsageError("--trials must be at least 1")
    key = (args.group, args.cmd)

    if key == ("pit", "params"):
        prm = params_for(args.n, args.s)
        return EXIT_OK, cfg.lines() + prm.lines()

    if key == ("pit", "check"):
        cfg.inputs = [args.circuit]
        c = _load_circuit(args.circuit)
        s_budget = c.mult_complexity() if args.s is None else args.s
        if args.mode == "rand":
            rep = pit_randomized(c, cfg.trials, prime, cfg.seed)
        else:
            rep = pit_deterministic(c, s_budget, "grid" if args.mode == "det" else
                                    "compose_then_random", rank=args.rank, budget=budget,
                                    trials=cfg.trials, prime=prime, seed=cfg.seed,
                                    jobs=args.jobs)
        return rep.exit_code, cfg.lines() + rep.lines()

    if key == ("pit", "compose"):
        cfg.inputs = [args.circuit]
        c = _load_circuit(args.circuit)
        if args.rank < 1:
            raise UsageError("--rank must be at least 1")
        g = compose_with_generator(c, args.rank)
        _write(args.output, dump_acir(g))
        return EXIT_OK, cfg.lines() + [
            f"n: {c.n_inputs}", f"rank: {args.rank}", f"seed_length: {g.n_inputs}",
            f"gates: {g.size}", f"mult_complexity: {g.mult_complexity()}",
            f"degree_bound: {max(g.degree_bound(), default=0)}"]

    if key == ("pit", "ideal"):
        cfg.inputs = [args.circuit]
        c = _load_circuit(args.circuit)
        rep = ideal_membership_probabilistic(c, args.r, cfg.trials, prime, cfg.seed)
        return rep.exit_code, cfg.lines() + rep.lines()

    if key == ("lemma31", "verify"):
        rep = verify_projection_identity(args.dims, args.sigma, cfg.trials, prime, cfg.seed,
                                         jobs=args.jobs, scale=not args.no_scale,
                                         sign=args.sign)
        lines = cfg.lines() + [x for x in rep.lines() if not x.startswith("result:")]
        ok = rep.passed
        if sum(args.dims) <= SYMBOLIC_LIMIT:
            sym = verify_projection_symbolic(args.dims, args.sigma, scale=not args.no_scale,
                                             sign=args.sign)
            lines.append(f"symbolic: {'pass' if sym.passed else 'fail'}")
            ok = ok and sym.passed
        else:
            lines.append("symbolic: skipped")
        lines.append(f"result: {'pass' if ok else 'fail'}")
        return (EXIT_OK if ok else EXIT_NONZERO), lines

    if key in (("dec", "verify"), ("dec", "circuit")):
        cfg.inputs = [args.file]
        try:
            d = parse_dec(_read(args.file))
        except FormatError as e:
            raise UsageError(f"{args.file}: {e}") from None
        n, m, p = d.dims
        res = verify_decomposition(d, mm_tensor(n, m, p), args.shift)
        cfg.K = res.K
        lines = cfg.lines() + [f"tensor: {n} {m} {p}", f"terms: {d.rank}",
                               f"shift: {args.shift}", f"status: {res.status}"]
        if res.witness:
            w = res.witness
            lines += [f"witness_monomial: {w['monomial']}", f"witness_eps_power: {w['eps_power']}",
                      f"witness_got: {format_literal(w['got'])}",
                      f"witness_expected: {format_literal(w['expected'])}"]
        if not res.ok:
            return EXIT_NONZERO, lines
        if args.cmd == "circuit":
            c = decomposition_to_circuit(d, args.shift, check=False)
            _write(args.output, dump_acir(c))
            lines += [f"mult_complexity: {c.mult_complexity()}", f"gates: {c.size}"]
        return EXIT_OK, lines

    if key == ("circuit", "info"):
        cfg.inputs = [args.circuit]
        c = _load_circuit(args.circuit)
        return EXIT_OK, cfg.lines() + [
            f"n_inputs: {c.n_inputs}", f"gates: {c.size}", f"outputs: {len(c.outputs)}",
            f"mult_complexity: {c.mult_complexity()}",
            "degree_bound: " + ",".join(map(str, c.degree_bound()))]

    if key == ("circuit", "grad"):
        cfg.inputs = [args.circuit]
        c = _load_circuit(args.circuit)
        g = baur_strassen(c)
        _write(args.output, dump_acir(g))
        return EXIT_OK, cfg.lines() + [f"mult_complexity_in: {c.mult_complexity()}",
                                       f"mult_complexity_out: {g.mult_complexity()}"]

    raise UsageError("missing command; see --help")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_ERROR
    if args.version:
        print(f"multpit {__version__}")
        print(f"lower_bound: {LOWER_BOUND}")
        return EXIT_OK
    if args.group is None or getattr(args, "cmd", None) is None:
        parser.print_usage(sys.stderr)
        print("multpit: error: missing command", file=sys.stderr)
        return EXIT_ERROR
    try:
        code, lines = dispatch(args)
    except (UsageError, PITError, ProjectionError, TensorError, CircuitError,
            RingError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    print("\n".join(_dedupe(lines)))
    return code


def _dedupe(lines: list[str]) -> list[str]:
    """Drop report lines that repeat an already echoed ``key: value``."""
    seen = set()
    out = []
    for line in lines:
        if line in seen and not line.startswith("input:"):
            continue
        seen.add(line)
        out.append(line)
    return out


if __name__ == "__main__":
    sys.exit(main())
