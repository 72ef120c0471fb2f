"""Command-line front end: ``basisc check|run|lower|eval|driver|post``.

Exit codes: 0 ok, 1 parse or I/O error, 2 type error (the error code is
printed on stderr), 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import basis, post
from .classical import eval_classical
from .drivers import DRIVERS, DriverConfig, run_driver
from .errors import BasiscError, IoError, TypeCheckError
from .parser import parse_expression, parse_file
from .simulator import DEFAULT_CAP, final_state, lower_function, run_kernel
from .syntax import Program, Var
from .typecheck import BitsValue, FuncRef, IntValue, check_program, monomorphize


def _pairs(values: Sequence[str], flag: str) -> dict[str, str]:
    out = {}
    for item in values or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise IoError(f"{flag} expects NAME=VALUE, got {item!r}")
        out[name.strip()] = value.strip()
    return out


def _bindings(args) -> dict[str, int]:
    out = {}
    for name, value in _pairs(args.set, "--set").items():
        try:
            out[name] = int(value, 0)
        except ValueError:
            raise IoError(f"--set {name} needs an integer, got {value!r}") from None
    return out


def capture_value(text: str):
    """``--arg`` values: 0/1 strings are bits, other numbers integers, names functions."""
    if text.startswith("0b"):
        text = text[2:]
    if text and set(text) <= {"0", "1"}:
        return BitsValue(tuple(int(c) for c in text))
    if text.isdigit():
        return IntValue(int(text))
    if text.isidentifier():
        return FuncRef(text)
    raise IoError(f"cannot read capture value {text!r}")


def _phases(path: str | None) -> list[float] | None:
    if path is None:
        return None
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise IoError(f"{path}: not JSON ({exc.msg})") from None
    if not isinstance(data, list) or not all(isinstance(x, (int, float)) for x in data):
        raise IoError(f"{path}: expected a JSON array of radians")
    return [float(x) for x in data]


def _default_entry(program: Program) -> str:
    kernels = [d.name for d in program.definitions if not d.is_classical]
    if not kernels:
        raise IoError("no qpu kernel in the file; pass --entry")
    return kernels[-1]


def _compile(args, entry: str | None = None) -> Program:
    program = parse_file(args.file)
    name = entry or args.entry or _default_entry(program)
    captures = {k: capture_value(v) for k, v in _pairs(args.arg, "--arg").items()}
    mono = monomorphize(program, name, _bindings(args), captures, _phases(args.phases))
    check_program(mono)
    return mono


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------- commands

def cmd_check(args) -> int:
    program = parse_file(args.file)
    if args.entry:
        entries = [args.entry]
    else:
        # generic definitions are checked through the closed kernels that use them
        entries = [d.name for d in program.definitions if not d.dims and not d.captures]
    for name in entries:
        _compile(args, name)
    _emit(args, {"ok": True, "checked": entries}, f"ok ({len(entries)} checked)")
    return 0


def cmd_run(args) -> int:
    program = _compile(args)
    hist = run_kernel(program, args.shots, args.seed, args.max_qubits)
    if args.format == "json":
        print(hist.to_json())
    else:
        width = max((len(b) for b in hist.counts), default=1)
        lines = [f"{b:<{width}}  {c:>{len(str(hist.shots))}}" for b, c in sorted(hist.counts.items())]
        print("\n".join([f"shots={hist.shots} seed={hist.seed}", *lines]))
    return 0


def _complex_pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def cmd_lower(args) -> int:
    if args.file:
        program = parse_file(args.file)
        if args.expr is None:
            program = _compile(args)
            target = Var(program.entry)
        else:
            target = parse_expression(args.expr, frozenset(program.names()))
    else:
        if args.expr is None:
            raise IoError("lower needs an expression or --file")
        program = Program(())
        target = parse_expression(args.expr)
    if args.expr is not None and args.file:
        from .typecheck.checker import check_expression
        check_expression(target, program)
    matrix = lower_function(program, target, args.max_qubits)
    k = int(matrix.shape[0]).bit_length() - 1
    if args.format == "json":
        print(json.dumps({"matrix": _complex_pairs(matrix), "qubits": k}, sort_keys=True))
    else:
        with np.printoptions(precision=6, suppress=True, linewidth=120):
            print(f"qubits={k}\n{matrix}")
    return 0


def cmd_state(args) -> int:
    program = _compile(args)
    amps = final_state(program, seed=args.seed, cap=args.max_qubits)
    k = int(amps.size).bit_length() - 1
    if args.format == "json":
        print(json.dumps({"amplitudes": [[float(z.real), float(z.imag)] for z in amps],
                          "qubits": k}, sort_keys=True))
    else:
        for i, z in enumerate(amps):
            if abs(z) > 1e-12:
                print(f"{i:0{k}b}  {z.real:+.6f}{z.imag:+.6f}j")
    return 0


def cmd_eval(args) -> int:
    program = _compile(args, args.function)
    out = eval_classical(program.get(program.entry), args.input)
    _emit(args, {"input": args.input, "output": out}, out)
    return 0


def cmd_driver(args) -> int:
    cfg = DriverConfig(bindings=_bindings(args), args=_pairs(args.arg, "--arg"),
                       shots=args.shots, seed=args.seed, cap=args.max_qubits,
                       phases=_phases(args.phases))
    result = run_driver(args.name, cfg)
    payload = {"answer": result.answer, "invocations": result.invocations,
               "oracle_calls": result.oracle_calls, "seed": args.seed}
    _emit(args, payload, result.answer)
    return 0


def cmd_post(args) -> int:
    op, values = args.op, args.values
    if op == "frac":
        out = str(post.as_bin_frac(values[0]))
    elif op == "convergents":
        out = " ".join(str(c) for c in post.cfrac_convergents(Fraction(values[0])))
    elif op == "denominator":
        cs = post.cfrac_convergents(Fraction(values[0]))
        out = str(post.last_convergent_with_denominator_below(cs, int(values[1])))
    elif op == "gf2":
        out = post.gf2_solve_nullspace(values)
    elif op == "grover":
        out = str(post.grover_iterations(int(values[0]), int(values[1]) if len(values) > 1 else 1))
    elif op == "lcm":
        out = str(post.lcm(*map(int, values)))
    elif op == "modinv":
        out = str(post.modinv(int(values[0]), int(values[1])))
    else:
        raise IoError(f"unknown post operation {op!r}")
    _emit(args, {"op": op, "result": out}, out)
    return 0


# ------------------------------------------------------------------ parser

def _common(p: argparse.ArgumentParser, program: bool = True) -> None:
    if program:
        p.add_argument("--entry", help="kernel or function to start from")
        p.add_argument("--phases", metavar="FILE", help="JSON array of radians for phases[k]")
    p.add_argument("--set", action="append", metavar="NAME=INT", help="bind a dimension variable")
    p.add_argument("--arg", action="append", metavar="NAME=VALUE", help="bind a capture")
    p.add_argument("--shots", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=basis.TOL)
    p.add_argument("--max-qubits", type=int, default=DEFAULT_CAP)
    p.add_argument("--format", choices=("json", "text"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="basisc", description="Basis-oriented quantum programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse, specialize and type-check a file")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="sample a kernel and print a histogram")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("state", help="print the final amplitudes of a qubit-returning kernel")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("lower", help="print the unitary of a reversible function")
    p.add_argument("expr", nargs="?")
    p.add_argument("--file")
    _common(p)
    p.set_defaults(func=cmd_lower)

    p = sub.add_parser("eval", help="run a classical function on a bit string")
    p.add_argument("file")
    p.add_argument("function")
    p.add_argument("input")
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("driver", help="run a built-in algorithm end to end")
    p.add_argument("name", choices=sorted(DRIVERS))
    _common(p)
    p.set_defaults(func=cmd_driver, shots=None)

    p = sub.add_parser("post", help="classical post-processing helpers")
    p.add_argument("op", choices=("frac", "convergents", "denominator", "gf2", "grover",
                                  "lcm", "modinv"))
    p.add_argument("values", nargs="+")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_post)
    return parser


_DRIVER_SHOTS = {"deutsch": 16, "dj": 16, "bv": 16, "qpe": 64, "grover": 256,
                 "fixpoint": 256, "match": 256}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "text" if args.command == "driver" else "json"
    if args.command == "driver" and args.shots is None:
        args.shots = _DRIVER_SHOTS.get(args.name, 1)
    if getattr(args, "shots", 1) < 1:
        parser.error("--shots must be at least 1")
    saved = basis.TOL
    basis.TOL = getattr(args, "tol", saved)
    try:
        return args.func(args)
    except TypeCheckError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return 1
    except BasiscError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    finally:
        basis.TOL = saved


if __name__ == "__main__":
    sys.exit(main())
