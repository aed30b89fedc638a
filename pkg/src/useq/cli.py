"""Command-line front end.

Exit codes: 0 success / all pass, 1 identity violation, 2 usage or config
error, 3 expression error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time
from fractions import Fraction
from typing import Iterable, Sequence

from . import expr, identities
from .errors import UsageError
from .sequences import (
    FIBONACCI,
    Family,
    format_rational,
    parse_rational,
    resolve,
    term,
    term_fast,
    term_range,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_EVAL = 0, 1, 2, 3

NAMED_FAMILIES = [f.value for f in (Family.FIBONACCI, Family.LUCAS, Family.PELL, Family.PELL_LUCAS)]
IDENTITY_NAMES = [i.value for i in identities.IdentityId]

# long options whose value may start with "-" (e.g. --c -7/4, --a -2..2)
_VALUE_FLAGS = {"--a", "--b", "--r", "--c", "--m", "--bind", "--config", "--reps", "--workers"}


class Writer:
    """Renders records as plain text, csv (header on first record) or jsonl."""

    def __init__(self, fmt: str, out=None):
        self.fmt = fmt
        self.out = out or sys.stdout
        self._csv = csv.writer(self.out, lineterminator="\n") if fmt == "csv" else None
        self._header: tuple | None = None

    def record(self, record: dict, plain: str):
        if self.fmt == "plain":
            print(plain, file=self.out)
        elif self.fmt == "jsonl":
            print(json.dumps(record), file=self.out)
        else:
            header = tuple(record)
            if header != self._header:
                if self._header is not None:
                    self.out.write("\n")
                self._csv.writerow(header)
                self._header = header
            self._csv.writerow([cell(v) for v in record.values()])


def cell(value) -> str:
    """csv rendering of a record value."""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except UsageError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _params(args):
    if args.family is not None:
        return resolve(args.family, a=args.a, b=args.b, r=args.r)
    return resolve(Family.CUSTOM, a=args.a, b=args.b, r=args.r)


def _params_record(params) -> dict:
    return {"a": format_rational(params.a), "b": format_rational(params.b),
            "r": format_rational(params.r)}


def cmd_term(args, out: Writer) -> int:
    params = _params(args)
    value = term_fast(params, args.n)
    text = format_rational(value)
    out.record({**_params_record(params), "n": args.n, "value": text}, text)
    return EXIT_OK


def cmd_table(args, out: Writer) -> int:
    params = _params(args)
    for n, value in zip(range(args.lo, args.hi + 1), term_range(params, args.lo, args.hi)):
        text = format_rational(value)
        out.record({"n": n, "value": text}, f"{n}\t{text}")
    return EXIT_OK


def _plain_report(report: identities.IdentityReport) -> str:
    rec = report.as_record()
    head = ["PASS" if report.passed else "FAIL"]
    if "identity" in rec:
        head.append(rec["identity"])
        head.extend(f"{k}={rec[k]}" for k in ("a", "b", "r", "c", "m"))
    return (f"{' '.join(head)}: lhs={rec['lhs']} rhs={rec['rhs']} "
            f"residual={rec['residual']}")


def cmd_verify(args, out: Writer) -> int:
    instance = identities.IdentityInstance.create(
        args.identity, args.m, a=args.a, b=args.b, r=args.r, c=args.c)
    report = identities.evaluate(instance)
    out.record(report.as_record(), _plain_report(report))
    return EXIT_OK if report.passed else EXIT_FAIL


def _sweep_config(args) -> identities.SweepConfig:
    mapping: dict[str, str] = {}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as err:
            raise UsageError(f"cannot read config: {err}") from None
        base = identities.SweepConfig.from_text(text)
        mapping["identity"] = base.identity.value
        for key in ("a", "b", "r", "c", "m"):
            values = getattr(base, key)
            if values is not None:
                mapping[key] = ",".join(format_rational(Fraction(v)) for v in values)
    if args.identity:
        mapping["identity"] = args.identity
    for key in ("a", "b", "r", "c", "m"):
        value = getattr(args, key)
        if value is not None:
            mapping[key] = value
    return identities.SweepConfig.from_mapping(mapping)


def cmd_sweep(args, out: Writer) -> int:
    config = _sweep_config(args)
    stream = identities.sweep(config, workers=args.workers)
    summary = None
    for item in stream:
        if isinstance(item, identities.SweepSummary):
            summary = item
        elif not args.quiet:
            out.record(item.as_record(), _plain_report(item))
    out.record(summary.as_record(),
               f"total={summary.total} passed={summary.passed} failed={summary.failed}")
    return EXIT_OK if summary.failed == 0 else EXIT_FAIL


def _bindings(pairs: Sequence[str]) -> dict[str, Fraction]:
    env: dict[str, Fraction] = {}
    for pair in pairs or ():
        name, sep, value = pair.partition("=")
        name = name.strip()
        if not sep or not name.isidentifier():
            raise UsageError(f"--bind expects name=value, got {pair!r}")
        if name in env:
            raise UsageError(f"variable {name!r} bound twice")
        env[name] = parse_rational(value)
    return env


def cmd_eval(args, out: Writer) -> int:
    env = _bindings(args.bind)
    if args.equal:
        if args.expression is not None:
            raise UsageError("give either an expression or --equal LHS RHS, not both")
        lhs, rhs = args.equal
        report = expr.check_equal(lhs, rhs, env)
        record = {"lhs_expr": lhs, "rhs_expr": rhs, **report.as_record()}
        out.record(record, _plain_report(report))
        return EXIT_OK if report.passed else EXIT_FAIL
    if args.expression is None:
        raise UsageError("eval needs an expression or --equal LHS RHS")
    text = format_rational(expr.evaluate(args.expression, env))
    out.record({"expression": args.expression, "value": text}, text)
    return EXIT_OK


def decimal_digits(value: int) -> int:
    value = abs(value)
    if value == 0:
        return 1
    guess = int(value.bit_length() * math.log10(2))
    while 10 ** guess > value:
        guess -= 1
    while 10 ** (guess + 1) <= value:
        guess += 1
    return guess + 1


def _timed(fn, reps: int):
    best, result = math.inf, None
    for _ in range(reps):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return result, best


def cmd_bench(args, out: Writer) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if not args.n or any(n < 1 for n in args.n):
        raise UsageError("bench needs positive indices")
    status = EXIT_OK
    for n in args.n:
        slow, slow_t = _timed(lambda: term(FIBONACCI, n), args.reps)
        fast, fast_t = _timed(lambda: term_fast(FIBONACCI, n), args.reps)
        agree = slow == fast
        if not agree:
            status = EXIT_FAIL
        digits = decimal_digits(fast.numerator)
        record = {"n": n, "digits": digits, "iterative_s": f"{slow_t:.6f}",
                  "fast_s": f"{fast_t:.6f}", "agree": agree}
        out.record(record, f"n={n} digits={digits} iterative={slow_t:.6f}s "
                           f"fast={fast_t:.6f}s {'agree' if agree else 'MISMATCH'}")
    return status


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["plain", "csv", "jsonl"], default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="useq", parents=[common],
        description="Exact terms of U(n) = r U(n-1) + U(n-2) and its weighted-sum identities.")
    parser.set_defaults(format="plain", quiet=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def family_args(p):
        p.add_argument("family", nargs="?", choices=NAMED_FAMILIES)
        p.add_argument("--a", type=_rational)
        p.add_argument("--b", type=_rational)
        p.add_argument("--r", type=_rational)

    p = sub.add_parser("term", parents=[common], help="one term U(n)")
    family_args(p)
    p.add_argument("-n", type=int, required=True)
    p.set_defaults(run=cmd_term)

    p = sub.add_parser("table", parents=[common], help="terms U(lo..hi)")
    family_args(p)
    p.add_argument("lo", type=int)
    p.add_argument("hi", type=int)
    p.set_defaults(run=cmd_table)

    p = sub.add_parser("verify", parents=[common], help="check one identity instance")
    p.add_argument("identity", choices=IDENTITY_NAMES)
    for name in ("a", "b", "r", "c"):
        p.add_argument(f"--{name}", type=_rational)
    p.add_argument("-m", type=int, required=True)
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="check an identity over a grid")
    p.add_argument("identity", nargs="?", choices=IDENTITY_NAMES)
    p.add_argument("--config", help="key = value file with identity, a, b, r, c, m")
    for name in ("a", "b", "r", "c", "m"):
        p.add_argument(f"--{name}", help="lo..hi or comma list")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(run=cmd_sweep)

    p = sub.add_parser("eval", parents=[common], help="evaluate an expression exactly")
    p.add_argument("expression", nargs="?")
    p.add_argument("--equal", nargs=2, metavar=("LHS", "RHS"))
    p.add_argument("--bind", action="append", metavar="NAME=VALUE")
    # let "-2^2" or "-(m+1)" through as an expression; bare words like -h stay options
    p._negative_number_matcher = re.compile(r"^-(?![A-Za-z-]*$)")
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="time iterative vs logarithmic Fibonacci")
    p.add_argument("n", type=int, nargs="+")
    p.add_argument("--reps", type=int, default=1)
    p.set_defaults(run=cmd_bench)
    return parser


def _join_flag_values(argv: Iterable[str]) -> list[str]:
    argv = list(argv)
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and argv[i + 1] not in _VALUE_FLAGS:
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_flag_values(sys.argv[1:] if argv is None else argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    out = Writer(args.format)
    try:
        return args.run(args, out)
    except UsageError as err:
        print(f"useq {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except expr.ExprError as err:
        print(f"useq {args.command}: error: {err}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
