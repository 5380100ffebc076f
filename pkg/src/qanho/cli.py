"""``qanho`` command-line front end.

Subcommands::

    qanho ground-state [--digits D] [--xi X] [--terms N] [--working-digits W]
                       [--checkpoint PATH] [--resume] [--out PATH|-] [--json|--text]
    qanho hill         [--states N] [--eigenvalues K] [--working-digits W] ...
    qanho curves       [--terms N] [--lambda-min A --lambda-max B --count C
                        --x-max M --samples S] [--working-digits W] ...
    qanho eigvec-map   [--states N] [--working-digits W] [--out PATH|-]
    qanho verify       --digits-file PATH
    qanho bench        [--digits D] [--out PATH|-]

``--json`` and ``--text`` optionally take the output path themselves, so
``--json -`` and ``--out - --json`` are equivalent.  Exit status is 0 on
success, 1 when a computation (or verification) fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from . import __version__
from .basis import sample_curves
from .bound import default_schedule, Schedule, staged_ground_state, certified_digits
from .errors import QanhoError
from .hill import EVEN, build_hamiltonian, default_working_digits, eigenvector_matrix, lowest_eigenvalues
from .precision import make_context, outward_decimal
from .report import (
    RunReport,
    compare_digits,
    emit_curves_csv,
    emit_pgm,
    emit_report,
    REFERENCE_TEMPLATE,
)

logger = logging.getLogger("qanho")

# digits gained per even-parity state, used to size Hill precision
HILL_DIGITS_PER_STATE = 0.2


class UsageError(Exception):
    pass


def _decimal(text: str) -> str:
    try:
        Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}")
    return text


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _output_args(p: argparse.ArgumentParser, formats: bool = True) -> None:
    p.add_argument("--out", metavar="PATH", help="output file, '-' for stdout (default)")
    if formats:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--json", nargs="?", const="-", metavar="PATH", help="JSON report (default)")
        g.add_argument("--text", nargs="?", const="-", metavar="PATH", help="human-readable report")
        p.add_argument("--no-timings", action="store_true", help="omit wall-clock timings from the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qanho", description="Certified digits of the x^4 oscillator ground state")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gs = sub.add_parser("ground-state", help="staged power-series bracketing")
    gs.add_argument("--digits", type=_positive_int, default=120)
    gs.add_argument("--xi", type=_decimal, help="override xi of the final stage")
    gs.add_argument("--terms", type=_positive_int, help="override the truncation order of the final stage")
    gs.add_argument("--working-digits", type=_positive_int, help="override working digits of the final stage")
    gs.add_argument("--checkpoint", metavar="PATH")
    gs.add_argument("--resume", action="store_true", help="continue after the stage stored in --checkpoint")
    _output_args(gs)

    hl = sub.add_parser("hill", help="Hill-determinant eigenvalues (even parity block)")
    hl.add_argument("--states", type=_positive_int, default=100, help="even-parity basis states")
    hl.add_argument("--eigenvalues", type=_positive_int, default=1)
    hl.add_argument("--working-digits", type=_positive_int)
    _output_args(hl)

    cv = sub.add_parser("curves", help="CSV data of y_n and y_n' over a lambda sweep")
    cv.add_argument("--terms", type=_positive_int, default=80)
    cv.add_argument("--lambda-min", type=_decimal, default="1.05")
    cv.add_argument("--lambda-max", type=_decimal, default="1.08")
    cv.add_argument("--count", type=_positive_int, default=10)
    cv.add_argument("--x-max", type=_decimal, default="4")
    cv.add_argument("--samples", type=_positive_int, default=200)
    cv.add_argument("--working-digits", type=_positive_int, default=30)
    _output_args(cv, formats=False)

    em = sub.add_parser("eigvec-map", help="PGM heatmap of the Hill eigenvector matrix")
    em.add_argument("--states", type=_positive_int, default=100, help="basis states phi_0 .. phi_{N-1}")
    em.add_argument("--working-digits", type=_positive_int, default=30)
    _output_args(em, formats=False)

    vf = sub.add_parser("verify", help="re-check a JSON report against the published value")
    vf.add_argument("--digits-file", required=True, metavar="PATH")

    bn = sub.add_parser("bench", help="per-stage timing table")
    bn.add_argument("--digits", type=_positive_int, default=120)
    _output_args(bn, formats=False)
    return parser


def _resolve_output(args) -> tuple:
    fmt, path = "json", None
    if getattr(args, "text", None) is not None:
        fmt, path = "text", args.text
    elif getattr(args, "json", None) is not None:
        path = args.json
    if args.out is not None:
        if path not in (None, "-") and path != args.out:
            raise UsageError(f"conflicting output paths {path!r} and {args.out!r}")
        path = args.out
    return fmt, path or "-"


def _write(data: bytes, path: str, stdout) -> None:
    if path == "-":
        stdout.write(data)
        stdout.flush()
    else:
        Path(path).write_bytes(data)


def _schedule_with_overrides(args) -> Optional[Schedule]:
    if args.xi is None and args.terms is None and args.working_digits is None:
        return None
    if args.terms is not None and args.terms % 2:
        raise UsageError("--terms must be even")
    if args.xi is not None and Fraction(args.xi) <= 0:
        raise UsageError("--xi must be positive")
    base = default_schedule(args.digits)
    last = base.stages[-1]
    changes = {}
    if args.xi is not None:
        changes["xi"] = args.xi
    if args.terms is not None:
        changes["n"] = args.terms
    if args.working_digits is not None:
        changes["working_digits"] = args.working_digits
    try:
        return Schedule(base.stages[:-1] + (replace(last, **changes),))
    except ValueError as exc:
        raise UsageError(str(exc))


def _cmd_ground_state(args, stdout) -> int:
    if args.resume and not args.checkpoint:
        raise UsageError("--resume needs --checkpoint")
    fmt, path = _resolve_output(args)
    schedule = _schedule_with_overrides(args)
    res = staged_ground_state(args.digits, schedule, args.checkpoint, resume=args.resume)
    b = res.bracket
    ndig = b.lo.ctx.effective_digits
    report = RunReport(
        method="series",
        n=b.n,
        xi=b.xi,
        working_digits=ndig,
        lo=outward_decimal(b.lo, ndig, "down"),
        hi=outward_decimal(b.hi, ndig, "up"),
        certified_digits=res.digits,
        certified_count=res.certified_count,
        reference_match=compare_digits(res.digits) if res.digits else 0,
        timings=[round(t, 6) for t in res.elapsed],
    )
    _write(emit_report(report, fmt, not args.no_timings), path, stdout)
    return 0


def _cmd_hill(args, stdout) -> int:
    fmt, path = _resolve_output(args)
    N, k = args.states, args.eigenvalues
    if k > N:
        raise UsageError("--eigenvalues cannot exceed --states")
    digits = args.working_digits or default_working_digits(HILL_DIGITS_PER_STATE * N)
    ctx = make_context(digits)
    t0 = time.perf_counter()
    M = build_hamiltonian(N, EVEN, ctx)
    brackets = lowest_eigenvalues(M, k, ctx, f"1e-{max(ctx.decimal_digits - 10, ctx.decimal_digits // 2)}")
    elapsed = time.perf_counter() - t0
    ground = brackets[0]
    text, count = certified_digits(ground)
    ndig = ctx.effective_digits
    report = RunReport(
        method="hill",
        states=N,
        working_digits=ndig,
        lo=outward_decimal(ground.lo, ndig, "down"),
        hi=outward_decimal(ground.hi, ndig, "up"),
        certified_digits=text,
        certified_count=count,
        reference_match=compare_digits(text) if text else 0,
        eigenvalues=[[outward_decimal(b.lo, ndig, "down"), outward_decimal(b.hi, ndig, "up")] for b in brackets],
        timings=[round(elapsed, 6)],
    )
    _write(emit_report(report, fmt, not args.no_timings), path, stdout)
    return 0


def _cmd_curves(args, stdout) -> int:
    if args.terms % 2 or args.terms < 4:
        raise UsageError("--terms must be even and >= 4")
    if Fraction(args.lambda_min) >= Fraction(args.lambda_max):
        raise UsageError("--lambda-min must be below --lambda-max")
    if args.count < 2 or args.samples < 2:
        raise UsageError("--count and --samples must be >= 2")
    if Fraction(args.x_max) <= 0:
        raise UsageError("--x-max must be positive")
    ctx = make_context(max(args.working_digits, 20))
    curves = sample_curves(args.terms, args.lambda_min, args.lambda_max, args.count, args.x_max, args.samples, ctx)
    _write(emit_curves_csv(curves), args.out or "-", stdout)
    return 0


def _cmd_eigvec_map(args, stdout) -> int:
    if args.states < 2:
        raise UsageError("--states must be >= 2")
    ctx = make_context(args.working_digits)
    m = eigenvector_matrix(args.states, ctx, f"1e-{ctx.decimal_digits // 2}")
    _write(emit_pgm(m), args.out or "-", stdout)
    return 0


def verify_report(data: dict) -> List[str]:
    """Problems found in a report dictionary (empty when it checks out)."""
    problems = []
    try:
        r = RunReport(**data)
    except (TypeError, ValueError) as exc:
        return [f"malformed report: {exc}"]
    digits = r.certified_digits
    if r.certified_count and not digits:
        problems.append("certified_count without certified digits")
    if digits:
        n_digits = sum(ch.isdigit() for ch in digits)
        if n_digits != r.certified_count:
            problems.append(f"certified_count {r.certified_count} != {n_digits} digits in the string")
        for name, end in (("lo", r.lo), ("hi", r.hi)):
            if compare_digits(end, digits) < n_digits:
                problems.append(f"{name} does not start with the certified digits")
        match = compare_digits(digits)
        if match != r.reference_match:
            problems.append(f"reference_match {r.reference_match} != recomputed {match}")
        if r.method == "series":
            known = sum(ch.isdigit() for ch in REFERENCE_TEMPLATE[: len(digits)])
            if match < known:
                problems.append(f"certified digits disagree with the published value after {match} digits")
    return problems


def _cmd_verify(args, stdout) -> int:
    try:
        data = json.loads(Path(args.digits_file).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        stdout.write(f"FAIL: cannot read {args.digits_file}: {exc}\n".encode())
        return 1
    problems = verify_report(data) if isinstance(data, dict) else ["report is not a JSON object"]
    if problems:
        stdout.write("".join(f"FAIL: {p}\n" for p in problems).encode())
        return 1
    stdout.write(f"ok: {data['certified_count']} certified digits, {data['reference_match']} match the published value\n".encode())
    return 0


def _cmd_bench(args, stdout) -> int:
    rows = []

    def record(b, ctx, dt):
        rows.append((b.stage, b.xi, b.n, ctx.effective_digits, certified_digits(b)[1], dt))

    staged_ground_state(args.digits, on_stage=record)
    lines = [f"{'stage':>5} {'xi':>6} {'n':>7} {'digits':>7} {'certified':>9} {'seconds':>9}"]
    for stage, xi, n, digits, cert, dt in rows:
        lines.append(f"{stage:>5} {xi:>6} {n:>7} {digits:>7} {cert:>9} {dt:>9.3f}")
    lines.append(f"total {sum(r[-1] for r in rows):.3f}s")
    _write(("\n".join(lines) + "\n").encode(), args.out or "-", stdout)
    return 0


_COMMANDS = {
    "ground-state": _cmd_ground_state,
    "hill": _cmd_hill,
    "curves": _cmd_curves,
    "eigvec-map": _cmd_eigvec_map,
    "verify": _cmd_verify,
    "bench": _cmd_bench,
}


def run_cli(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    """Run one subcommand and return its exit status."""
    stdout = stdout if stdout is not None else sys.stdout.buffer
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        stderr.write(f"qanho {args.command}: error: {exc}\n")
        return 2
    except QanhoError as exc:
        stderr.write(f"qanho {args.command}: {exc}\n")
        if getattr(args, "checkpoint", None):
            stderr.write(f"last good checkpoint: {args.checkpoint}\n")
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
