"""Command-line interface: ``bellrand {sweep,certify,export,compare}``.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 solver failure on
``certify``.  Sweeps record failures per row and still exit 0.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import sdp
from .bell import QUANTITIES, chsh_expression, evaluate_bell
from .guessing import CertificationError, Mode, ProgramSpec, assemble, verify_certificate
from .pipeline import certify_point
from .quantum import behavior_from_model, noise_model
from .sdpa import export_sdpa
from .sweep import DEFAULT_GRID, NOISE_KINDS, compare_ratios, comparison_csv, parse_grid, read_csv, rows_to_csv, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SOLVER = 0, 2, 3, 4


class _IOFailure(Exception):
    pass


def _unit(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"parameter must lie in [0, 1], got {value}")
    return value


def _settings(text: str) -> tuple[int, int]:
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"settings must look like x,y; got {text!r}") from None
    if x not in (0, 1) or y not in (0, 1):
        raise argparse.ArgumentTypeError(f"settings must be 0 or 1, got {text!r}")
    return x, y


def _cases(text: str) -> tuple[int, ...]:
    try:
        values = tuple(sorted({int(v) for v in text.split(",") if v.strip()}))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cases must be a list like 1,2,3; got {text!r}") from None
    if not values or not set(values) <= {1, 2, 3}:
        raise argparse.ArgumentTypeError(f"cases must be drawn from 1, 2, 3; got {text!r}")
    return values


def _grid(text: str) -> list[float]:
    try:
        return parse_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellrand", description="Certified min-entropy from Bell tests on noisy two-qubit states.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def point(p):
        p.add_argument("--noise", required=True, choices=NOISE_KINDS)
        p.add_argument("--param", required=True, type=_unit, help="visibility V or dephasing parameter p")
        p.add_argument("--case", required=True, type=int, choices=(1, 2, 3))
        p.add_argument("--settings", type=_settings, help="fixed settings x,y for cases 1 and 2 (default: best)")

    sw = sub.add_parser("sweep", help="certify a grid of noise parameters and write CSV")
    sw.add_argument("--noise", required=True, choices=NOISE_KINDS)
    sw.add_argument("--cases", type=_cases, default=(1, 2, 3))
    sw.add_argument("--grid", type=_grid, default=parse_grid(DEFAULT_GRID), help="start:step:end (default 0:0.025:1)")
    sw.add_argument("--out", required=True)
    sw.add_argument("--jobs", type=int, default=1)

    ce = sub.add_parser("certify", help="certify one point and print diagnostics")
    point(ce)
    ce.add_argument("--show-dual", action="store_true", help="print the extracted Bell expression")

    ex = sub.add_parser("export", help="write one assembled program in SDPA sparse format")
    point(ex)
    ex.add_argument("--out", required=True)

    co = sub.add_parser("compare", help="compare case-2/case-1 ratios of a white and a dephasing sweep")
    co.add_argument("--white", required=True, help="sweep CSV for white noise")
    co.add_argument("--dephasing", required=True, help="sweep CSV for dephasing noise")
    co.add_argument("--lo", type=_unit, default=0.75, help="lower end of the compared window")
    co.add_argument("--hi", type=_unit, default=0.95, help="upper end of the compared window")
    co.add_argument("--out", required=True)
    return parser


def _point(args):
    if args.case == 3 and args.settings is not None:
        raise argparse.ArgumentTypeError("--settings applies to cases 1 and 2 only")
    observed = behavior_from_model(noise_model(args.noise, args.param))
    return observed, certify_point(observed, args.case, args.settings)


def cmd_sweep(args) -> int:
    if args.jobs < 1:
        raise argparse.ArgumentTypeError("--jobs must be at least 1")
    rows = run_sweep(args.noise, args.grid, args.cases, args.jobs)
    _write(args.out, rows_to_csv(rows))
    failed = sum(r.status == "failed" for r in rows)
    print(f"wrote {len(rows)} rows to {args.out}" + (f" ({failed} failed)" if failed else ""))
    return EXIT_OK


def cmd_certify(args) -> int:
    try:
        observed, result = _point(args)
    except CertificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    check = verify_certificate(result.dual, result.spec)
    settings = "all" if result.settings is None else "{},{}".format(*result.settings)
    print(f"noise        {args.noise}")
    print(f"param        {args.param:.12g}")
    print(f"case         {args.case}")
    print(f"chsh         {evaluate_bell(chsh_expression(), observed):.12g}")
    print(f"settings     {settings}")
    print(f"g_upper      {result.guessing_upper:.12g}")
    print(f"hmin_bits    {result.hmin_bits:.12g}")
    print(f"gap          {result.gap:.3e}")
    print(f"status       {result.status} ({result.source})")
    print(f"iterations   {result.report.iterations}")
    print(f"certificate  {'verified' if check.ok else 'FAILED'} (min eigenvalue {check.margin:.3e})")
    if args.show_dual:
        coeffs = result.dual.coefficients
        print("dual Bell expression  G <= offset + sum c_q <q>")
        for name, value in zip(QUANTITIES[1:], coeffs):
            print(f"  c[{name}] = {value:+.12g}")
        print(f"  offset = {result.dual.offset:+.12g}")
    if result.status in (sdp.Status.NUMERICAL_TROUBLE.value, sdp.Status.INFEASIBLE.value) or not check.ok:
        return EXIT_SOLVER
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        _, result = _point(args)
    except CertificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    mode = Mode.from_case(args.case)
    spec = ProgramSpec(mode, result.spec.observed, result.settings)
    problem = assemble(spec).problem
    _write(args.out, export_sdpa(problem))
    print(f"wrote {args.out}: {len(problem.blocks)} blocks, {problem.num_vars} variables, {problem.num_eq} equalities")
    print(f"internal objective {result.report.primal_objective:.12g} (dual {result.report.dual_objective:.12g})")
    print("SDPA minimizes the negated objective, so an external solver reports the negative of these values")
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        white = read_csv(_read(args.white))
        dephasing = read_csv(_read(args.dephasing))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    lo, hi = args.lo, args.hi
    items = compare_ratios(white, dephasing, lo=lo, hi=hi)
    _write(args.out, comparison_csv(items))
    ahead = sum(it.difference > 0 for it in items)
    print(f"dephasing ratio above white ratio at {ahead} of {len(items)} shared points in [{lo:g}, {hi:g}]")
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "certify": cmd_certify, "export": cmd_export, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
