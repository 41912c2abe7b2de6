"""Command line entry point: ``verify``, ``sweep-tube`` and ``holcurv``.

Exit status is 0 when every selected check passes, 1 when a residual
check fails and 2 for invalid configuration.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .exceptions import ConfigError, DomainViolation
from .verification import (CHECK_NAMES, MODELS, RunConfig, dumps, holomorphic_samples,
                           run_verification, sweep_tube)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on its own; raise instead so main() owns the exit path
    def error(self, message):
        raise ConfigError(message)


def _common(p: argparse.ArgumentParser, model_default: Optional[str] = None) -> None:
    p.add_argument("--model", choices=sorted(MODELS), default=model_default,
                   required=model_default is None)
    p.add_argument("--c", type=float, default=None, help="curvature (defaults to the model's unit value)")
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--json", dest="json_path", default=None, help="write output here instead of stdout")


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-first", type=float, default=1e-8)
    p.add_argument("--tol-second", type=float, default=1e-6)
    p.add_argument("--v-override", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cotkahler", description="Numerical checks of the lifted Kaehler structure.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("verify", help="run the residual checks over seeded points")
    _common(v)
    _run_options(v)
    v.add_argument("--checks", default=None,
                   help=f"comma separated subset of: {','.join(CHECK_NAMES)}")

    s = sub.add_parser("sweep-tube", help="walk a momentum ray out to the tube boundary")
    _common(s, model_default="sphere")
    s.add_argument("--steps", type=int, default=40)
    s.add_argument("--q", default=None, help="comma separated base point (default origin)")

    h = sub.add_parser("holcurv", help="holomorphic sectional curvature samples")
    _common(h)
    _run_options(h)
    h.add_argument("--directions", type=int, default=2, help="directions per point")
    return parser


def _config(args, checks=None, directions=2) -> RunConfig:
    return RunConfig(model=args.model, c=args.c, A=args.A, n=args.dim, samples=args.samples,
                     seed=args.seed, tol_first=args.tol_first, tol_second=args.tol_second,
                     v_override=args.v_override, checks=checks, holo_directions=directions)


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _verify(args) -> int:
    checks = None
    if args.checks:
        checks = tuple(c.strip() for c in args.checks.split(",") if c.strip())
    report = run_verification(_config(args, checks))
    _emit(report.to_json(), args.json_path)
    for rec in report.checks:
        status = "skip" if rec.mode == "skipped" else ("PASS" if rec.passed else "FAIL")
        print(f"{status} {rec.name}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def _sweep(args) -> int:
    if args.model != "sphere":
        raise ConfigError("sweep-tube applies to the sphere model only")
    c = 1.0 if args.c is None else args.c
    if not args.A > 0:
        raise ConfigError("A must be positive")
    if args.dim not in (2, 3, 4):
        raise ConfigError("dimension must be 2, 3 or 4")
    if args.steps < 1:
        raise ConfigError("steps must be >= 1")
    q = None
    if args.q:
        try:
            q = [float(x) for x in args.q.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --q: {exc}") from None
        if len(q) != args.dim:
            raise ConfigError("--q must have --dim entries")
    rows = sweep_tube(c, args.A, n=args.dim, steps=args.steps, q=q)
    _emit(dumps({"c": c, "A": args.A, "t_boundary": args.A ** 2 / (2 * c), "rows": rows}), args.json_path)
    return EXIT_OK


def _holcurv(args) -> int:
    cfg = _config(args, checks=("holomorphic",), directions=args.directions)
    if not cfg.lift.is_integrable(cfg.space_form):
        raise ConfigError("holcurv needs the integrable structure (no --v-override)")
    _emit(dumps({"samples": holomorphic_samples(cfg)}), args.json_path)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        handler = {"verify": _verify, "sweep-tube": _sweep, "holcurv": _holcurv}[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainViolation as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
