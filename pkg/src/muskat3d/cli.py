"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
errors (unknown subcommand or flag, invalid config).
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .grid import TWO_PI
from .io import SnapshotError, read_snapshot
from .profiles import PROFILES, builtin_profile

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _print_lines(lines) -> int:
    for line in lines:
        print(line.format())
    ok = all(line.passed for line in lines)
    print("all checks passed" if ok else "some checks FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_run(args) -> int:
    from .simulation import run

    cfg = load_config(args.config)

    def progress(t, rep):
        if args.verbose:
            print(f"t={t:.6g} h2={rep.h2:.6e} K={rep.lipschitz:.6e}", file=sys.stderr)

    res = run(cfg, output_dir=args.output, progress=progress)
    for path in res.written:
        print(f"wrote {path}")
    last = res.ledger.reports[-1]
    print(f"status {res.status} at t={res.t:.6g}: h2={last.h2:.6e} h52={last.h52:.6e} K={last.lipschitz:.6e} D={res.ledger.d[-1]:.6e}")
    if res.message:
        print(res.message)
    return EXIT_OK if res.completed else EXIT_FAIL


def _cmd_identities(args) -> int:
    from .verify import identity_field, identity_suite

    f = identity_field(n=args.n, seed=args.seed, slope=args.slope)
    return _print_lines(identity_suite(f, seed=args.seed, samples=args.samples).lines())


def _cmd_norms(args) -> int:
    from .verify import norm_lines

    return _print_lines(norm_lines(args.n))


def _field_from_args(args):
    if args.snapshot:
        f, _ = read_snapshot(args.snapshot)
        return f
    params = {}
    for item in args.param or []:
        key, _, raw = item.partition("=")
        if not raw:
            raise ValueError(f"parameter {item!r} is not key=value")
        if key == "mode":
            params[key] = tuple(int(v) for v in raw.split(","))
        elif key in ("kmax", "seed"):
            params[key] = int(raw)
        else:
            params[key] = float(raw)
    return builtin_profile(args.profile, args.n, TWO_PI, **params)


def _cmd_criterion(args) -> int:
    from .verify import smallness_line

    f = _field_from_args(args)
    if args.scale != 1.0:
        f = f * args.scale
    line = smallness_line(f, args.constant)
    print(line.format())
    return EXIT_OK if line.passed else EXIT_FAIL


def _cmd_equivalence(args) -> int:
    from .verify import equivalence_suite

    res = equivalence_suite(n=args.n, count=args.count, seed=args.seed, max_slope=args.max_slope)
    for r in res.rows:
        print(
            f"seed {r.seed:3d} slope {r.slope:.3f}: m1-m2 {r.m1_vs_m2:.2e}  m1-int {r.m1_vs_integrated:.2e}"
            f"  refined {r.m1_vs_integrated_refined:.2e}"
        )
    print(f"{res.seconds:.1f} s")
    return _print_lines(res.lines())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="muskat-lab", description="Numerical laboratory for the 3D Muskat contour equation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="time-step a configured problem and write the ledger")
    r.add_argument("config", help="INI configuration file")
    r.add_argument("--output", help="override [output] directory")
    r.add_argument("-v", "--verbose", action="store_true")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("verify-identities", help="finite-difference identity checks")
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--n", type=int, default=64)
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--slope", type=float, default=1.0)
    v.set_defaults(func=_cmd_identities)

    nm = sub.add_parser("verify-norms", help="closed-form norm oracles")
    nm.add_argument("--n", type=int, default=64)
    nm.set_defaults(func=_cmd_norms)

    c = sub.add_parser("check-criterion", help="evaluate the smallness criterion for initial data")
    c.add_argument("--profile", choices=PROFILES, default="single_mode")
    c.add_argument("--param", action="append", help="profile parameter key=value (mode=1,0 for tuples)")
    c.add_argument("--snapshot", help="read the field from a snapshot instead")
    c.add_argument("--scale", type=float, default=1.0, help="multiply the field by this factor")
    c.add_argument("--n", type=int, default=64)
    c.add_argument("--constant", type=float, default=0.125)
    c.set_defaults(func=_cmd_criterion)

    e = sub.add_parser("equivalence", help="cross-formulation RHS comparison")
    e.add_argument("--n", type=int, default=128)
    e.add_argument("--count", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--max-slope", type=float, default=2.0)
    e.set_defaults(func=_cmd_equivalence)
    return p


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, SnapshotError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
