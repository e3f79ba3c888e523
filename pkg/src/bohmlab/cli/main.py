"""Command line entry point: ``bohmlab run | verify | dump-state``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from ..errors import BohmlabError, ResourceError, ValidationError
from .config import ConfigParseError, ConfigValidationError, parse_config

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_INVALID = 0, 1, 2, 3

log = logging.getLogger("bohmlab")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bohmlab", description="Trajectory-law experiments on a periodic grid.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the experiment described by a JSON config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--output", help="override the output directory")
    r.add_argument("--workers", type=int, help="worker threads (default: $BOHMLAB_WORKERS or 1)")
    r.add_argument("--figures", action="store_true", help="also write PNG figures")

    v = sub.add_parser("verify", help="run the bundled acceptance suite")
    v.add_argument("--row", action="append", dest="rows", metavar="NAME",
                   help="run only this row (repeatable)")
    v.add_argument("--suite", help="file listing row names, one per line (may be empty)")
    v.add_argument("--output", help="keep scenario artifacts in this directory")
    v.add_argument("--list", action="store_true", help="list rows and exit")
    v.add_argument("--inject-velocity-bug", action="store_true", help=argparse.SUPPRESS)

    d = sub.add_parser("dump-state", help="write the initial state as a binary snapshot")
    d.add_argument("config")
    d.add_argument("--output", help="snapshot path (default: <output>/state0.bin)")
    return p


def _run(args) -> int:
    from .run import run_config
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    res = run_config(cfg, args.output, workers=args.workers, figures=args.figures)
    out = Path(args.output or cfg.output)
    status = "PASS" if res.passed else "FAIL"
    print(f"{cfg.name}: {status}" + (f" ({res.reason})" if res.reason else "") + f" -> {out}")
    return EXIT_PASS if res.passed else EXIT_FAIL


def _verify(args) -> int:
    from .suite import row_names, run_suite
    if args.list:
        print("\n".join(row_names()))
        return EXIT_PASS
    names = args.rows
    if args.suite is not None:
        text = Path(args.suite).read_text()
        names = (names or []) + [ln.strip() for ln in text.splitlines() if ln.strip()]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = run_suite(names, velocity_factor=2.0 if args.inject_velocity_bug else 1.0,
                         output=args.output)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    failed = [r.name for r in rows if not r.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} rows passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_FAIL if failed else EXIT_PASS


def _dump_state(args) -> int:
    from ..wavefield.snapshot import dump_state
    from .build import build
    cfg = parse_config(args.config)
    b = build(cfg)
    path = Path(args.output) if args.output else Path(cfg.output) / "state0.bin"
    path.parent.mkdir(parents=True, exist_ok=True)
    dump_state(b.psi0, path)
    print(f"wrote {path}")
    return EXIT_PASS


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _run, "verify": _verify, "dump-state": _dump_state}[args.command]
    try:
        return handler(args)
    except ConfigParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigValidationError, ValidationError, ResourceError) as e:
        print(f"invalid: {e}", file=sys.stderr)
        return EXIT_INVALID
    except BohmlabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
