"""``layercalc`` command line: ``verify``, ``solve``, ``spectrum`` and ``presets``."""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError
from .instances import list_builtin_instances
from .runner import EXIT_CONFIG, EXIT_OK, SUITES, run


def _add_run_flags(sp):
    sp.add_argument("--config", required=True, metavar="PATH", help="run configuration (JSON)")
    sp.add_argument("--out", metavar="DIR", help="directory for report.json and report.csv")
    sp.add_argument("--no-timestamp", action="store_true", help="omit the timestamp so reports are byte-stable")
    sp.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                    help="override a tolerance (repeatable)")


def build_parser():
    parser = argparse.ArgumentParser(prog="layercalc", description="Variational layer potentials: "
                                     "build instances, verify identities, solve boundary value problems.")
    parser.add_argument("--version", action="version", version=f"layercalc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("verify", help=f"run the suites listed in the config ({', '.join(SUITES)})"))
    _add_run_flags(sub.add_parser("solve", help="run the solver requests listed in the config"))
    _add_run_flags(sub.add_parser("spectrum", help="dump singular values of TrS and MD"))
    sp = sub.add_parser("presets", help="list built-in instances")
    sp.add_argument("--out", metavar="DIR", help="also write one verify config per preset into DIR")
    return parser


def preset_config(desc):
    """A verify config running every suite on a named preset."""
    return {"instance": {"preset": desc["name"]}, "suites": list(SUITES), "samples": 10, "seed": 0}


def _presets(args):
    descs = list_builtin_instances()
    print(json.dumps(descs, indent=2, sort_keys=True))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for d in descs:
            (out / f"{d['name']}.json").write_text(json.dumps(preset_config(d), indent=2) + "\n")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        return _presets(args)
    try:
        return run(args.config, mode=args.command, out=args.out, timestamp=not args.no_timestamp,
                   tol_overrides=list(args.tol))
    except ConfigError as exc:  # pragma: no cover - run() already maps these
        print(f"layercalc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
