"""Command line entry point.

Subcommands select pipeline stages; every run reads a JSON config and
writes CSV/JSON artifacts plus a manifest into the output directory.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

import argparse
import sys

from .config import ExperimentConfig
from .errors import ArtifactError, ConfigError, NumericalError
from .pipeline import run_all, run_chains, run_comparison, run_ferry, run_pipeline

_STAGE_COMMANDS = {
    "critical": ["critical"],
    "weakkam": ["weakkam"],
    "barrier": ["barrier"],
    "aubry": ["aubry"],
    "quotient": ["quotient"],
    "dimension": ["dimension"],
    "regularize": ["regularize"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakkam",
        description="Weak KAM / Aubry-Mather experiments on discretized tori.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = list(_STAGE_COMMANDS) + ["mane-compare", "chains", "regularize",
                                        "ferry", "all"]
    for name in dict.fromkeys(commands):
        p = sub.add_parser(name, help=f"run the {name} stage(s)")
        p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker hint; sweeps are vectorized, so this only "
                            "caps BLAS-style pools")
        if name == "ferry":
            p.add_argument("--points", default=None, help="points CSV overriding the config")
            p.add_argument("--p", type=float, default=None, help="chain exponent override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
        if args.command in _STAGE_COMMANDS:
            manifest = run_pipeline(cfg, _STAGE_COMMANDS[args.command], out_dir=args.out)
        elif args.command == "mane-compare":
            manifest = run_comparison(cfg, out_dir=args.out)
        elif args.command == "chains":
            manifest = run_chains(cfg, out_dir=args.out)
        elif args.command == "ferry":
            manifest = run_ferry(cfg, points_path=args.points, p=args.p, out_dir=args.out)
        else:
            manifest = run_all(cfg, out_dir=args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except (ArtifactError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 4
    stages = ", ".join(manifest["stages"])
    print(f"ok: wrote {len(manifest['checksums'])} files for stages [{stages}]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
