"""Command line runner.

    bdgkit run [--config PATH] [--suite NAME ...] [--seed N] [--out PATH]
               [--format csv|json] [--p LIST] [--cap C]
    bdgkit davis-dump [--seed N] [--branching B] [--horizon T] [--dim D]
                      [--jump-law LAW] [--out PATH]

``run`` is implied when the first argument is an option.  Exit codes:
0 all rows pass, 1 some row fails, 2 bad configuration, 3 capacity
exceeded, 4 input/output error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .davis import davis_decompose
from .errors import BdgError, CapacityError, ConfigError
from .prob_space import DEFAULT_ATOM_CAP, JumpLaw, MartingaleSpec, generate_martingale
from .reports import to_csv, to_json
from .serialize import space_to_dict
from .suites import SUITES, ExperimentConfig, run_suites

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_IO = 4


def _p_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad p list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bdgkit", description="BDG inequality verification suites")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run verification suites")
    run.add_argument("--config", type=Path)
    run.add_argument("--suite", action="append", choices=SUITES, dest="suites")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path)
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--p", type=_p_list, dest="p_values")
    run.add_argument("--cap", type=float, help="constant used where no tracked constant exists")

    dump = sub.add_parser("davis-dump", aliases=["davis"], help="decompose a generated martingale and write it as JSON")
    dump.add_argument("--seed", type=int, default=0)
    dump.add_argument("--branching", type=int, default=2)
    dump.add_argument("--horizon", type=int, default=3)
    dump.add_argument("--dim", type=int, default=1)
    dump.add_argument("--jump-law", choices=[law.value for law in JumpLaw], default=JumpLaw.RADEMACHER.value)
    dump.add_argument("--scale", type=float, default=1.0)
    dump.add_argument("--random-probs", action="store_true")
    dump.add_argument("--atom-cap", type=int, default=DEFAULT_ATOM_CAP)
    dump.add_argument("--out", type=Path)
    return parser


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        data = ExperimentConfig.from_json(args.config.read_text()).to_dict()
    for key in ("suites", "seed", "format", "p_values", "cap"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.out is not None:
        data["output"] = str(args.out)
    return ExperimentConfig.from_dict(data)


def _emit(text: str, out: str | Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_run(args) -> int:
    config = load_config(args)
    rows = run_suites(config)
    text = to_csv(rows) if config.format == "csv" else to_json(rows) + "\n"
    _emit(text, config.output)
    failed = [r for r in rows if not r.passed]
    for r in failed:
        print(f"FAIL {r.name} family={r.family} p={r.p:g} ratio={r.ratio:.6g} constant={r.constant}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_davis_dump(args) -> int:
    try:
        spec = MartingaleSpec(
            seed=args.seed,
            branching=args.branching,
            horizon=args.horizon,
            dim=args.dim,
            jump_law=args.jump_law,
            scale=args.scale,
            random_probs=args.random_probs,
            atom_cap=args.atom_cap,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    space, M = generate_martingale(spec)
    dec = davis_decompose(M)
    doc = space_to_dict(space, {"M": dec.M, "L": dec.L, "K": dec.K, "K1": dec.K1, "K2": dec.K2})
    doc["spec"] = spec.to_dict()
    doc["S"] = dec.S.values.tolist()
    doc["certificates"] = dec.to_dict()["certificates"]
    _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK if dec.certified() else EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0].startswith("-") and argv[0] not in ("-h", "--help"):
        argv.insert(0, "run")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return cmd_run(args) if args.command == "run" else cmd_davis_dump(args)
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, ValueError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io: {exc}", file=sys.stderr)
        return EXIT_IO
    except BdgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
