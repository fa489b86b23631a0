"""Operator command line.

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success,
1 validation or usage error, 2 I/O error. ARENA_CONFIG, ARENA_LOG_PATH,
ARENA_SEED and ARENA_BIND_ADDR provide flag defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .config import export_prompts, load_config, skeleton_config
from .errors import ArenaError, ConfigError
from .leaderboard import render_csv, render_text
from .service import ArenaCore
from .simulate import ExperimentConfig, run_experiment

__all__ = ["main", "build_parser"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here is exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _env(name: str) -> str | None:
    value = os.environ.get(name)
    return value if value else None


def build_parser() -> _Parser:
    parser = _Parser(prog="designarena", description="Blinded pairwise arena for AI-built websites.")
    sub = parser.add_subparsers(dest="cmd", metavar="command")

    p_init = sub.add_parser("init", help="write a commented starter config")
    p_init.add_argument("--out", default="arena-config.json")
    p_init.add_argument("--force", action="store_true", help="overwrite an existing file")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", default=_env("ARENA_CONFIG"))
    p_serve.add_argument("--log", default=_env("ARENA_LOG_PATH"))
    p_serve.add_argument("--bind", default=_env("ARENA_BIND_ADDR") or "127.0.0.1:8000")
    p_serve.add_argument("--seed", type=int, default=None)

    p_replay = sub.add_parser("replay", help="rebuild state from a vote log and print the leaderboard")
    p_replay.add_argument("--log", default=_env("ARENA_LOG_PATH"))
    p_replay.add_argument("--config", default=_env("ARENA_CONFIG"))

    p_board = sub.add_parser("leaderboard", help="export leaderboard rows from a vote log")
    p_board.add_argument("--log", default=_env("ARENA_LOG_PATH"))
    p_board.add_argument("--config", default=_env("ARENA_CONFIG"))
    p_board.add_argument("--format", choices=("csv", "table"), default="csv")

    p_sim = sub.add_parser("simulate", help="run seeded synthetic-rater experiments")
    p_sim.add_argument("--experiment", default=None, help="experiment config JSON; defaults mirror the deployed scale")
    p_sim.add_argument("--seed", type=int, default=_int_env("ARENA_SEED", 1))
    p_sim.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds to run")
    p_sim.add_argument("--out", default="reports", help="directory for report files")

    p_exp = sub.add_parser("export-prompts", help="re-emit the prompt catalog in the released schema")
    p_exp.add_argument("--config", default=_env("ARENA_CONFIG"))

    return parser


def _int_env(name: str, fallback: int) -> int:
    raw = _env(name)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        return fallback


def _require(value, flag: str):
    if not value:
        raise ConfigError(f"{flag} is required (flag or ARENA_* env var)")
    return value


def _read_log(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _replayed_core(args) -> tuple[ArenaCore, int]:
    config = load_config(_require(args.config, "--config"))
    text = _read_log(_require(args.log, "--log"))
    core = ArenaCore.replay(config, text)
    return core, core.event_count


def _cmd_init(args) -> int:
    if os.path.exists(args.out) and not args.force:
        print(f"refusing to overwrite {args.out}; pass --force", file=sys.stderr)
        return 2
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(skeleton_config(), fh, indent=2)
        fh.write("\n")
    print(f"wrote starter config to {args.out}", file=sys.stderr)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .httpapi import create_app

    config = load_config(_require(args.config, "--config"))
    seed = args.seed if args.seed is not None else _env("ARENA_SEED")
    if seed is not None:
        config = dataclasses.replace(config, seed=int(seed))
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"--bind must look like host:port, got {args.bind!r}")
    core = ArenaCore(config, log_path=_require(args.log, "--log"))
    print(f"serving on {host}:{port} with {core.event_count} replayed events", file=sys.stderr)
    uvicorn.run(create_app(core), host=host, port=int(port), log_level="warning")
    return 0


def _cmd_replay(args) -> int:
    core, n = _replayed_core(args)
    print(f"replayed {n} events", file=sys.stderr)
    sys.stdout.write(render_text(core.leaderboard_table()))
    return 0


def _cmd_leaderboard(args) -> int:
    core, _ = _replayed_core(args)
    rows = core.leaderboard_table()
    sys.stdout.write(render_csv(rows) if args.format == "csv" else render_text(rows))
    return 0


def _cmd_simulate(args) -> int:
    if args.seeds < 1:
        raise ConfigError(f"--seeds must be >= 1, got {args.seeds}")
    if args.experiment:
        with open(args.experiment, encoding="utf-8") as fh:
            exp = ExperimentConfig.from_doc(json.load(fh))
    else:
        exp = ExperimentConfig()
    os.makedirs(args.out, exist_ok=True)
    summary = []
    for seed in range(args.seed, args.seed + args.seeds):
        report = run_experiment(exp, seed)
        base = os.path.join(args.out, f"report-seed{seed}")
        with open(f"{base}.json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        with open(f"{base}.txt", "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
        print(f"seed {seed}: votes={report.votes} tau={report.kendall_tau:.4f}", file=sys.stderr)
        summary.append({
            "seed": seed,
            "votes": report.votes,
            "kendall_tau": report.kendall_tau,
            "spearman_rho": report.spearman_rho,
            "top1_correct": report.top1_correct,
            "ci_coverage": report.ci_coverage,
        })
    mean_tau = sum(s["kendall_tau"] for s in summary) / len(summary)
    print(json.dumps({"seeds": summary, "mean_kendall_tau": mean_tau}, sort_keys=True))
    return 0


def _cmd_export_prompts(args) -> int:
    config = load_config(_require(args.config, "--config"))
    print(json.dumps(export_prompts(config), indent=2))
    return 0


_COMMANDS = {
    "init": _cmd_init,
    "serve": _cmd_serve,
    "replay": _cmd_replay,
    "leaderboard": _cmd_leaderboard,
    "simulate": _cmd_simulate,
    "export-prompts": _cmd_export_prompts,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    if not args.cmd:
        parser.print_help(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.cmd](args)
    except ArenaError as exc:
        if isinstance(exc.__cause__, OSError):
            print(f"error [{exc.code}]: {exc}", file=sys.stderr)
            return 2
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
