"""Command-line entry point.

Subcommands: ``identify`` (excitation week + ARX fit), ``tune`` (the
full tuning experiment), ``report`` (re-emit artifacts from saved raw
files), and ``oracle`` (brute-force verification suites).  Exit status
is 0 on success, 1 on runtime failure, 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, default_config, load_config
from .harness import (
    emit_artifacts,
    improvement_table,
    load_experiment,
    run_experiment,
    run_identification_phase,
)
from .occupants import default_occupant

log = logging.getLogger(__name__)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="JSON config file (defaults are built in)")
    p.add_argument("--seed", type=int, default=None,
                   help="run a single seed")
    p.add_argument("--seeds", type=int, default=None,
                   help="run seeds 0..k-1")
    p.add_argument("--method", default=None,
                   choices=("baseline", "static", "contextual"),
                   help="tune only this method (baseline always runs)")
    p.add_argument("--occupant", default=None, choices=("energy", "comfort"),
                   help="occupant kind")
    p.add_argument("--days", type=int, default=None,
                   help="number of tuning days")
    p.add_argument("--out", type=Path, default=None,
                   help="output directory")
    p.add_argument("--resume", action="store_true",
                   help="continue from per-day checkpoints")
    p.add_argument("--interactive", action="store_true",
                   help="ask for the daily preference at the terminal")
    p.add_argument("-v", "--verbose", action="store_true",
                   help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="preftune",
        description="Daily preference-based tuning of an economic MPC "
                    "building controller on a surrogate plant.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
            ("identify", "simulate the excitation week and fit the ARX model"),
            ("tune", "run the tuning experiment and emit artifacts"),
            ("report", "re-emit artifacts from a finished run"),
            ("oracle", "run the brute-force verification suites")):
        _add_common(sub.add_parser(name, help=desc))
    return parser


def _make_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else default_config()
    updates: dict = {}
    if args.seed is not None and args.seeds is not None:
        raise ValueError("--seed and --seeds are mutually exclusive")
    if args.seed is not None:
        updates["seeds"] = [args.seed]
    if args.seeds is not None:
        updates["seeds"] = list(range(args.seeds))
    if args.method is not None:
        updates["methods"] = (
            ("baseline", args.method) if args.method != "baseline"
            else ("baseline",))
    if args.occupant is not None:
        updates["occupant"] = default_occupant(args.occupant)
    if args.days is not None:
        updates["days"] = args.days
    if args.out is not None:
        updates["out_dir"] = str(args.out)
    if updates:
        import dataclasses
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _interactive_feedback(day: int, j_now: float, j_prev: float) -> int:
    prompt = (f"day {day} (J_today={j_now:.4f}, J_yesterday={j_prev:.4f}): "
              "prefer today over yesterday? [y/n] ")
    while True:
        ans = input(prompt).strip().lower()
        if ans in ("y", "yes", "1"):
            return 1
        if ans in ("n", "no", "0"):
            return 0
        print("please answer y or n", file=sys.stderr)


def _cmd_identify(args, cfg: ExperimentConfig) -> int:
    from .arx import save_model

    ident = run_identification_phase(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"arx_seed{ident.seed}.txt"
    save_model(ident.model, ident.report, path)
    print(f"seed {ident.seed}: train MAE {ident.report.train_mae:.4f} degC, "
          f"14-day open-loop MAE {ident.val_open_loop_mae:.4f} degC")
    print(f"model written to {path}")
    return 0


def _cmd_tune(args, cfg: ExperimentConfig) -> int:
    feedback_fn = _interactive_feedback if args.interactive else None
    bundle = run_experiment(cfg, resume=args.resume, feedback_fn=feedback_fn)
    for method, seed, base, meth, pct in improvement_table(bundle):
        print(f"{method} seed {seed}: baseline {base:.3f} -> {meth:.3f} "
              f"({pct:+.1f}%)")
    print(f"artifacts in {Path(cfg.out_dir) / 'artifacts'}")
    return 0


def _cmd_report(args, cfg: ExperimentConfig) -> int:
    out = args.out if args.out is not None else Path(cfg.out_dir)
    bundle = load_experiment(out)
    files = emit_artifacts(bundle, Path(out) / "artifacts")
    print(f"re-emitted {len(files)} files to {Path(out) / 'artifacts'}")
    return 0


def _cmd_oracle(args, cfg: ExperimentConfig | None) -> int:
    from .oracles import run_oracle_suite

    failures = run_oracle_suite(seed=args.seed if args.seed is not None else 0)
    if failures:
        print(f"{failures} oracle check(s) out of tolerance", file=sys.stderr)
        return 1
    print("all oracle checks within tolerance")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    cfg = None
    if args.command in ("identify", "tune", "report"):
        try:
            cfg = _make_config(args)
        except (ValueError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    commands = {"identify": _cmd_identify, "tune": _cmd_tune,
                "report": _cmd_report, "oracle": _cmd_oracle}
    try:
        return commands[args.command](args, cfg)
    except Exception as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
