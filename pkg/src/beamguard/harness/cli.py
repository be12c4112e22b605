"""Command-line entry point: ``beamguard {train,eval,baseline,compare,inspect-config}``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 a compare ordering check failed.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigError
from .config import dumps, load_config
from . import runner

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ORDERING = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file")
    common.add_argument("--profile", choices=("paper", "desk"), help="defaults profile")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out-dir", type=Path, default=Path("runs"), help="output directory")
    common.add_argument("--workers", type=int, help="parallel rollout workers")
    common.add_argument("--greedy", action="store_true",
                        help="evaluate the argmax action instead of sampling")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="beamguard", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train a defender")
    for name, text in (("eval", "evaluate a checkpoint"),
                       ("compare", "agent vs baseline on paired scenarios")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--checkpoint", type=Path,
                        help="checkpoint file (default: OUT_DIR/checkpoint.bgck)")
    sub.add_parser("baseline", parents=[common], help="run the PDP baseline detector")
    sub.add_parser("inspect-config", parents=[common], help="print the resolved config")
    return p


def _resolve(args):
    cfg = load_config(args.config, args.profile)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    return replace(cfg, **changes) if changes else cfg


def _print_summary(title: str, summary: dict) -> None:
    print(title)
    for name, s in summary.items():
        print(f"  {name:18s} mean {s.mean:9.3f}  median {s.median:9.3f}  std {s.std:8.3f}  "
              f"min {s.min:9.3f}  max {s.max:9.3f}")


def _run(args) -> int:
    cfg = _resolve(args)
    if args.command == "inspect-config":
        sys.stdout.write(dumps(cfg))
        print(f"# config_hash: {cfg.config_hash()}")
        return EXIT_OK

    out = args.out_dir
    if args.command == "train":
        res = runner.train(cfg, out, on_episode=lambda m: logging.getLogger(__name__).info(
            "episode %d %s reward %.1f detection %.3f", m.episode, m.phase, m.reward,
            m.detection_rate))
        print(f"trained {cfg.total_episodes} episodes; checkpoint {res.checkpoint}; "
              f"metrics {res.metrics_csv}")
        return EXIT_OK

    checkpoint = getattr(args, "checkpoint", None) or out / "checkpoint.bgck"
    if args.command == "eval":
        res = runner.evaluate(cfg, checkpoint, out, greedy=args.greedy)
        _print_summary("evaluation", res.summary)
        near, far = res.effort_split()
        print(f"  effort near {near:.3f} far {far:.3f}")
        return EXIT_OK
    if args.command == "baseline":
        res = runner.run_baseline(cfg, out)
        _print_summary("baseline", {k: v for k, v in res.summary.items() if k != "reward"})
        return EXIT_OK
    if args.command == "compare":
        report = runner.compare(cfg, checkpoint, out, greedy=args.greedy)
        for line in report.lines():
            print(line)
        return EXIT_OK if report.passed else EXIT_ORDERING
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # anything else is a runtime failure for the caller
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
