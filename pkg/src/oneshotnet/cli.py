"""Command-line entry point: ``bound``, ``simulate``, ``verify``, ``rate``, ``sweep``.

Exit codes: 0 success, 1 usage or configuration error, 2 a bound-dominance
or lemma violation was detected.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import harness
from .errors import CapacityExceededError, ConfigError

VERBS = {
    "bound": "exact or Monte Carlo value of the network bound",
    "simulate": "coupled Monte Carlo run of the coding scheme against its bound",
    "verify": "statistical check of the ranking lemmas (task verify-pml or verify-eprl)",
    "rate": "asymptotic rate expressions and memoryless-limit margins",
    "sweep": "run the config's task over its sweep values",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oneshotnet", description="One-shot network coding bounds and simulation.")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, help_text in VERBS.items():
        s = sub.add_parser(verb, help=help_text)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--seed", type=int, help="master seed (overrides the config)")
        s.add_argument("--trials", type=int, help="trial count (overrides the config)")
        s.add_argument("--method", choices=("exact", "mc"), help="bound evaluation method")
        s.add_argument("--out", help="output path (default: stdout)")
        s.add_argument("--format", choices=("csv", "json"), help="output format")
    return p


def _configure(args) -> harness.ExperimentConfig:
    cfg = harness.load_config(args.config)
    over = {}
    for name in ("seed", "trials", "method", "format"):
        v = getattr(args, name)
        if v is not None:
            over[name] = v
    if args.out is not None:
        over["output"] = args.out
    if args.verb == "bound":
        over["task"] = "bound"
    elif args.verb == "simulate":
        over["task"] = "simulate"
    elif args.verb == "rate":
        over["task"] = "rate"
    elif args.verb == "verify":
        task = cfg.task if cfg.task in ("verify-pml", "verify-eprl") else "verify-pml"
        over["task"] = task
    elif args.verb == "sweep" and not cfg.sweep:
        raise ConfigError("sweep: the config has no sweep block")
    cfg = dataclasses.replace(cfg, **over)
    harness.check_config(cfg)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = _configure(args)
        rows, code = harness.run(cfg)
        text = harness.emit(rows, cfg.format, cfg.output)
    except (ConfigError, CapacityExceededError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not cfg.output:
        sys.stdout.write(text)
    if code == 2:
        print("violation: an empirical lower confidence limit exceeds its bound", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
