"""Command-line entry point: ``papfee --mode {train-offline,train-online,eval,baseline}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .channel import PROFILES
from .config import MODES, SCALES, ConfigError, load_config
from .harness import run_baselines, run_eval, run_offline, run_online


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="papfee", description="PAP trajectory learning and baselines")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", help="INI file with [run], [scenario], [td3] sections")
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("--out")
    p.add_argument("--profile", choices=tuple(PROFILES))
    p.add_argument("--scale", choices=SCALES)
    p.add_argument("--checkpoint", help="actor checkpoint for --mode eval")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {k: getattr(args, k) for k in ("mode", "seed", "episodes", "out", "profile", "scale", "checkpoint")}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"papfee: config error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.mode == "train-offline":
            res = run_offline(cfg)
            print(f"final eval FEE (Mbit/J) per seed: {[round(f, 4) for f in res.final_eval_fee]}")
        elif cfg.mode == "train-online":
            res = run_online(cfg)
            print(
                f"best seed {res.best_seed} episode {res.best_episode}: mean eval FEE {res.best_mean_eval_fee:.4f}; "
                f"test mean FEE {res.test_mean_fee:.4f} Mbit/J"
            )
        elif cfg.mode == "baseline":
            print(f"wrote {run_baselines(cfg)}")
        else:
            s = run_eval(cfg)
            print(f"FEE {s.fee * 1e-6:.4f} Mbit/J, FI {s.fi:.4f}, air-time {s.airtime:.0f} s")
    except (OSError, ValueError) as exc:
        print(f"papfee: {exc}", file=sys.stderr)
        return 1
    print(f"outputs in {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
