"""Offline and online training protocols, baseline tables and checkpoint evaluation."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import neuralnet as nn
from .baselines import hover_baseline, tsp_baseline
from .channel import PROFILES
from .config import RunConfig, scenario_hash, write_snapshot
from .env import PapEnv, Scenario, random_layout
from .export import MetricsRecord, export_metrics, export_trajectory
from .metrics import EpisodeSummary, summarize
from .td3 import Td3Agent, run_episode, train

log = logging.getLogger(__name__)

# independent RNG streams derived from the run seed
STREAM_TRAIN_LAYOUT, STREAM_EVAL_LAYOUT, STREAM_TEST_LAYOUT = 0, 1, 2


def layout_rng(seed: int, stream: int, repetition: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, repetition]))


def greedy_episode(actor: nn.Mlp, scenario: Scenario):
    """Frozen deterministic rollout: no noise, no buffer writes."""
    env = PapEnv(scenario)
    return run_episode(env, lambda s: np.clip(actor(s), -1.0, 1.0))


def _record(ep: int, phase: str, s: EpisodeSummary, seed: int, sc: Scenario) -> MetricsRecord:
    return MetricsRecord(
        episode=ep,
        phase=phase,
        fee=s.fee * 1e-6,
        fi=s.fi,
        ee=s.ee * 1e-6,
        airtime=s.airtime,
        steps=s.steps,
        seed=seed,
        scenario_hash=scenario_hash(sc),
    )


def _prepare(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_snapshot(cfg, out)
    return out


@dataclass
class OfflineResult:
    out_dir: Path
    final_eval_fee: list = field(default_factory=list)  # Mbit/J per repetition
    initial_eval_fee: list = field(default_factory=list)


def run_offline(cfg: RunConfig) -> OfflineResult:
    """Train on one fixed layout per repetition; evaluate every ``eval_every`` episodes.

    Repetition r uses agent seed ``cfg.seed + r``.  Outputs per repetition:
    metrics lines, the final actor checkpoint and a trajectory of the final
    frozen-policy episode.
    """
    out = _prepare(cfg)
    sc = cfg.scenario()
    td3_cfg = cfg.td3_config()
    metrics_path = out / "metrics.jsonl"
    metrics_path.write_text("")
    result = OfflineResult(out)
    for r in range(cfg.n_seed):
        seed = cfg.seed + r
        agent = Td3Agent(sc.obs_dim, td3_cfg, seed)
        rec0 = greedy_episode(agent.actor, sc)
        export_metrics([_record(0, "eval", summarize(rec0), seed, sc)], metrics_path, append=True)
        result.initial_eval_fee.append(summarize(rec0).fee * 1e-6)
        last = rec0
        env = PapEnv(sc)

        def on_end(ag, lg, seed=seed):
            nonlocal last
            ep = lg.episode + 1
            lines = [_record(ep, "train", summarize(env.record), seed, sc)]
            if ep % cfg.eval_every == 0 or ep == cfg.episodes:
                last = greedy_episode(ag.actor, sc)
                lines.append(_record(ep, "eval", summarize(last), seed, sc))
            export_metrics(lines, metrics_path, append=True)

        train(lambda ep: env, td3_cfg, cfg.episodes, seed, agent=agent, on_episode_end=on_end)
        nn.save_checkpoint(agent.actor, out / f"actor_seed{seed}.npz")
        export_trajectory(last, sc.n_nodes, out / f"trajectory_seed{seed}.csv")
        result.final_eval_fee.append(summarize(last).fee * 1e-6)
        log.info("seed %d: eval FEE %.4f -> %.4f Mbit/J", seed, result.initial_eval_fee[-1], result.final_eval_fee[-1])
    return result


@dataclass
class OnlineResult:
    out_dir: Path
    best_seed: int
    best_episode: int
    best_mean_eval_fee: float
    test_mean_fee: float


def run_online(cfg: RunConfig) -> OnlineResult:
    """Random layout per training episode; best-checkpoint selection; test on unseen layouts.

    Training, evaluation and test layouts come from separate seed streams,
    so test layouts never coincide with training ones.  The retained actor
    is the argmax of the mean eval FEE over all evaluation points of all
    repetitions (first occurrence on ties).
    """
    out = _prepare(cfg)
    base = cfg.scenario()
    td3_cfg = cfg.td3_config()
    metrics_path = out / "metrics.jsonl"
    metrics_path.write_text("")
    n = base.n_nodes
    best = (-np.inf, -1, -1, None)  # (mean fee, seed, episode, actor)

    for r in range(cfg.n_seed):
        seed = cfg.seed + r
        train_rng = layout_rng(cfg.seed, STREAM_TRAIN_LAYOUT, r)
        eval_rng = layout_rng(cfg.seed, STREAM_EVAL_LAYOUT, r)
        eval_layouts = [base.with_layout(random_layout(n, base.area_side, eval_rng)) for _ in range(cfg.n_eval)]
        current: dict = {}

        def env_for(ep: int):
            sc = base.with_layout(random_layout(n, base.area_side, train_rng))
            current["env"] = PapEnv(sc)
            return current["env"]

        def evaluate(actor, ep, seed=seed, eval_layouts=eval_layouts):
            nonlocal best
            lines, fees = [], []
            for sc in eval_layouts:
                s = summarize(greedy_episode(actor, sc))
                fees.append(s.fee * 1e-6)
                lines.append(_record(ep, "eval", s, seed, sc))
            export_metrics(lines, metrics_path, append=True)
            mean = float(np.mean(fees))
            if mean > best[0]:
                best = (mean, seed, ep, actor.copy())

        agent = Td3Agent(base.obs_dim, td3_cfg, seed)
        evaluate(agent.actor, 0)

        def on_end(ag, lg, seed=seed):
            ep = lg.episode + 1
            env = current["env"]
            export_metrics([_record(ep, "train", summarize(env.record), seed, env.scenario)], metrics_path, append=True)
            if ep % cfg.eval_every == 0 or ep == cfg.episodes:
                evaluate(ag.actor, ep)

        train(env_for, td3_cfg, cfg.episodes, seed, agent=agent, on_episode_end=on_end)

    mean_fee, best_seed, best_ep, actor = best
    nn.save_checkpoint(actor, out / "best_actor.npz")
    test_rng = layout_rng(cfg.seed, STREAM_TEST_LAYOUT)
    tests = [base] + [base.with_layout(random_layout(n, base.area_side, test_rng)) for _ in range(cfg.n_test)]
    lines, fees = [], []
    for k, sc in enumerate(tests):
        rec = greedy_episode(actor, sc)
        s = summarize(rec)
        fees.append(s.fee * 1e-6)
        lines.append(_record(k, "test", s, best_seed, sc))
        if k == 0:
            export_trajectory(rec, n, out / "trajectory_test_grid.csv")
    export_metrics(lines, metrics_path, append=True)
    return OnlineResult(out, best_seed, best_ep, mean_fee, float(np.mean(fees)))


BASELINE_COLUMNS = ("profile", "a", "b", "eta_los", "eta_nlos", "baseline", "fee_Mbit_J", "fi", "ee_Mbit_J", "airtime_s", "steps", "completed")


def baseline_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    for name, profile in PROFILES.items():
        sc = RunConfig(scale=cfg.scale, profile=name, grid_per_side=cfg.grid_per_side, kappa_f=cfg.kappa_f).scenario()
        for label, fn in (("hover", hover_baseline), ("tsp", tsp_baseline)):
            rec = fn(sc)
            at_goal = rec.positions[-1].distance_to(sc.motion.u_F) <= 1e-6
            s = summarize(rec, completed=at_goal and rec.battery_trace[-1].alive)
            rows.append(
                dict(
                    profile=name,
                    a=profile.a,
                    b=profile.b,
                    eta_los=profile.eta_los,
                    eta_nlos=profile.eta_nlos,
                    baseline=label,
                    fee_Mbit_J=s.fee * 1e-6,
                    fi=s.fi,
                    ee_Mbit_J=s.ee * 1e-6,
                    airtime_s=s.airtime,
                    steps=s.steps,
                    completed=s.completed,
                )
            )
    return rows


def run_baselines(cfg: RunConfig) -> Path:
    out = _prepare(cfg)
    path = out / "baselines.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BASELINE_COLUMNS)
        w.writeheader()
        for row in baseline_rows(cfg):
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path


def run_eval(cfg: RunConfig) -> EpisodeSummary:
    """Frozen evaluation of a saved actor on the configured layout."""
    out = _prepare(cfg)
    sc = cfg.scenario()
    actor = nn.load_checkpoint(cfg.checkpoint)
    if actor.input_dim != sc.obs_dim or actor.output_dim != 3:
        raise ValueError(f"checkpoint dims {actor.dims} do not fit observation size {sc.obs_dim}")
    rec = greedy_episode(actor, sc)
    s = summarize(rec)
    export_metrics([_record(0, "eval", s, cfg.seed, sc)], out / "metrics.jsonl")
    export_trajectory(rec, sc.n_nodes, out / "trajectory_eval.csv")
    return s
