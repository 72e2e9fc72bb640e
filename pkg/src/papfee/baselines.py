"""Scripted reference missions and a replay evaluator for velocity plans."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .env import PapEnv, Scenario
from .geometry import Position3, VelocityVector
from .metrics import EpisodeRecord, EpisodeSummary, summarize
from .power import min_power_speed

POSITION_TOL = 1e-6


@dataclass
class ScriptedTrajectory:
    velocities: list
    label: str = ""
    # per-slot flag: schedule data in this slot (False for transit-only legs)
    serve: Optional[list] = None

    def __post_init__(self) -> None:
        if self.serve is None:
            self.serve = [True] * len(self.velocities)
        if len(self.serve) != len(self.velocities):
            raise ValueError("serve flags and velocities differ in length")


def plan_from_record(record: EpisodeRecord, label: str = "") -> ScriptedTrajectory:
    return ScriptedTrajectory(
        [s.velocity for s in record.slots], label, [not s.forced for s in record.slots]
    )


# --- tours -----------------------------------------------------------------


def tour_length(points: np.ndarray, tour: Sequence[int]) -> float:
    pts = np.asarray(points, dtype=float)
    if len(tour) < 2:
        return 0.0
    ordered = pts[list(tour)]
    return float(np.sum(np.linalg.norm(ordered - np.roll(ordered, -1, axis=0), axis=1)))


def nearest_neighbor_tour(points: np.ndarray, start: int = 0) -> list[int]:
    pts = np.asarray(points, dtype=float)
    tour = [start]
    unvisited = set(range(len(pts))) - {start}
    while unvisited:
        last = pts[tour[-1]]
        nxt = min(unvisited, key=lambda j: (float(np.linalg.norm(pts[j] - last)), j))
        tour.append(nxt)
        unvisited.remove(nxt)
    return tour


def two_opt(points: np.ndarray, tour: Sequence[int]) -> list[int]:
    """First-improvement 2-opt on a closed tour; never lengthens it."""
    pts = np.asarray(points, dtype=float)
    tour = list(tour)
    n = len(tour)
    if n < 4:
        return tour

    def d(a, b):
        return float(np.linalg.norm(pts[a] - pts[b]))

    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 2, n if i > 0 else n - 1):
                a, b = tour[i], tour[i + 1]
                c, e = tour[j], tour[(j + 1) % n]
                delta = d(a, c) + d(b, e) - d(a, b) - d(c, e)
                if delta < -1e-12:
                    tour[i + 1 : j + 1] = reversed(tour[i + 1 : j + 1])
                    improved = True
    return tour


def brute_force_tour(points: np.ndarray) -> tuple[list[int], float]:
    """Exhaustive optimum with node 0 fixed first (small N only)."""
    n = len(points)
    best, best_len = list(range(n)), math.inf
    for perm in itertools.permutations(range(1, n)):
        tour = [0, *perm]
        length = tour_length(points, tour)
        if length < best_len - 1e-12:
            best, best_len = tour, length
    return best, best_len


def gn_tour(scenario: Scenario, start_xy: tuple[float, float]) -> list[int]:
    """Closed GN tour (nearest neighbour + 2-opt), rotated to begin at the GN nearest ``start_xy``."""
    pts = np.array([[g.x, g.y] for g in scenario.gn_positions])
    first = int(np.argmin(np.linalg.norm(pts - np.asarray(start_xy), axis=1)))
    tour = two_opt(pts, nearest_neighbor_tour(pts, first))
    k = tour.index(first)
    return tour[k:] + tour[:k]


# --- scripted missions -----------------------------------------------------


def cruise_speed(scenario: Scenario) -> float:
    return min_power_speed(scenario.motion.z_max, scenario.uav, scenario.motion.v_max)


def _fly_to(env: PapEnv, target: Position3, speed: float) -> bool:
    """Step towards ``target``; returns False once the episode has ended."""
    while not env.done:
        p = env.position
        dist = p.distance_to(target)
        if dist <= POSITION_TOL:
            return True
        v = VelocityVector.towards(p, target, min(speed, dist / env.scenario.motion.delta_t))
        env.step_velocity(v)
    return False


def hover_baseline(scenario: Scenario) -> EpisodeRecord:
    """Climb to the centre of the area at z_max and hover until the return check trips."""
    env = PapEnv(scenario)
    env.reset()
    side = scenario.area_side
    centre = Position3(side / 2.0, side / 2.0, scenario.motion.z_max)
    if _fly_to(env, centre, cruise_speed(scenario)):
        while not env.done:
            env.step_velocity(VelocityVector.hover())
    return env.record


def tsp_baseline(scenario: Scenario, entry_fraction: float = 0.2) -> EpisodeRecord:
    """Climb to (0.2 L, 0.2 L, z_max), then cycle the GN tour at z_max until the return check trips."""
    env = PapEnv(scenario)
    env.reset()
    side = scenario.area_side
    z = scenario.motion.z_max
    speed = cruise_speed(scenario)
    entry = Position3(entry_fraction * side, entry_fraction * side, z)
    if not _fly_to(env, entry, speed):
        return env.record
    tour = gn_tour(scenario, (entry.x, entry.y))
    gns = scenario.gn_positions
    waypoints = [Position3(gns[k].x, gns[k].y, z) for k in tour]
    for wp in itertools.cycle(waypoints):
        if not _fly_to(env, wp, speed):
            break
        if len(waypoints) == 1 and not env.done:
            # a single node: keep station over it
            while not env.done:
                env.step_velocity(VelocityVector.hover())
    return env.record


@dataclass(frozen=True)
class Evaluation:
    summary: EpisodeSummary
    record: EpisodeRecord = field(repr=False)

    @property
    def completed(self) -> bool:
        return self.summary.completed


def evaluate_trajectory(plan: ScriptedTrajectory, scenario: Scenario) -> Evaluation:
    """Replay a velocity plan through the mission physics without overrides.

    The plan is completed when every slot is flown with the battery usable
    and the PAP ends at u_F; otherwise metrics cover the slots flown.
    """
    env = PapEnv(scenario, safety=False)
    env.reset()
    for v, serve in zip(plan.velocities, plan.serve):
        if v.speed > scenario.motion.v_max * (1 + 1e-12):
            raise ValueError(f"plan speed {v.speed} exceeds v_max")
        if serve:
            env.step_velocity(v)
        else:
            env.step_transit(v)
        if env.done:
            break
    rec = env.record
    at_goal = rec.positions[-1].distance_to(scenario.motion.u_F) <= POSITION_TOL
    completed = (not env.stranded) and at_goal and len(rec.slots) == len(plan.velocities)
    return Evaluation(summarize(rec, completed), rec)
