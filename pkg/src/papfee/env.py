"""Episode dynamics of the PAP service mission as a deterministic MDP."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import battery as bat
from .battery import BatteryConfig, BatteryState
from .channel import SUBURBAN, EnvironmentProfile, RadioConfig, expected_spectral_efficiencies
from .geometry import (
    MotionConfig,
    Position3,
    VelocityVector,
    action_to_velocity,
    apply_motion,
)
from .metrics import EpisodeRecord, SlotRecord, fee_from_totals, slot_bits, tdma_allocation
from .power import UavParams, total_power

# desk-scale pack: one cell with 1/1.6 of the rated capacity; the voltage
# slope per Ah grows by the same factor
DESK_CAPACITY_SCALE = 1.6
# longer slots keep desk episodes short enough for minutes-long training
DESK_SLOT_S = 4.0


def grid_layout(n_per_side: int, side: float) -> list[Position3]:
    """n x n ground nodes with equal gaps between neighbours and to the borders."""
    step = side / (n_per_side + 1)
    return [
        Position3(step * (i + 1), step * (j + 1), 0.0)
        for j in range(n_per_side)
        for i in range(n_per_side)
    ]


def random_layout(n: int, side: float, rng: np.random.Generator) -> list[Position3]:
    xy = rng.uniform(0.0, side, size=(n, 2))
    return [Position3(float(x), float(y), 0.0) for x, y in xy]


@dataclass(frozen=True)
class Scenario:
    gn_positions: tuple
    env_profile: EnvironmentProfile = SUBURBAN
    radio: RadioConfig = field(default_factory=RadioConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)
    battery_cfg: BatteryConfig = field(default_factory=BatteryConfig)
    uav: UavParams = field(default_factory=UavParams)
    kappa_f: float = 1000.0
    area_side: float = 1000.0
    # rewards are quoted in FEE units of bits/J times this factor (Mbit/J)
    fee_unit: float = 1e-6
    bits_on_return: bool = False

    def __post_init__(self) -> None:
        gns = tuple(self.gn_positions)
        object.__setattr__(self, "gn_positions", gns)
        if len(gns) < 1:
            raise ValueError("scenario needs at least one ground node")
        for g in gns:
            if not (0 <= g.x <= self.area_side and 0 <= g.y <= self.area_side):
                raise ValueError(f"ground node {g} outside the service square")

    @property
    def n_nodes(self) -> int:
        return len(self.gn_positions)

    @property
    def obs_dim(self) -> int:
        return 5 + 3 * self.n_nodes

    def with_layout(self, gns: Sequence[Position3]) -> "Scenario":
        return replace(self, gn_positions=tuple(gns))

    @classmethod
    def paper(cls, profile: EnvironmentProfile = SUBURBAN, **overrides) -> "Scenario":
        base = dict(gn_positions=tuple(grid_layout(4, 1000.0)), env_profile=profile)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def desk(cls, profile: EnvironmentProfile = SUBURBAN, **overrides) -> "Scenario":
        side = 200.0
        base = dict(
            gn_positions=tuple(grid_layout(2, side)),
            env_profile=profile,
            motion=MotionConfig(delta_t=DESK_SLOT_S, u_I=Position3(0.0, 0.0, 20.0), u_F=Position3(side, side, 20.0)),
            battery_cfg=BatteryConfig(
                n_cells=1,
                c_o=4.5 / DESK_CAPACITY_SCALE,
                fit_f1=0.2941 * DESK_CAPACITY_SCALE,
            ),
            area_side=side,
        )
        base.update(overrides)
        return cls(**base)


@dataclass
class StepOutcome:
    next_state: np.ndarray
    reward: float
    done: bool
    info: dict


class ContractViolation(RuntimeError):
    pass


def reward_of(fee_before: float, fee_after: float, is_terminal: bool, final_fee: float, kappa_f: float) -> float:
    """Position reward for an improving prefix FEE plus the terminal reward."""
    if is_terminal:
        return kappa_f * final_fee
    return fee_after if fee_after > fee_before else 0.0


def return_plan(start: Position3, motion: MotionConfig) -> list[tuple[VelocityVector, Position3]]:
    """Straight flight to u_F at v_max, one entry per slot; the last slot is shortened."""
    target = motion.u_F
    dist = start.distance_to(target)
    cap = motion.step_cap
    n = math.ceil(dist / cap - 1e-9) if dist > 0 else 0
    plan = []
    p = start
    for k in range(n):
        remaining = p.distance_to(target)
        seg = min(cap, remaining)
        v = VelocityVector.towards(p, target, seg / motion.delta_t)
        p = target if k == n - 1 else apply_motion(p, v, motion)
        plan.append((v, p))
    return plan


def reference_bits_per_node(sc: Scenario, se_ref: float = 10.0) -> float:
    """Bits one node would collect over a nominal mission at ``se_ref`` bits/s/Hz.

    The nominal mission hovers at z_max until the pack's nominal energy is
    spent; the value only fixes the observation scale.
    """
    hover = total_power(VelocityVector.hover(), sc.motion.z_max, sc.uav)
    mission_s = sc.battery_cfg.nominal_energy_J / hover
    return sc.radio.bandwidth_B * se_ref * mission_s / sc.n_nodes


class PapEnv:
    """Single-PAP mission environment.

    Actions are normalized velocity commands in [-1, 1]^3; ``step_velocity``
    accepts a physical velocity directly (used by scripted baselines).
    """

    def __init__(self, scenario: Scenario, safety: bool = True):
        self.scenario = scenario
        # without the safety check the episode ends only when the battery dies
        self.safety = safety
        self._gn_xy = np.array([[g.x, g.y] for g in scenario.gn_positions])
        self._bits_scale = reference_bits_per_node(scenario)
        self.done = True
        self.record: Optional[EpisodeRecord] = None

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        # transitions are deterministic; seed is accepted for API symmetry only
        sc = self.scenario
        self.position = sc.motion.u_I
        self.battery = BatteryState.fresh(sc.battery_cfg)
        self.bits_sum = np.zeros(sc.n_nodes)
        self.energy = 0.0
        self.n_slots = 0
        self.prefix_fee = 0.0
        self.done = False
        self.forced_return_used = False
        self.stranded = False
        self.record = EpisodeRecord(sc.motion.delta_t, [self.position], [], [self.battery])
        return self.observation()

    def observation(self) -> np.ndarray:
        sc = self.scenario
        side = sc.area_side
        u_F = sc.motion.u_F
        p = self.position
        bits = self.bits_sum / self._bits_scale
        rel_gn = (self._gn_xy - np.array([p.x, p.y])) / side
        head = np.array(
            [
                (p.x - u_F.x) / side,
                (p.y - u_F.y) / side,
                (p.z - u_F.z) / side,
                self.battery.voltage_V / sc.battery_cfg.V_o,
                self.energy / sc.battery_cfg.nominal_energy_J,
            ]
        )
        return np.concatenate([head, rel_gn.ravel(), bits])

    def _serve(self, position: Position3) -> tuple[np.ndarray, np.ndarray]:
        sc = self.scenario
        se = expected_spectral_efficiencies(position, sc.gn_positions, sc.radio, sc.env_profile)
        times = tdma_allocation(se, sc.motion.delta_t)
        return times, slot_bits(sc.radio.bandwidth_B, times, se)

    def _return_feasible(self, start: Position3, state: BatteryState) -> bool:
        sc = self.scenario
        plan = return_plan(start, sc.motion)
        if not plan:
            return state.alive
        powers = []
        p = start
        for v, nxt in plan:
            powers.append(total_power(v, p.z, sc.uav))
            p = nxt
        k = len(powers)
        dt = sc.motion.delta_t
        airtime = bat.estimate_airtime(
            lambda m: powers[min(m, k) - 1], sc.battery_cfg, dt, state=state, max_slots=k + 1
        )
        # the slot in which a threshold trips is counted by the estimate
        return airtime - dt >= k * dt

    def step(self, action) -> StepOutcome:
        action = np.asarray(action, dtype=float)
        return self.step_velocity(action_to_velocity(action, self.scenario.motion))

    def step_velocity(self, v: VelocityVector) -> StepOutcome:
        if self.done:
            raise ContractViolation("step called on a finished episode")
        sc = self.scenario
        if v.speed > sc.motion.v_max * (1 + 1e-12):
            raise ContractViolation(f"speed {v.speed} exceeds v_max")
        power = total_power(v, self.position.z, sc.uav)
        nxt = apply_motion(self.position, v, sc.motion)
        batt = bat.step(self.battery, power, sc.motion.delta_t, sc.battery_cfg)
        if self.safety and not (batt.alive and self._return_feasible(nxt, batt)):
            return self._finish_with_return()
        return self._commit(v, power, nxt, batt, serve=True)

    def step_transit(self, v: VelocityVector) -> StepOutcome:
        """Unchecked slot that schedules no data (replays of forced-return legs)."""
        sc = self.scenario
        power = total_power(v, self.position.z, sc.uav)
        nxt = apply_motion(self.position, v, sc.motion)
        batt = bat.step(self.battery, power, sc.motion.delta_t, sc.battery_cfg)
        return self._commit(v, power, nxt, batt, serve=False)

    def _commit(self, v, power, nxt, batt, serve: bool) -> StepOutcome:
        sc = self.scenario
        if serve:
            times, bits = self._serve(nxt)
        else:
            times = tdma_allocation(np.ones(sc.n_nodes), sc.motion.delta_t)
            bits = np.zeros(sc.n_nodes)
        self.position = nxt
        self.battery = batt
        self.bits_sum = self.bits_sum + bits
        self.energy += power * sc.motion.delta_t
        self.n_slots += 1
        self.record.append(SlotRecord(v, power, tuple(times), tuple(bits), forced=not serve), nxt, batt)
        fee_after = fee_from_totals(self.bits_sum, self.energy, self.n_slots) * sc.fee_unit
        if not batt.alive:
            # only reachable without the safety check
            self.done = True
            self.stranded = True
            reward = reward_of(self.prefix_fee, fee_after, True, fee_after, sc.kappa_f)
        else:
            reward = reward_of(self.prefix_fee, fee_after, False, 0.0, sc.kappa_f)
        self.prefix_fee = fee_after
        info = dict(power=power, bits=bits, fee=fee_after, forced_return=False)
        return StepOutcome(self.observation(), reward, self.done, info)

    def forced_return(self, current: Position3) -> list[tuple[SlotRecord, Position3, BatteryState]]:
        """Fly straight to u_F at v_max from ``current`` with the live battery."""
        sc = self.scenario
        plan = return_plan(current, sc.motion)
        out = []
        p, state = current, self.battery
        for idx, (v, nxt) in enumerate(plan):
            power = total_power(v, p.z, sc.uav)
            next_power = None
            if idx + 1 < len(plan):
                next_power = total_power(plan[idx + 1][0], nxt.z, sc.uav)
            state = bat.step(state, power, sc.motion.delta_t, sc.battery_cfg, next_power)
            if sc.bits_on_return:
                times, bits = self._serve(nxt)
            else:
                times = tdma_allocation(np.ones(sc.n_nodes), sc.motion.delta_t)
                bits = np.zeros(sc.n_nodes)
            out.append((SlotRecord(v, power, tuple(times), tuple(bits), forced=True), nxt, state))
            p = nxt
        return out

    def _finish_with_return(self) -> StepOutcome:
        sc = self.scenario
        for slot, pos, state in self.forced_return(self.position):
            self.record.append(slot, pos, state)
            self.bits_sum = self.bits_sum + np.asarray(slot.per_node_bits)
            self.energy += slot.power * sc.motion.delta_t
            self.n_slots += 1
            self.position = pos
            self.battery = state
        self.done = True
        self.forced_return_used = True
        final_fee = 0.0
        if self.n_slots > 0 and self.energy > 0:
            final_fee = fee_from_totals(self.bits_sum, self.energy, self.n_slots) * sc.fee_unit
        reward = reward_of(self.prefix_fee, final_fee, True, final_fee, sc.kappa_f)
        info = dict(power=0.0, bits=np.zeros(sc.n_nodes), fee=final_fee, forced_return=True)
        return StepOutcome(self.observation(), reward, True, info)

    @property
    def return_feasible_now(self) -> bool:
        return self._return_feasible(self.position, self.battery)
