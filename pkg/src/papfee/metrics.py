"""TDMA time sharing, delivered bits, Jain fairness and fair energy efficiency."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .battery import BatteryState
from .geometry import Position3, VelocityVector


@dataclass(frozen=True)
class SlotRecord:
    velocity: VelocityVector
    power: float
    per_node_time: tuple
    per_node_bits: tuple
    forced: bool = False


@dataclass
class EpisodeRecord:
    delta_t: float
    positions: list = field(default_factory=list)
    slots: list = field(default_factory=list)
    battery_trace: list = field(default_factory=list)

    @property
    def n_slots(self) -> int:
        return len(self.slots)

    @property
    def airtime(self) -> float:
        return self.n_slots * self.delta_t

    def energy(self) -> float:
        return sum(s.power for s in self.slots) * self.delta_t

    def bits_per_node(self) -> np.ndarray:
        if not self.slots:
            return np.zeros(0)
        return np.sum([s.per_node_bits for s in self.slots], axis=0)

    def append(self, slot: SlotRecord, position: Position3, battery: BatteryState) -> None:
        self.slots.append(slot)
        self.positions.append(position)
        self.battery_trace.append(battery)


def tdma_allocation(se_per_node, delta_t: float) -> np.ndarray:
    """Split a slot across nodes in proportion to their spectral efficiency."""
    se = np.asarray(se_per_node, dtype=float)
    if se.size == 0:
        raise ValueError("need at least one node")
    if np.any(se < 0):
        raise ValueError("spectral efficiencies must be nonnegative")
    total = se.sum()
    if total == 0:
        times = np.full(se.size, delta_t / se.size)
    else:
        times = delta_t * se / total
    # the correctly rounded total of the returned times is exactly delta_t
    times[-1] = delta_t - math.fsum(times[:-1])
    # the residual can be off by an ulp when the exact sum sits on a rounding tie
    for _ in range(8):
        total = math.fsum(times)
        if total == delta_t:
            break
        times[-1] = math.nextafter(times[-1], math.inf if total < delta_t else -math.inf)
    return times


def slot_bits(bandwidth: float, times, se) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    se = np.asarray(se, dtype=float)
    if times.shape != se.shape:
        raise ValueError("times and spectral efficiencies differ in length")
    return bandwidth * times * se


def fairness_index(avg_bits) -> float:
    """Jain's index; the all-zero vector scores 0."""
    d = np.asarray(avg_bits, dtype=float)
    if d.size == 0:
        raise ValueError("empty bit vector")
    if np.any(d < 0):
        raise ValueError("bit counts must be nonnegative")
    top = d.max()
    if top == 0:
        return 0.0
    # scale by the largest entry so tiny or huge counts neither underflow nor overflow
    d = d / top
    return float(d.sum() ** 2 / (d.size * np.dot(d, d)))


def fee_from_totals(bits_per_node, energy: float, n_slots: int) -> float:
    """FEE given cumulative bits per node, total energy (J) and slot count."""
    if n_slots <= 0:
        raise ValueError("FEE needs at least one slot")
    if not energy > 0:
        raise ValueError(f"FEE undefined for energy {energy}")
    bits = np.asarray(bits_per_node, dtype=float)
    return fairness_index(bits / n_slots) * float(bits.sum()) / energy


def fee(episode: EpisodeRecord, delta_t: float | None = None) -> float:
    if delta_t is not None and delta_t != episode.delta_t:
        episode = EpisodeRecord(delta_t, episode.positions, episode.slots, episode.battery_trace)
    return fee_from_totals(episode.bits_per_node(), episode.energy(), episode.n_slots)


@dataclass(frozen=True)
class EpisodeSummary:
    fee: float
    fi: float
    ee: float
    airtime: float
    steps: int
    completed: bool = True


def summarize(episode: EpisodeRecord, completed: bool = True) -> EpisodeSummary:
    """FEE, FI and EE (bits/J) plus air-time of an episode."""
    if episode.n_slots == 0:
        return EpisodeSummary(0.0, 0.0, 0.0, 0.0, 0, completed)
    bits = episode.bits_per_node()
    energy = episode.energy()
    fi = fairness_index(bits / episode.n_slots)
    ee = float(bits.sum()) / energy
    return EpisodeSummary(fi * ee, fi, ee, episode.airtime, episode.n_slots, completed)
