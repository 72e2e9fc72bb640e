"""Li-ion pack discharge with the Peukert effect and air-time estimation.

Currents are per series string (every cell carries the pack current), time
inside the Peukert recursion is in hours and capacities are in Ah. Callers
pass slot lengths in seconds.

The discharge recursion is carried through the quantity ``K = t * i**p``:
the rated-discharge initialization gives ``K = t_o * (c_o / t_o)**p`` and one
slot of draw ``i`` for ``dt`` hours maps ``K -> K * (1 - dt / t)**p`` with
``t = K / i**p``. This is algebraically the same recursion as driving the
remaining time with ``c = t * i`` and the next slot's current, but it does
not need to know the next power in advance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

SECONDS_PER_HOUR = 3600.0


class BatteryDepleted(RuntimeError):
    pass


@dataclass(frozen=True)
class BatteryConfig:
    c_o: float = 4.5          # Ah, rated capacity per cell
    t_o: float = 3.0          # h, rated discharge time
    V_o: float = 3.7          # V, nominal cell voltage
    V_cutoff: float = 2.5     # V
    n_cells: int = 6
    peukert_p: float = 1.05
    fit_f1: float = 0.2941    # V/Ah at 1 A
    fit_f2: float = 0.06888
    t_min: float = 0.0        # s, remaining-time floor

    def __post_init__(self) -> None:
        if not (self.c_o > 0 and self.t_o > 0 and self.V_o > 0):
            raise ValueError("c_o, t_o and V_o must be positive")
        if not self.V_cutoff < self.V_o:
            raise ValueError("V_cutoff must be below V_o")
        if not self.peukert_p >= 1.0:
            raise ValueError("Peukert coefficient must be >= 1")
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")

    @property
    def rated_current(self) -> float:
        return self.c_o / self.t_o

    @property
    def nominal_energy_J(self) -> float:
        return self.n_cells * self.V_o * self.c_o * SECONDS_PER_HOUR

    @property
    def t_min_hours(self) -> float:
        return self.t_min / SECONDS_PER_HOUR


@dataclass(frozen=True)
class BatteryState:
    voltage_V: float
    remaining_time_t: float   # h, valid for last_current_i
    capacity_c: float         # Ah
    last_current_i: float     # A
    peukert_k: float
    alive: bool = True

    @classmethod
    def fresh(cls, cfg: BatteryConfig) -> "BatteryState":
        i = cfg.rated_current
        return cls(cfg.V_o, cfg.t_o, cfg.c_o, i, cfg.t_o * i**cfg.peukert_p)

    @property
    def remaining_time_s(self) -> float:
        return self.remaining_time_t * SECONDS_PER_HOUR


def discharge_slope(i: float, cfg: BatteryConfig) -> float:
    """Terminal-voltage drop per Ah drawn at current i."""
    if not i > 0:
        raise ValueError(f"discharge slope needs a positive current, got {i}")
    return cfg.fit_f1 * i**cfg.fit_f2


def current_draw(power: float, state: BatteryState, cfg: BatteryConfig) -> float:
    if state.voltage_V <= 0:
        raise BatteryDepleted(f"terminal voltage {state.voltage_V} V")
    if power < 0:
        raise ValueError(f"power must be nonnegative, got {power}")
    return power / (cfg.n_cells * state.voltage_V)


def init_discharge_time(i1: float, cfg: BatteryConfig) -> float:
    """Remaining discharge time (h) when the first slot draws i1."""
    return cfg.t_o * (cfg.c_o / (i1 * cfg.t_o)) ** cfg.peukert_p


def _time_at(k: float, i: float, p: float) -> float:
    return k / i**p if i > 0 else math.inf


def _advance(v: float, k: float, i: float, dt_h: float, cfg: BatteryConfig):
    """One slot of draw i. Returns (t at slot start, V after, K after)."""
    t = _time_at(k, i, cfg.peukert_p)
    if i == 0:
        return t, v, k
    v_next = v - discharge_slope(i, cfg) * i * dt_h
    frac = 1.0 - dt_h / t
    k_next = k * frac**cfg.peukert_p if frac > 0 else 0.0
    return t, v_next, k_next


def step(
    state: BatteryState,
    power: float,
    delta_t: float,
    cfg: BatteryConfig,
    next_power: Optional[float] = None,
) -> BatteryState:
    """Draw ``power`` for one slot of ``delta_t`` seconds.

    The returned remaining time and capacity are quoted at the current the
    next slot will draw (``next_power``, defaulting to ``power``). The result
    is flagged dead when the slot cannot start (remaining time at or below
    the floor) or ends with the voltage under cutoff or no remaining time.
    """
    dt_h = delta_t / SECONDS_PER_HOUR
    i = current_draw(power, state, cfg)
    t, v_next, k_next = _advance(state.voltage_V, state.peukert_k, i, dt_h, cfg)
    if t <= cfg.t_min_hours:
        return replace(state, remaining_time_t=t, last_current_i=i, alive=False)
    if next_power is None:
        next_power = power
    i_next = next_power / (cfg.n_cells * v_next) if v_next > 0 else math.inf
    t_next = _time_at(k_next, i_next, cfg.peukert_p) if k_next > 0 else 0.0
    c_next = t_next * i_next if math.isfinite(t_next) else state.capacity_c
    alive = v_next >= cfg.V_cutoff and t_next > cfg.t_min_hours
    return BatteryState(v_next, t_next, c_next, i_next, k_next, alive)


def estimate_airtime(
    power_profile: Callable[[int], float],
    cfg: BatteryConfig,
    delta_t: float = 1.0,
    state: Optional[BatteryState] = None,
    max_slots: Optional[int] = None,
) -> float:
    """Air-time in seconds for a slot-indexed power profile (slots count from 1).

    Follows the air-time estimation loop: the slot during which a threshold
    trips is counted, so the number of slots completed with the battery
    still usable is one less than the returned ``m``. ``state`` resumes from
    a mid-flight battery instead of a fresh pack. ``max_slots`` stops the
    scan early and returns ``max_slots * delta_t`` as a lower bound.
    """
    if state is None:
        state = BatteryState.fresh(cfg)
    dt_h = delta_t / SECONDS_PER_HOUR
    p = cfg.peukert_p
    v, k = state.voltage_V, state.peukert_k
    m = 1
    while True:
        if max_slots is not None and m > max_slots:
            return max_slots * delta_t
        power = power_profile(m)
        if not (power >= 0 and math.isfinite(power)):
            raise ValueError(f"invalid power {power} at slot {m}")
        i = power / (cfg.n_cells * v)
        t = _time_at(k, i, p)
        if m == 1 and not t > 0:
            return 0.0
        if t <= cfg.t_min_hours:
            break
        t, v, k = _advance(v, k, i, dt_h, cfg)
        if v < cfg.V_cutoff:
            break
        m += 1
    return m * delta_t


def naive_airtime(power: float, cfg: BatteryConfig) -> float:
    """Energy-over-power air-time (s), ignoring the Peukert effect."""
    return cfg.nominal_energy_J / power


def fit_discharge_slope(currents, slopes) -> tuple[float, float]:
    """Least-squares (f1, f2) of slope = f1 * i**f2 on a log-log scale."""
    currents = np.asarray(currents, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    if currents.shape != slopes.shape or currents.size < 2:
        raise ValueError("need at least two (current, slope) pairs")
    if np.any(currents <= 0) or np.any(slopes <= 0):
        raise ValueError("currents and slopes must be positive")
    f2, log_f1 = np.polyfit(np.log(currents), np.log(slopes), 1)
    return float(np.exp(log_f1)), float(f2)


def fit_discharge_slope_file(path) -> tuple[float, float]:
    """Fit (f1, f2) from a whitespace/comma separated two-column text file."""
    with open(path) as fh:
        rows = [
            line.replace(",", " ").split()
            for line in fh
            if line.strip() and not line.lstrip().startswith("#")
        ]
    try:
        data = np.array([[float(a), float(b)] for a, b in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: expected two numeric columns") from exc
    return fit_discharge_slope(data[:, 0], data[:, 1])
