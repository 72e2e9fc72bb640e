"""Positions, velocity commands and the discrete motion model of the PAP."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def distance_to(self, other: "Position3") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )

    def horizontal_distance_to(self, other: "Position3") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class VelocityVector:
    """Spherical velocity command.

    ``elevation`` is measured from the +z axis: 0 is an axial climb, pi/2 is
    level flight and pi an axial descent. Direction is ignored when
    ``speed == 0``.
    """

    speed: float
    azimuth: float = 0.0
    elevation: float = math.pi / 2

    @classmethod
    def hover(cls) -> "VelocityVector":
        return cls(0.0, 0.0, math.pi / 2)

    @classmethod
    def towards(cls, start: Position3, end: Position3, speed: float) -> "VelocityVector":
        """Velocity pointing from ``start`` to ``end`` with the given magnitude."""
        dx, dy, dz = end.x - start.x, end.y - start.y, end.z - start.z
        horizontal = math.hypot(dx, dy)
        if horizontal == 0.0 and dz == 0.0:
            return cls.hover()
        return cls(speed, math.atan2(dy, dx), math.atan2(horizontal, dz))


@dataclass(frozen=True)
class MotionConfig:
    delta_t: float = 1.0
    v_max: float = 24.0
    z_min: float = 20.0
    z_max: float = 100.0
    u_I: Position3 = Position3(0.0, 0.0, 20.0)
    u_F: Position3 = Position3(1000.0, 1000.0, 20.0)
    # stationarity distance; only checked when set
    stationarity_distance: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.delta_t > 0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")
        if not self.v_max > 0:
            raise ValueError(f"v_max must be positive, got {self.v_max}")
        if not 0 < self.z_min <= self.z_max:
            raise ValueError(f"need 0 < z_min <= z_max, got {self.z_min}, {self.z_max}")
        if (
            self.stationarity_distance is not None
            and self.delta_t * self.v_max > self.stationarity_distance
        ):
            raise ValueError(
                "delta_t * v_max exceeds the stationarity distance "
                f"({self.delta_t * self.v_max} > {self.stationarity_distance})"
            )

    @property
    def step_cap(self) -> float:
        return self.delta_t * self.v_max


def action_to_velocity(action, cfg: MotionConfig) -> VelocityVector:
    """Map a normalized action in [-1, 1]^3 to a velocity command."""
    if len(action) != 3:
        raise ValueError(f"action must have 3 components, got {len(action)}")
    cx, cy, cz = (float(c) for c in action)
    for c in (cx, cy, cz):
        if not -1.0 <= c <= 1.0:
            raise ValueError(f"action component {c} outside [-1, 1]")
    speed = math.sqrt(cx * cx + cy * cy + cz * cz) * cfg.v_max / 3.0
    if speed == 0.0:
        return VelocityVector.hover()
    # atan2 keeps descents (cz < 0) distinct: elevation lands in (pi/2, pi]
    elevation = math.atan2(math.hypot(cx, cy), cz)
    azimuth = math.atan2(cy, cx)
    if azimuth == -math.pi:
        azimuth = math.pi
    return VelocityVector(speed, azimuth, elevation)


def displacement(v: VelocityVector, delta_t: float) -> tuple[float, float, float]:
    if v.speed == 0.0:
        return (0.0, 0.0, 0.0)
    r = delta_t * v.speed
    s = math.sin(v.elevation)
    return (r * s * math.cos(v.azimuth), r * s * math.sin(v.azimuth), r * math.cos(v.elevation))


def apply_motion(p: Position3, v: VelocityVector, cfg: MotionConfig) -> Position3:
    """Advance one slot and clamp the altitude into [z_min, z_max]."""
    dx, dy, dz = displacement(v, cfg.delta_t)
    z = min(max(p.z + dz, cfg.z_min), cfg.z_max)
    return Position3(p.x + dx, p.y + dy, z)


def min_return_time(p: Position3, cfg: MotionConfig) -> float:
    return p.distance_to(cfg.u_F) / cfg.v_max
