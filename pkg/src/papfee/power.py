"""Rotary-wing propulsion power for forward, hover and axial flight."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import VelocityVector

SPEED_EPS = 1e-9
ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class UavParams:
    weight_W: float = 24.5
    rotors_NR: int = 4
    tip_speed: float = 102.0
    fuselage_area_Af: float = 0.038
    drag_coeff_CD: float = 0.9
    rotor_area_Ar: float = 0.06
    profile_drag_Deltap: float = 0.002
    solidity_s: float = 0.05
    rho0: float = 1.225

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


def air_density(z: float, p: UavParams) -> float:
    """Barometric density at altitude z (m), scaled to sea level rho0."""
    if not 0 <= z < 44330:
        raise ValueError(f"altitude {z} outside the density model range")
    return p.rho0 * (1.0 - 2.2558e-5 * z) ** 4.2577


def blade_profile_power(z: float, p: UavParams) -> float:
    """Profile power of all rotors at zero airspeed, N_R * P_b."""
    rho = air_density(z, p)
    p_b = p.profile_drag_Deltap / 8.0 * rho * p.solidity_s * p.rotor_area_Ar * p.tip_speed**3
    return p.rotors_NR * p_b


def forward_power(v: float, elevation: float, z: float, p: UavParams) -> float:
    if v <= 0:
        raise ValueError("forward flight needs v > 0; use hover_power")
    rho = air_density(z, p)
    W, nr = p.weight_W, p.rotors_NR
    blade = blade_profile_power(z, p) * (1.0 + 3.0 * v * v / p.tip_speed**2)
    fuselage = 0.5 * p.drag_coeff_CD * p.fuselage_area_Af * rho * v**3
    k = W * W / (4.0 * nr * nr * rho * rho * p.rotor_area_Ar**2)
    # cancellation-free form of sqrt(k + v^4/4) - v^2/2
    inner = k / (math.sqrt(k + v**4 / 4.0) + v * v / 2.0)
    induced = W * (math.sqrt(inner) + math.cos(elevation))
    return blade + fuselage + induced


def hover_power(z: float, p: UavParams) -> float:
    rho = air_density(z, p)
    return blade_profile_power(z, p) + p.weight_W**1.5 / math.sqrt(
        4.0 * p.rotors_NR * rho * p.rotor_area_Ar
    )


def vertical_power(v: float, z: float, p: UavParams) -> float:
    """Axial climb power; descents are charged at the same magnitude."""
    v = abs(v)
    rho = air_density(z, p)
    W = p.weight_W
    return W / 2.0 * (v + math.sqrt(v * v + 2.0 * W / (p.rotors_NR * rho * p.rotor_area_Ar))) + (
        blade_profile_power(z, p)
    )


def flight_mode(v: VelocityVector) -> str:
    if abs(v.speed) < SPEED_EPS:
        return "hover"
    if abs(v.elevation) < ANGLE_EPS or abs(v.elevation - math.pi) < ANGLE_EPS:
        return "vertical"
    return "forward"


def total_power(v: VelocityVector, z: float, p: UavParams) -> float:
    mode = flight_mode(v)
    if mode == "hover":
        return hover_power(z, p)
    if mode == "vertical":
        return vertical_power(v.speed, z, p)
    return forward_power(v.speed, v.elevation, z, p)


def min_power_speed(z: float, p: UavParams, v_max: float, samples: int = 2400) -> float:
    """Level-flight speed in (0, v_max] with the least forward power (grid search)."""
    best_v, best_power = v_max, math.inf
    for i in range(1, samples + 1):
        v = v_max * i / samples
        pw = forward_power(v, math.pi / 2, z, p)
        if pw < best_power:
            best_v, best_power = v, pw
    return best_v
