"""Probabilistic LoS/NLoS air-to-ground channel."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Position3


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class RadioConfig:
    fc: float = 5.8e9
    c_light: float = 3.0e8
    bandwidth_B: float = 40e6
    tx_power_Pt: float = dbm_to_watts(23.0)
    noise_density_dbm_hz: float = -174.0

    def __post_init__(self) -> None:
        for name in ("fc", "c_light", "bandwidth_B", "tx_power_Pt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def noise_power_sigma2(self) -> float:
        """Thermal noise over the per-node bandwidth, in watts."""
        return 10.0 ** ((self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_B) - 30.0) / 10.0)

    @property
    def free_space_constant_db(self) -> float:
        # frequency and wavelength terms of the path loss, independent of distance
        return 20.0 * math.log10(self.fc) + 20.0 * math.log10(4.0 * math.pi / self.c_light)


@dataclass(frozen=True)
class EnvironmentProfile:
    a: float
    b: float
    eta_los: float
    eta_nlos: float
    name: str = ""

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be positive")
        if not self.eta_nlos >= self.eta_los >= 0:
            raise ValueError("need eta_nlos >= eta_los >= 0")


SUBURBAN = EnvironmentProfile(4.88, 0.43, 0.2, 24.0, "suburban")
URBAN = EnvironmentProfile(9.61, 0.16, 1.2, 23.0, "urban")
DENSE_URBAN = EnvironmentProfile(12.08, 0.11, 1.8, 26.0, "dense-urban")

PROFILES = {p.name: p for p in (SUBURBAN, URBAN, DENSE_URBAN)}


def path_loss_db(d3: float, cfg: RadioConfig, eta: float) -> float:
    if not d3 > 0:
        raise ValueError(f"3D distance must be positive, got {d3}")
    return 20.0 * math.log10(d3) + cfg.free_space_constant_db + eta


def los_probability(elevation_deg: float, env: EnvironmentProfile) -> float:
    return 1.0 / (1.0 + env.a * math.exp(-env.b * (elevation_deg - env.a)))


def elevation_angle_deg(pap: Position3, gn: Position3) -> float:
    d2 = pap.horizontal_distance_to(gn)
    if d2 == 0.0:
        return 90.0
    return math.degrees(math.atan(pap.z / d2))


def spectral_efficiency(loss_db: float, cfg: RadioConfig) -> float:
    snr = cfg.tx_power_Pt / (cfg.noise_power_sigma2 * 10.0 ** (loss_db / 10.0))
    return math.log2(1.0 + snr)


def link_rates(pap: Position3, gn: Position3, cfg: RadioConfig, env: EnvironmentProfile):
    """Return (P_los, R_los, R_nlos) for one PAP/GN pair."""
    if not pap.z > 0:
        raise ValueError(f"PAP altitude must be positive, got {pap.z}")
    d3 = pap.distance_to(gn)
    p_los = los_probability(elevation_angle_deg(pap, gn), env)
    r_los = spectral_efficiency(path_loss_db(d3, cfg, env.eta_los), cfg)
    r_nlos = spectral_efficiency(path_loss_db(d3, cfg, env.eta_nlos), cfg)
    return p_los, r_los, r_nlos


def expected_spectral_efficiency(
    pap: Position3, gn: Position3, cfg: RadioConfig, env: EnvironmentProfile
) -> float:
    p_los, r_los, r_nlos = link_rates(pap, gn, cfg, env)
    return p_los * r_los + (1.0 - p_los) * r_nlos


def expected_spectral_efficiencies(pap, gns, cfg, env) -> list[float]:
    return [expected_spectral_efficiency(pap, g, cfg, env) for g in gns]
