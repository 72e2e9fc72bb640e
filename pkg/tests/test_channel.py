import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papfee.channel import (
    DENSE_URBAN,
    PROFILES,
    SUBURBAN,
    URBAN,
    EnvironmentProfile,
    RadioConfig,
    elevation_angle_deg,
    expected_spectral_efficiency,
    link_rates,
    los_probability,
    path_loss_db,
)
from papfee.geometry import Position3

RADIO = RadioConfig()


def test_path_loss_example():
    assert path_loss_db(100.0, RADIO, 0.2) == pytest.approx(87.91, abs=0.005)


def test_doubling_distance_adds_6db():
    assert path_loss_db(200.0, RADIO, 0.0) - path_loss_db(100.0, RADIO, 0.0) == pytest.approx(
        20 * math.log10(2), abs=1e-12
    )


def test_los_nlos_gap_is_eta_difference():
    gap = path_loss_db(321.0, RADIO, SUBURBAN.eta_nlos) - path_loss_db(321.0, RADIO, SUBURBAN.eta_los)
    assert gap == pytest.approx(23.8, abs=1e-9)


def test_path_loss_rejects_zero_distance():
    with pytest.raises(ValueError):
        path_loss_db(0.0, RADIO, 0.2)


def test_los_probability_at_beta_equal_a():
    assert los_probability(SUBURBAN.a, SUBURBAN) == pytest.approx(1 / 5.88, abs=1e-12)


def test_los_probability_at_zenith():
    assert los_probability(90.0, SUBURBAN) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("env", [SUBURBAN, URBAN, DENSE_URBAN])
def test_los_probability_monotone_and_open_interval(env):
    p = np.array([los_probability(b, env) for b in np.linspace(0, 90, 901)])
    assert np.all((p > 0) & (p <= 1))
    assert np.all(np.diff(p) >= 0)
    # strictly increasing until it rounds to 1 in double precision
    below = p < 1 - 1e-12
    assert np.all(np.diff(p[below]) > 0)


def test_profiles_keyed_by_name():
    assert set(PROFILES) == {"suburban", "urban", "dense-urban"}
    assert PROFILES["urban"] == URBAN


def test_profile_validation():
    with pytest.raises(ValueError):
        EnvironmentProfile(1.0, 1.0, 5.0, 1.0)


def test_noise_power():
    # -174 dBm/Hz over 40 MHz is about -97.98 dBm
    assert 10 * math.log10(RADIO.noise_power_sigma2) + 30 == pytest.approx(-97.98, abs=0.005)


def test_overhead_snr():
    pap, gn = Position3(0, 0, 100), Position3(0, 0, 0)
    assert elevation_angle_deg(pap, gn) == 90.0
    p_los, r_los, r_nlos = link_rates(pap, gn, RADIO, SUBURBAN)
    snr_db = 10 * math.log10(2**r_los - 1)
    assert snr_db == pytest.approx(33.07, abs=0.01)
    se = expected_spectral_efficiency(pap, gn, RADIO, SUBURBAN)
    assert se == pytest.approx(r_los, rel=1e-9)


def test_rejects_ground_level_pap():
    with pytest.raises(ValueError):
        link_rates(Position3(1, 1, 0), Position3(0, 0, 0), RADIO, SUBURBAN)


coord = st.floats(0, 1000)


@settings(max_examples=300, deadline=None)
@given(coord, coord, st.floats(20, 100), coord, coord, st.sampled_from([SUBURBAN, URBAN, DENSE_URBAN]))
def test_expected_se_between_nlos_and_los(x, y, z, gx, gy, env):
    pap, gn = Position3(x, y, z), Position3(gx, gy, 0)
    p_los, r_los, r_nlos = link_rates(pap, gn, RADIO, env)
    se = expected_spectral_efficiency(pap, gn, RADIO, env)
    assert r_nlos - 1e-12 <= se <= r_los + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(1, 89), st.floats(25, 400), st.floats(1.01, 3))
def test_se_nonincreasing_with_distance_at_fixed_elevation(beta, d, factor):
    def at(dist):
        rad = math.radians(beta)
        return expected_spectral_efficiency(
            Position3(dist * math.cos(rad), 0, dist * math.sin(rad)), Position3(0, 0, 0), RADIO, URBAN
        )

    assert at(d * factor) <= at(d) + 1e-12
