import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papfee.geometry import VelocityVector
from papfee.power import (
    UavParams,
    air_density,
    blade_profile_power,
    flight_mode,
    forward_power,
    hover_power,
    min_power_speed,
    total_power,
    vertical_power,
)

P = UavParams()


def oracle_forward(v, eps, z):
    """Straight transcription of the forward-flight expression."""
    rho = 1.225 * (1 - 2.2558e-5 * z) ** 4.2577
    pb = 0.002 / 8 * rho * 0.05 * 0.06 * 102**3
    k = 24.5**2 / (4 * 16 * rho**2 * 0.06**2)
    return (
        4 * pb * (1 + 3 * v**2 / 102**2)
        + 0.5 * 0.9 * 0.038 * rho * v**3
        + 24.5 * (math.sqrt(math.sqrt(k + v**4 / 4) - v**2 / 2) + math.cos(eps))
    )


def test_density_examples():
    assert air_density(0, P) == pytest.approx(1.225)
    assert air_density(100, P) == pytest.approx(1.2133, abs=1e-4)
    zs = np.linspace(0, 1000, 101)
    assert np.all(np.diff([air_density(z, P) for z in zs]) < 0)


def test_density_domain():
    with pytest.raises(ValueError):
        air_density(-1, P)


def test_blade_profile_power():
    assert blade_profile_power(0, P) / 4 == pytest.approx(0.975, abs=5e-4)
    assert blade_profile_power(0, P) == pytest.approx(3.90, abs=2e-3)
    fast = UavParams(tip_speed=204.0)
    assert blade_profile_power(0, fast) == pytest.approx(8 * blade_profile_power(0, P))


def test_hover_power():
    assert hover_power(0, P) == pytest.approx(115.7, abs=0.05)
    assert hover_power(100, P) > hover_power(0, P)


def test_hover_superlinear_in_weight():
    heavy = UavParams(weight_W=49.0)
    assert hover_power(0, heavy) - blade_profile_power(0, heavy) == pytest.approx(
        2**1.5 * (hover_power(0, P) - blade_profile_power(0, P))
    )


@pytest.mark.parametrize("v", [0.3, 5.0, 11.0, 24.0])
@pytest.mark.parametrize("eps", [0.2, math.pi / 2, 2.5])
def test_forward_matches_oracle(v, eps):
    assert forward_power(v, eps, 60.0, P) == pytest.approx(oracle_forward(v, eps, 60.0), rel=1e-12)


def test_forward_rejects_zero_speed():
    with pytest.raises(ValueError):
        forward_power(0.0, math.pi / 2, 0, P)


def test_vertical_limits_and_monotonicity():
    rho = air_density(0, P)
    limit = 24.5 / 2 * math.sqrt(2 * 24.5 / (4 * rho * 0.06)) + blade_profile_power(0, P)
    assert vertical_power(1e-12, 0, P) == pytest.approx(limit)
    vs = np.linspace(0.01, 24, 500)
    assert np.all(np.diff([vertical_power(v, 0, P) for v in vs]) > 0)
    assert vertical_power(5, 0, P) > hover_power(0, P)


def test_descent_charged_at_climb_magnitude():
    assert total_power(VelocityVector(8, 0, math.pi), 50, P) == vertical_power(8, 50, P)


def test_dispatch():
    assert total_power(VelocityVector.hover(), 30, P) == hover_power(30, P)
    assert total_power(VelocityVector(8, 0, 0.0), 30, P) == vertical_power(8, 30, P)
    assert total_power(VelocityVector(8, 0, math.pi / 2), 30, P) == forward_power(8, math.pi / 2, 30, P)
    assert flight_mode(VelocityVector(5e-10, 0, 1.0)) == "hover"
    assert flight_mode(VelocityVector(1.0, 0, 5e-10)) == "vertical"
    assert flight_mode(VelocityVector(1.0, 0, 2e-9)) == "forward"


def test_level_minimum_near_11():
    v = min_power_speed(100, P, 24.0)
    assert 9 <= v <= 13
    assert forward_power(v, math.pi / 2, 100, P) == pytest.approx(120.38, abs=0.01)


def test_forward_discontinuity_at_zero_speed_is_kept():
    # the forward expression tends to sqrt(2) x the hover induced term as v -> 0
    rho = air_density(0, P)
    induced_hover = 24.5**1.5 / math.sqrt(4 * 4 * rho * 0.06)
    near_zero = forward_power(1e-6, math.pi / 2, 0, P) - blade_profile_power(0, P)
    assert near_zero == pytest.approx(math.sqrt(2) * induced_hover, rel=1e-6)


def test_induced_term_decreasing():
    vs = np.linspace(0.1, 24, 300)
    bare = UavParams(profile_drag_Deltap=1e-12, drag_coeff_CD=1e-12)
    powers = [forward_power(v, math.pi / 2, 0, bare) for v in vs]
    assert np.all(np.diff(powers) < 0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 24), st.floats(0, math.pi), st.floats(0, 100))
def test_powers_positive(v, eps, z):
    assert total_power(VelocityVector(v, 0.3, eps), z, P) > 0
