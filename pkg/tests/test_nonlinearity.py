import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

import specgal as sg
from specgal import ConfigurationError, NumericError, PorousMediumParams


def test_exponential_slope_at_zero():
    profile = sg.make_exponential_profile(2.0)
    _, slope = profile.evaluate(0.0)
    assert slope == pytest.approx(2.0 / 2.0 + 1.0, abs=1e-14)


def test_exponential_slope_limit():
    profile = sg.make_exponential_profile(3.0, clamp=(-5.0, 60.0))
    _, slope = profile.evaluate(60.0)
    assert slope == pytest.approx(1.5, abs=1e-14)


def test_exponential_sup_slope_at_left_endpoint():
    profile = sg.make_exponential_profile(2.0, clamp=(-3.0, 3.0))
    _, bound = profile.lipschitz_bounds()
    _, slope_left = profile.evaluate(-3.0)
    assert bound == pytest.approx(slope_left, abs=1e-14)


def test_exponential_values_at_zero():
    profile = sg.make_exponential_profile(2.0)
    value, slope = profile.evaluate(0.0)
    assert value == pytest.approx(-1.0, abs=1e-14)
    assert slope == pytest.approx(2.0, abs=1e-14)


def test_clamp_contract():
    profile = sg.make_exponential_profile(2.0, clamp=(-2.0, 2.0))
    assert profile.evaluate(-10.0) == profile.evaluate(-2.0)
    assert profile.evaluate(10.0) == profile.evaluate(2.0)


def test_linear_profile_values():
    profile = sg.make_linear_profile(1.5)
    value, slope = profile.evaluate(2.0)
    assert value == pytest.approx(3.0, abs=1e-14)
    assert slope == 1.5
    assert profile.evaluate(3.0) == (4.5, 1.5)
    assert profile.lipschitz_bounds() == (1.5, 1.5)


def test_lipschitz_bounds_exponential_unit_interval():
    # slope is monotone decreasing, so the bounds sit at the endpoints:
    # (1 + exp(-1), 1 + exp(1)) for k0 = 2 on [-1, 1]
    profile = sg.make_exponential_profile(2.0, clamp=(-1.0, 1.0))
    low, high = profile.lipschitz_bounds()
    assert low == pytest.approx(1.0 + math.exp(-1.0), abs=1e-14)
    assert high == pytest.approx(1.0 + math.e, abs=1e-14)


def test_lipschitz_upper_bound_random_pairs():
    profile = sg.make_exponential_profile(2.0, clamp=(-4.0, 4.0))
    _, high = profile.lipschitz_bounds()
    rng = np.random.default_rng(19)
    u = rng.uniform(-4.0, 4.0, 10_000)
    v = rng.uniform(-4.0, 4.0, 10_000)
    fu, _ = profile.evaluate(u)
    fv, _ = profile.evaluate(v)
    assert np.all(np.abs(fu - fv) <= high * np.abs(u - v) + 1e-12)


def test_slope_positive_on_dense_grid():
    for profile in (
        sg.make_linear_profile(0.3),
        sg.make_exponential_profile(1.0, clamp=(-20.0, 20.0)),
        sg.make_regularized_power_profile(
            PorousMediumParams(2.0, 1.0, 1.0, 0.05, 1.0)
        ),
    ):
        low, _ = profile.lipschitz_bounds()
        lo = max(profile.clamp[0], -50.0)
        hi = min(profile.clamp[1], 50.0)
        grid = np.linspace(lo, hi, 10_000)
        _, slopes = profile.evaluate(grid)
        assert np.all(slopes > 0)
        assert np.all(slopes >= low - 1e-12)


@settings(max_examples=200, deadline=None)
@given(
    u=st.floats(min_value=-4.0, max_value=4.0),
    v=st.floats(min_value=-4.0, max_value=4.0),
)
def test_two_sided_bounds_property(u, v):
    profile = sg.make_exponential_profile(2.0, clamp=(-4.0, 4.0))
    low, high = profile.lipschitz_bounds()
    fu, _ = profile.evaluate(u)
    fv, _ = profile.evaluate(v)
    gap = abs(u - v)
    assert abs(fu - fv) <= high * gap + 1e-9
    assert abs(fu - fv) >= low * gap - 1e-9


def test_finite_difference_matches_slope():
    profile = sg.make_exponential_profile(2.0)
    u = 0.7
    f0, slope = profile.evaluate(u)
    errors = []
    for h in (1e-4, 5e-5):
        fh, _ = profile.evaluate(u + h)
        errors.append(abs((fh - f0) / h - slope))
    assert errors[0] / errors[1] == pytest.approx(2.0, rel=0.05)


def test_regularized_power_diffusivity_floor():
    params = PorousMediumParams(
        exponent=2.0, pressure_constant=1.5, permeability=0.5,
        epsilon=0.1, saturation=1.0,
    )
    profile = sg.make_regularized_power_profile(params)
    scale = 2.0 * 1.5 * 0.5
    low, high = profile.lipschitz_bounds()
    assert low == pytest.approx(scale * 0.1**2.0, rel=1e-12)
    assert high == pytest.approx(scale * (1.0 + 0.1**2), rel=1e-12)
    _, slope0 = profile.evaluate(0.0)
    assert slope0 == pytest.approx(scale * 0.1**2.0, rel=1e-12)


def test_regularized_power_converges_to_power_law():
    rho = 0.5
    values = []
    for eps in (1e-2, 1e-4):
        params = PorousMediumParams(1.5, 1.0, 1.0, eps, 1.0)
        profile = sg.make_regularized_power_profile(params)
        _, slope = profile.evaluate(rho)
        values.append(slope)
    assert values[-1] == pytest.approx(1.5 * rho**1.5, rel=1e-6)


def test_regularized_power_antiderivative_against_quadrature():
    params = PorousMediumParams(2.7, 1.3, 0.8, 0.05, 1.0)
    profile = sg.make_regularized_power_profile(params)
    scale = 2.7 * 1.3 * 0.8
    for u in (0.0, 0.2, 0.9):
        expected, _ = quad(
            lambda r: scale * (r**2 + 0.05**2) ** (2.7 / 2.0), 0.0, u,
            epsabs=1e-14, epsrel=1e-13,
        )
        value, _ = profile.evaluate(u)
        assert value == pytest.approx(expected, abs=1e-12)


def test_configuration_errors():
    with pytest.raises(ConfigurationError):
        sg.make_linear_profile(0.0)
    with pytest.raises(ConfigurationError):
        sg.make_exponential_profile(-1.0)
    with pytest.raises(ConfigurationError):
        PorousMediumParams(1.0, 1.0, 1.0, 0.0, 1.0)


def test_nonfinite_input_rejected():
    profile = sg.make_linear_profile(1.0)
    with pytest.raises(NumericError):
        profile.evaluate(np.nan)
    with pytest.raises(NumericError):
        profile.evaluate(np.array([1.0, np.inf]))
