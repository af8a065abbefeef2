import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdris.channel import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    LinkGeometry,
    draw_channel_set,
    draw_rician_scalar,
    draw_rician_vector,
    steering_vector,
    trial_rng,
)
from bdris.config import LinkSet, default_config

N_DRAWS = 100_000


def test_zero_elevation_gives_all_ones():
    geom = ArrayGeometry(3, 5)
    for az in (0.0, 1.3, 5.9):
        np.testing.assert_array_equal(steering_vector(geom, 0.0, az), np.ones(15))


def test_half_wavelength_spacing_gives_delta_pi():
    geom = ArrayGeometry(2, 2, carrier_frequency=2e9, element_spacing=SPEED_OF_LIGHT / (2 * 2e9))
    assert geom.delta == pytest.approx(np.pi, rel=1e-15)
    assert ArrayGeometry(2, 2).delta == pytest.approx(np.pi, rel=1e-15)


def test_two_by_two_broadside_by_hand():
    # sin(pi/2) = 1, cos 0 = 1, sin 0 = 0: x = [1, e^{-j pi}], y = [1, 1]
    v = steering_vector(ArrayGeometry(2, 2), np.pi / 2, 0.0)
    expected = np.array([1, 1, np.exp(-1j * np.pi), np.exp(-1j * np.pi)])
    np.testing.assert_allclose(v, expected, atol=1e-15)
    assert v[0] == 1


@settings(max_examples=50, deadline=None)
@given(m_x=st.integers(1, 8), m_y=st.integers(1, 8),
       el=st.floats(0, np.pi / 2), az=st.floats(0, 2 * np.pi, exclude_max=True))
def test_steering_vector_unit_modulus_and_kronecker(m_x, m_y, el, az):
    geom = ArrayGeometry(m_x, m_y)
    v = steering_vector(geom, el, az)
    assert v.shape == (m_x * m_y,)
    np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)
    x = steering_vector(ArrayGeometry(m_x, 1), el, az)
    y_phase = geom.delta * np.sin(el) * np.sin(az) * np.arange(m_y)
    y = np.exp(-1j * y_phase)
    for i in range(m_x):
        for j in range(m_y):
            assert abs(v[i * m_y + j] - x[i] * y[j]) < 1e-12


@pytest.mark.parametrize("m_x, m_y", [(0, 4), (4, 0)])
def test_rejects_empty_axis(m_x, m_y):
    with pytest.raises(ValueError):
        ArrayGeometry(m_x, m_y)


def test_link_geometry_invariants():
    with pytest.raises(ValueError):
        LinkGeometry(distance=0.0, rician_k=1.0)
    with pytest.raises(ValueError):
        LinkGeometry(distance=1.0, rician_k=-1.0)
    with pytest.raises(ValueError):
        LinkGeometry(distance=1.0, rician_k=1.0, elevation=2.0)


def test_infinite_k_collapses_to_los():
    geom = ArrayGeometry(4, 4)
    link = LinkGeometry(distance=100.0, rician_k=1e12, elevation=0.7, azimuth=2.1)
    h = draw_rician_vector(link, geom, np.random.default_rng(0))
    expected = np.sqrt(1.0 / 100.0**2) * steering_vector(geom, 0.7, 2.1)
    assert np.linalg.norm(h - expected) / np.linalg.norm(expected) < 1e-5
    exact = draw_rician_vector(dataclasses.replace(link, rician_k=math.inf), geom, np.random.default_rng(0))
    np.testing.assert_allclose(exact, expected, atol=1e-15)


def _mean_entry_power(link, geom, draws=N_DRAWS, seed=0):
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(draws):
        total += np.sum(np.abs(draw_rician_vector(link, geom, rng)) ** 2) / geom.m
    return total / draws


def test_pure_nlos_mean_power():
    geom = ArrayGeometry(1, 2)
    link = LinkGeometry(distance=10.0, rician_k=0.0, power_gain=3.0)
    assert _mean_entry_power(link, geom) == pytest.approx(3.0 / 100.0, rel=0.02)


def test_uav_link_mean_power():
    # 100 m ST->SU link, K = 10
    geom = ArrayGeometry(2, 2)
    link = LinkGeometry(distance=100.0, rician_k=10.0)
    assert _mean_entry_power(link, geom) == pytest.approx(1e-4, rel=0.02)


def test_scalar_limits_and_moments():
    link = LinkGeometry(distance=50.0, rician_k=math.inf)
    assert draw_rician_scalar(link, np.random.default_rng(1)) == np.sqrt(1.0 / 50.0**2)

    rng = np.random.default_rng(2)
    nlos = LinkGeometry(distance=20.0, rician_k=0.0)
    power = np.mean([abs(draw_rician_scalar(nlos, rng)) ** 2 for _ in range(N_DRAWS)])
    assert power == pytest.approx(1 / 400.0, rel=0.02)

    # PT->Eve: 800 m, K = 5
    pt_eve = LinkGeometry(distance=800.0, rician_k=5.0)
    power = np.mean([abs(draw_rician_scalar(pt_eve, rng)) ** 2 for _ in range(N_DRAWS)])
    assert power == pytest.approx(1 / 800.0**2, rel=0.02)


def test_channel_set_is_deterministic_per_seed():
    config = default_config()
    a = draw_channel_set(config, trial_rng(42, 3))
    b = draw_channel_set(config, trial_rng(42, 3))
    for name in ("h_s", "h_e", "g"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert (a.f_s, a.f_e) == (b.f_s, b.f_e)
    c = draw_channel_set(config, trial_rng(42, 4))
    assert not np.array_equal(a.h_s, c.h_s)


def test_seed_wraps_modulo_2_64():
    a = trial_rng(2**64 - 1, 1).standard_normal(3)
    b = trial_rng(0, 0).standard_normal(3)
    np.testing.assert_array_equal(a, b)


def test_deterministic_links_have_zero_variance():
    pinned = dict(rician_k=math.inf, elevation=0.3, azimuth=1.0)
    links = LinkSet(*(dataclasses.replace(getattr(LinkSet(), n), **pinned)
                      for n in ("st_su", "st_eve", "st_pu", "pt_su", "pt_eve")))
    config = dataclasses.replace(default_config(), links=links)
    sets = [draw_channel_set(config, trial_rng(0, t)) for t in range(20)]
    for name in ("h_s", "h_e", "g", "f_s", "f_e"):
        stack = np.array([np.atleast_1d(getattr(s, name)) for s in sets])
        assert np.all(stack == stack[0])


def test_default_scenario_path_gains():
    config = default_config()
    m = config.array.m
    hs, fs = 0.0, 0.0
    for t in range(N_DRAWS):
        ch = draw_channel_set(config, trial_rng(7, t))
        hs += np.sum(np.abs(ch.h_s) ** 2) / m
        fs += abs(ch.f_s) ** 2
    assert hs / N_DRAWS == pytest.approx(1e-4, rel=0.02)
    assert fs / N_DRAWS == pytest.approx(1e-6, rel=0.02)


def test_shared_angles_mode_reuses_su_los():
    links = dataclasses.replace(LinkSet(), share_su_eve_angles=True,
                                st_su=LinkGeometry(100.0, math.inf), st_eve=LinkGeometry(100.0, math.inf))
    config = dataclasses.replace(default_config(), links=links)
    ch = draw_channel_set(config, trial_rng(0, 0))
    np.testing.assert_allclose(ch.h_s, ch.h_e, atol=1e-15)
