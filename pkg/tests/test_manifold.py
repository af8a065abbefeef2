import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdris.alternating import haar_unitary, interference_multiplier
from bdris.channel import ChannelSet, draw_channel_set, trial_rng
from bdris.config import default_config
from bdris.manifold import (
    LN2,
    ManifoldOptConfig,
    clamp_step,
    euclidean_gradient,
    gradient_bundle,
    lagrangian,
    optimize_phase,
    power_optimal_gradient,
    power_optimal_secrecy,
    project_to_tangent,
    retract,
)
from bdris.metrics import PowerConfig, combining_vector, effective_gain, link_metrics
from bdris.power import optimal_power
from bdris.verify import finite_difference_gradient, random_instance


def skew_residual(phi, t):
    x = phi.conj().T @ t
    return np.linalg.norm(x + x.conj().T)


def test_lagrangian_examples():
    rng = np.random.default_rng(0)
    channels, powers, p_s, _ = random_instance(rng, 4)
    phi = haar_unitary(4, rng)
    lm = link_metrics(channels, phi, p_s, powers)
    assert lagrangian(channels, phi, p_s, powers, 0.0) == pytest.approx(lm.rate_s - lm.rate_e, rel=1e-12)

    # interference exactly at the limit: penalty vanishes for any lambda
    at_limit = dataclasses.replace(powers, i_th=lm.interference_at_pu)
    assert lagrangian(channels, phi, p_s, at_limit, 3.0) == pytest.approx(lm.rate_s - lm.rate_e, rel=1e-12)

    # feasible by 1e-6 with lambda = 1 adds +1e-6
    below = dataclasses.replace(powers, i_th=lm.interference_at_pu + 1e-6)
    diff = lagrangian(channels, phi, p_s, below, 1.0) - (lm.rate_s - lm.rate_e)
    assert diff == pytest.approx(1e-6, rel=1e-6)


@pytest.mark.parametrize("m, count", [(4, 30), (16, 3)])
def test_gradient_matches_finite_differences(m, count):
    rng = np.random.default_rng(m)
    for _ in range(count):
        channels, powers, p_s, lam = random_instance(rng, m)
        phi = haar_unitary(m, rng)
        analytic = euclidean_gradient(channels, phi, p_s, powers, lam)
        numeric = finite_difference_gradient(channels, phi, p_s, powers, lam)
        assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-5


def test_gradient_at_physical_scale():
    config = default_config().with_elements(4)
    rng = trial_rng(5, 0)
    channels = draw_channel_set(config, rng)
    phi = haar_unitary(4, rng)
    p_s = optimal_power(channels, phi, config.powers).p_star or 1.0
    analytic = euclidean_gradient(channels, phi, p_s, config.powers, 0.0)
    # the physical-scale objective is tiny in phi, so a larger FD step keeps the
    # rounding error below the truncation error
    numeric = finite_difference_gradient(channels, phi, p_s, config.powers, 0.0, step=1e-4)
    assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-5


def test_su_only_gradient_closed_form():
    rng = np.random.default_rng(3)
    m = 6
    channels, powers, p_s, _ = random_instance(rng, m)
    channels = dataclasses.replace(channels, h_e=np.zeros(m, complex))
    phi = haar_unitary(m, rng)
    w = combining_vector(m)
    noise = powers.noise_su(channels)
    inner = channels.h_s @ phi @ w
    gamma = abs(inner) ** 2 * p_s / noise
    expected = (2 * p_s / (LN2 * noise * (1 + gamma))) * inner * np.outer(channels.h_s.conj(), w.conj())
    np.testing.assert_allclose(euclidean_gradient(channels, phi, p_s, powers, 0.0), expected, rtol=1e-12)


def test_zero_power_zero_gradient():
    rng = np.random.default_rng(4)
    channels, powers, _, _ = random_instance(rng, 5)
    phi = haar_unitary(5, rng)
    assert np.all(euclidean_gradient(channels, phi, 0.0, powers, 0.0) == 0)
    assert np.all(euclidean_gradient(channels, phi, 0.0, powers, 2.0) == 0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 10))
def test_projection_properties(seed, m):
    rng = np.random.default_rng(seed)
    phi = haar_unitary(m, rng)
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    t = project_to_tangent(phi, z)
    assert skew_residual(phi, t) < 1e-10 * max(1.0, np.linalg.norm(z))
    np.testing.assert_allclose(project_to_tangent(phi, t), t, atol=1e-12 * max(1.0, np.linalg.norm(z)))
    literal = project_to_tangent(phi, z, "paper-literal")
    np.testing.assert_allclose(literal, 2 * t, atol=1e-10 * max(1.0, np.linalg.norm(z)))


def test_hermitian_direction_at_identity_projects_to_zero():
    rng = np.random.default_rng(5)
    z = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    h = z + z.conj().T
    assert np.linalg.norm(project_to_tangent(np.eye(6), h)) < 1e-14


def test_projection_rejects_non_unitary():
    with pytest.raises(ValueError):
        project_to_tangent(2 * np.eye(3), np.eye(3))


def test_retract_examples():
    rng = np.random.default_rng(6)
    phi = haar_unitary(5, rng)
    t = project_to_tangent(phi, rng.standard_normal((5, 5)) + 0j)
    np.testing.assert_array_equal(retract(phi, t, 0.0), phi)
    # M = 1: phi = e^{ja}, tangent j b e^{ja} -> e^{j(a + eta b)}
    a, b, eta = 0.4, 1.3, 0.7
    got = retract(np.array([[np.exp(1j * a)]]), np.array([[1j * b * np.exp(1j * a)]]), eta)
    assert got[0, 0] == pytest.approx(np.exp(1j * (a + eta * b)), abs=1e-14)
    with pytest.raises(ValueError):
        retract(phi, phi, 0.1)  # phi^H phi = I is Hermitian, not skew


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eta=st.floats(0, 5))
def test_retract_stays_unitary(seed, eta):
    rng = np.random.default_rng(seed)
    phi = haar_unitary(8, rng)
    t = project_to_tangent(phi, rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
    out = retract(phi, t, eta)
    assert np.linalg.norm(out @ out.conj().T - np.eye(8)) < 1e-8


def test_clamp_step_examples():
    g = np.array([1.0, 1.0], complex)
    channels = ChannelSet(np.ones(2, complex), np.ones(2, complex), g, 0j, 0j)
    phi = np.eye(2)
    p_s = 1.0
    load = effective_gain(g, phi) * p_s  # 2
    powers = PowerConfig(i_th=load / 2)
    assert clamp_step(10.0, channels, phi, p_s, powers) == pytest.approx(0.5)
    assert clamp_step(0.3, channels, phi, p_s, powers) == 0.3
    assert clamp_step(10.0, channels, phi, 0.0, powers) == 10.0


def test_fast_step_matches_dense_retraction():
    rng = np.random.default_rng(7)
    channels, powers, p_s, lam = random_instance(rng, 6)
    powers = dataclasses.replace(powers, i_th=1e6)
    phi0 = haar_unitary(6, rng)
    for projection in ("canonical", "paper-literal"):
        cfg = ManifoldOptConfig(max_inner_iterations=1, projection=projection)
        phi1, trace = optimize_phase(channels, phi0, p_s, powers, cfg, lam=lam)
        assert trace.accepted == 1
        bundle = gradient_bundle(channels, phi0, p_s, powers, lam, projection)
        dense = retract(phi0, bundle.riemannian, trace.steps[0])
        np.testing.assert_allclose(phi1, dense, atol=1e-12)


def test_ascent_is_monotone_and_unitary():
    rng = np.random.default_rng(8)
    for _ in range(100):
        channels, powers, p_s, lam = random_instance(rng, 4)
        phi, trace = optimize_phase(channels, haar_unitary(4, rng), p_s, powers, lam=lam)
        assert np.all(np.diff(trace.lagrangian) >= 0)
        assert len(trace.lagrangian) == trace.accepted + 1
        assert np.linalg.norm(phi @ phi.conj().T - np.eye(4)) < 1e-8


def test_exit_is_feasible_when_start_is():
    config = default_config().with_elements(16)
    for t in range(20):
        rng = trial_rng(9, t)
        channels = draw_channel_set(config, rng)
        phi0 = haar_unitary(16, rng)
        decision = optimal_power(channels, phi0, config.powers)
        if decision.p_star == 0:
            continue
        phi, _ = optimize_phase(channels, phi0, decision.p_star, config.powers)
        load = effective_gain(channels.g, phi) * decision.p_star
        assert load <= config.powers.i_th * (1 + 1e-6)


def test_stationary_start_returns_immediately():
    # with M = 1 the combined gain is independent of the phase
    rng = np.random.default_rng(10)
    channels, powers, p_s, _ = random_instance(rng, 1)
    phi0 = np.array([[np.exp(0.3j)]])
    phi, trace = optimize_phase(channels, phi0, p_s, powers)
    assert trace.accepted == 0 and trace.status == "converged"
    np.testing.assert_array_equal(phi, phi0)


def test_config_validation():
    with pytest.raises(ValueError):
        ManifoldOptConfig(backtrack_factor=1.0)
    with pytest.raises(ValueError):
        ManifoldOptConfig(projection="other")


def _fd_power_optimal(channels, phi, powers, step=1e-6):
    m = phi.shape[0]
    grad = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            for unit in (1.0, 1j):
                e = np.zeros((m, m), dtype=complex)
                e[i, j] = step * unit
                d = (power_optimal_secrecy(channels, phi + e, powers)
                     - power_optimal_secrecy(channels, phi - e, powers)) / (2 * step)
                grad[i, j] += d * unit
    return grad


def test_power_optimal_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    checked = {"limited": 0, "p_max": 0}
    while min(checked.values()) < 5:
        channels, powers, _, _ = random_instance(rng, 4)
        phi = haar_unitary(4, rng)
        decision = optimal_power(channels, phi, powers)
        if decision.p_star == 0.0:
            continue
        load = effective_gain(channels.g, phi) * powers.p_max
        # stay clear of the kink where I_th / |g^T u|^2 meets P_max
        if abs(load / powers.i_th - 1.0) < 0.05:
            continue
        key = "p_max" if decision.p_star == powers.p_max else "limited"
        checked[key] += 1
        analytic = power_optimal_gradient(channels, phi, powers)
        numeric = _fd_power_optimal(channels, phi, powers)
        assert np.allclose(analytic, numeric, rtol=1e-5, atol=1e-7), key


def test_power_optimal_gradient_equals_kkt_lagrangian_gradient():
    rng = np.random.default_rng(12)
    hits = 0
    while hits < 10:
        channels, powers, _, _ = random_instance(rng, 6)
        phi = haar_unitary(6, rng)
        decision = optimal_power(channels, phi, powers)
        if decision.p_star == 0.0 or decision.p_star >= powers.p_max:
            continue
        hits += 1
        lam = interference_multiplier(channels, phi, decision, powers)
        assert lam > 0
        expected = euclidean_gradient(channels, phi, decision.p_star, powers, lam)
        np.testing.assert_allclose(power_optimal_gradient(channels, phi, powers), expected,
                                   rtol=1e-9, atol=1e-12)
