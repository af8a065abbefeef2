"""Oracle suites behind ``bdris verify``.

Each check compares an implementation path against an independent route
(finite differences, dense grids, direct unitarity residuals) and returns a
:class:`CheckResult`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alternating import haar_unitary, solve
from .channel import ChannelSet, draw_channel_set, trial_rng
from .config import ScenarioConfig, default_config
from .manifold import euclidean_gradient, project_to_tangent, retract
from .metrics import PowerConfig, effective_gain, link_metrics
from .power import optimal_power


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_instance(rng: np.random.Generator, m: int, scale: float = 1.0):
    """Unit-scale random channels, noise and power for gradient checks."""
    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    channels = ChannelSet(h_s=scale * cn(m), h_e=scale * cn(m), g=scale * cn(m),
                          f_s=complex(cn(1)[0]), f_e=complex(cn(1)[0]))
    powers = PowerConfig(p_max=10.0, q_p=rng.uniform(0.1, 2.0), sigma_s_sq=rng.uniform(0.1, 2.0),
                         sigma_e_sq=rng.uniform(0.1, 2.0), i_th=rng.uniform(0.1, 2.0))
    return channels, powers, rng.uniform(0.1, 5.0), rng.uniform(0.0, 2.0)


def metrics_lagrangian(channels, phi, p_s, powers, lam) -> float:
    lm = link_metrics(channels, phi, p_s, powers)
    return lm.rate_s - lm.rate_e - lam * (lm.interference_at_pu - powers.i_th)


def finite_difference_gradient(channels, phi, p_s, powers, lam, step: float = 1e-6) -> np.ndarray:
    """Central differences along the real and imaginary part of every entry.

    With the real-gradient convention ``dL = Re tr(G^H D)`` the real
    perturbation recovers ``Re G_ij`` and the imaginary one ``Im G_ij``.
    """
    m = phi.shape[0]
    grad = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            for direction, unit in ((1.0, 1.0), (1j, 1j)):
                e = np.zeros((m, m), dtype=complex)
                e[i, j] = step * direction
                up = metrics_lagrangian(channels, phi + e, p_s, powers, lam)
                down = metrics_lagrangian(channels, phi - e, p_s, powers, lam)
                grad[i, j] += unit * (up - down) / (2 * step)
    return grad


def check_gradient(instances=((4, 100), (16, 20)), seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, checked, skipped = 0.0, 0, 0
    for m, count in instances:
        for _ in range(count):
            channels, powers, p_s, lam = random_instance(rng, m)
            phi = haar_unitary(m, rng)
            lm = link_metrics(channels, phi, p_s, powers)
            if abs(lm.rate_s - lm.rate_e) < 1e-6:
                skipped += 1
                continue
            analytic = euclidean_gradient(channels, phi, p_s, powers, lam)
            numeric = finite_difference_gradient(channels, phi, p_s, powers, lam)
            worst = max(worst, np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric))
            checked += 1
    return CheckResult("gradient vs finite differences", worst < 1e-5,
                       f"max rel err {worst:.2e} over {checked} instances ({skipped} skipped), tol 1e-5")


def check_unitarity(steps: int = 10_000, sizes=(4, 8, 16), seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_size = steps // len(sizes)
    for k, m in enumerate(sizes):
        phi = haar_unitary(m, rng)
        count = per_size + (steps - per_size * len(sizes) if k == 0 else 0)
        for _ in range(count):
            z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            tangent = project_to_tangent(phi, z)
            phi = retract(phi, tangent, rng.uniform(0.0, 1.0))
            worst = max(worst, np.linalg.norm(phi @ phi.conj().T - np.eye(m)))
    return CheckResult("unitarity after retraction", worst < 1e-8,
                       f"max ||PP^H - I||_F {worst:.2e} over {steps} steps, tol 1e-8")


def secrecy_grid(channels: ChannelSet, phi: np.ndarray, powers: PowerConfig, points: int = 10_000):
    """Secrecy rate on a uniform grid of the feasible power interval."""
    g_gain = effective_gain(channels.g, phi)
    upper = powers.p_max if g_gain == 0 else min(powers.i_th / g_gain, powers.p_max)
    grid = np.linspace(0.0, upper, points)
    a_s = effective_gain(channels.h_s, phi) / (powers.sigma_s_sq + abs(channels.f_s) ** 2 * powers.q_p)
    a_e = effective_gain(channels.h_e, phi) / (powers.sigma_e_sq + abs(channels.f_e) ** 2 * powers.q_p)
    rates = np.maximum(0.0, np.log2(1 + a_s * grid) - np.log2(1 + a_e * grid))
    return grid, rates


def check_power_switch(instances: int = 1000, config: ScenarioConfig | None = None, seed: int = 3) -> CheckResult:
    config = config or default_config()
    failures = 0
    for t in range(instances):
        rng = trial_rng(seed, t)
        channels = draw_channel_set(config, rng)
        phi = haar_unitary(channels.m, rng)
        decision = optimal_power(channels, phi, config.powers)
        grid, rates = secrecy_grid(channels, phi, config.powers)
        best = int(np.argmax(rates))
        got = link_metrics(channels, phi, decision.p_star, config.powers).secrecy_rate
        ok = got >= rates[best] - 1e-12
        if rates[best] > 0:
            ok = ok and abs(decision.p_star - grid[best]) <= grid[1] - grid[0]
        failures += not ok
    return CheckResult("power switch vs grid search", failures == 0,
                       f"{failures} of {instances} instances off the 10^4-point grid optimum")


def check_ao_monotone(instances: int = 100, m: int = 8, config: ScenarioConfig | None = None,
                      seed: int = 4) -> CheckResult:
    config = (config or default_config()).with_elements(m)
    powers = config.powers
    worst_drop, infeasible = 0.0, 0
    for t in range(instances):
        rng = trial_rng(seed, t)
        channels = draw_channel_set(config, rng)
        phi, _, trace = solve(channels, powers, config.ao, rng)
        s = trace.secrecy
        if s.size > 1:
            worst_drop = max(worst_drop, float(np.max(s[:-1] - s[1:])))
        for r in trace.records:
            if r.interference_slack < -powers.i_th * 1e-6 or not 0 <= r.p_s <= powers.p_max:
                infeasible += 1
        if np.linalg.norm(phi @ phi.conj().T - np.eye(m)) > 1e-8:
            infeasible += 1
    return CheckResult("AO monotone and feasible", worst_drop <= 1e-9 and infeasible == 0,
                       f"largest per-iteration drop {worst_drop:.1e} (tol 1e-9), {infeasible} infeasible records")


SUITES = {
    "gradient": check_gradient,
    "unitarity": check_unitarity,
    "power": check_power_switch,
    "monotonicity": check_ao_monotone,
}


def run_all(names=None) -> list[CheckResult]:
    return [SUITES[n]() for n in (names or SUITES)]


