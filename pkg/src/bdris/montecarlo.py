"""Seeded Monte Carlo campaigns: trials, baselines and parameter sweeps."""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import alternating
from .alternating import ConvergenceTrace, TraceRecord, haar_unitary
from .channel import ChannelSet, draw_channel_set, trial_rng
from .config import Method, ScenarioConfig, to_dict
from .manifold import InnerTrace, ManifoldOptConfig, _ascent, _interference_clamp, feasible_direction, phase_objective
from .metrics import LinkMetrics, PowerConfig, combining_vector, dbm_to_mw, link_metrics
from .power import PowerDecision, optimal_power

THREADS_ENV = "BDRIS_THREADS"


class Axis(str, enum.Enum):
    P_MAX = "p_max"  # points in dBm
    I_TH = "i_th"  # points in dBm
    M = "m"
    ITERATIONS = "iterations"


@dataclass
class TrialResult:
    metrics: LinkMetrics
    trace: ConvergenceTrace
    phi: np.ndarray
    decision: PowerDecision


def random_diagonal(m: int, rng: np.random.Generator) -> np.ndarray:
    return np.diag(np.exp(1j * rng.uniform(0.0, 2 * np.pi, m)))


def optimize_diagonal(channels: ChannelSet, phi_init: np.ndarray, p_s: float, powers: PowerConfig,
                      cfg: ManifoldOptConfig | None = None, lam: float | None = None,
                      power_optimal: bool = False) -> tuple[np.ndarray, InnerTrace]:
    """Conventional-RIS counterpart of :func:`bdris.manifold.optimize_phase`.

    The Euclidean gradient is masked to its diagonal and each element moves
    along its own unit circle, so every iterate stays diagonal and unitary.
    """
    cfg = cfg or ManifoldOptConfig()
    diag = np.diagonal(phi_init)
    if not np.allclose(phi_init, np.diag(diag)) or not np.allclose(np.abs(diag), 1.0):
        raise ValueError("phi_init must be diagonal with unit-modulus entries")
    lam = cfg.lambda_init if lam is None else lam
    m = diag.shape[0]
    objective = phase_objective(channels, p_s, powers, lam, power_optimal)
    scale = 1.0 / np.sqrt(m)

    def direction(theta):
        u = np.exp(1j * theta) * scale
        g_theta = np.imag(objective.grad_vector(u) * u.conj())
        slope = None
        if cfg.constraint == "projected" and objective.active(u):
            g_load = np.imag(objective.interference_vector(u) * u.conj())
            mu, slope = feasible_direction(g_theta, g_load, lambda x, y: float(x @ y), cfg.push_margin)
            g_theta = g_theta - mu * g_load
        norm = float(np.linalg.norm(g_theta))
        if slope is None:
            slope = norm**2

        def trial(eta):
            new = theta + eta * g_theta
            return new, np.exp(1j * new) * scale

        return u, norm, slope, trial

    clamp = _interference_clamp(p_s, powers.i_th, enabled=not power_optimal)
    theta, trace = _ascent(objective, np.angle(diag), cfg, direction, clamp)
    phi = np.diag(np.exp(1j * theta))
    if cfg.dual_step_rho > 0 and not power_optimal:
        interference = abs(channels.g @ (phi @ combining_vector(m))) ** 2 * p_s
        trace.lam = max(0.0, lam + cfg.dual_step_rho * (interference - powers.i_th))
    return phi, trace


def run_trial(config: ScenarioConfig, trial_index: int, seed_offset: int = 0) -> TrialResult:
    """One seeded realisation, end to end.

    The trial stream first yields the channels, then the initial phi, so
    every method sees the same channels and the optimiser starts from the
    random-phase benchmark's matrix.
    """
    rng = trial_rng(config.base_seed, seed_offset + trial_index)
    channels = draw_channel_set(config, rng)
    powers = config.powers
    method = Method(config.method)
    if method is Method.RANDOM_PHASE:
        phi = haar_unitary(channels.m, rng)
        decision = optimal_power(channels, phi, powers)
        metrics = link_metrics(channels, phi, decision.p_star, powers)
        trace = ConvergenceTrace(status="benchmark")
        trace.records.append(TraceRecord(1, metrics.secrecy_rate, decision.p_star,
                                         powers.i_th - metrics.interference_at_pu, 0, 0.0))
        return TrialResult(metrics, trace, phi, decision)
    if method is Method.DIAGONAL_RIS:
        phi, decision, trace = alternating.solve(channels, powers, config.ao, rng,
                                                 phase_step=optimize_diagonal, draw_phi=random_diagonal)
    else:
        phi, decision, trace = alternating.solve(channels, powers, config.ao, rng)
    return TrialResult(link_metrics(channels, phi, decision.p_star, powers), trace, phi, decision)


def _trial_secrecy(args) -> tuple[float, list[float]]:
    config, index, offset = args
    result = run_trial(config, index, offset)
    return result.metrics.secrecy_rate, [r.secrecy_rate for r in result.trace.records]


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def run_trials(config: ScenarioConfig, seed_offset: int = 0, workers: int | None = None):
    """Final secrecy and per-iteration traces, ordered by trial index."""
    jobs = [(config, t, seed_offset) for t in range(config.trials)]
    workers = resolve_workers(workers)
    if workers == 1:
        out = [_trial_secrecy(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_trial_secrecy, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return np.array([o[0] for o in out]), [o[1] for o in out]


@dataclass
class SweepResult:
    axis: Axis
    values: list
    # method -> (points, trials) per-trial secrecy rates
    samples: dict[str, np.ndarray]

    @property
    def trials(self) -> dict[str, list[int]]:
        return {m: [s.shape[1]] * s.shape[0] for m, s in self.samples.items()}

    def mean(self, method: str) -> np.ndarray:
        return self.samples[method].mean(axis=1)

    def std_err(self, method: str) -> np.ndarray:
        s = self.samples[method]
        if s.shape[1] < 2:
            return np.zeros(s.shape[0])
        return s.std(axis=1, ddof=1) / np.sqrt(s.shape[1])

    def rows(self):
        for method in self.samples:
            means, errs = self.mean(method), self.std_err(method)
            for i, value in enumerate(self.values):
                yield value, method, float(means[i]), float(errs[i]), int(self.samples[method].shape[1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["axis_value", "method", "mean_secrecy_bps_hz", "std_err", "trials"])
        for value, method, mean, err, n in self.rows():
            writer.writerow([repr(value), method, repr(mean), repr(err), n])
        return buf.getvalue()

    def to_json(self, config: ScenarioConfig) -> str:
        doc = {
            "config": to_dict(config),
            "axis": self.axis.value,
            "points": [
                {"axis_value": v, "method": m, "mean_secrecy_bps_hz": mean, "std_err": err, "trials": n}
                for v, m, mean, err, n in self.rows()
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def config_at(config: ScenarioConfig, axis: Axis, value) -> ScenarioConfig:
    if axis is Axis.P_MAX:
        return config.with_powers(p_max=dbm_to_mw(value))
    if axis is Axis.I_TH:
        return config.with_powers(i_th=dbm_to_mw(value))
    if axis is Axis.M:
        return config.with_elements(int(value))
    if axis is Axis.ITERATIONS:
        ao = dataclasses.replace(config.ao, max_outer_iterations=int(value))
        return dataclasses.replace(config, ao=ao)
    raise ValueError(f"unknown axis {axis!r}")


def run_sweep(config: ScenarioConfig, axis: Axis | str, points: list, methods: list | None = None,
              workers: int | None = None) -> SweepResult:
    """Mean secrecy per sweep point and method.

    With ``config.paired_points`` every point reuses the trial seeds
    ``base_seed + t``; otherwise point ``i`` is offset by ``i * trials``.
    The iterations axis runs each trial once with the largest budget and
    reads the trace at each requested iteration (holding the final value).
    """
    axis = Axis(axis)
    if not points:
        raise ValueError("points must be non-empty")
    methods = [Method(m) for m in (methods or [config.method])]
    samples = {}
    for method in methods:
        base = dataclasses.replace(config, method=method)
        if axis is Axis.ITERATIONS:
            cfg = config_at(base, axis, max(points))
            _, traces = run_trials(cfg, 0, workers)
            rows = []
            for k in points:
                rows.append([tr[min(int(k), len(tr)) - 1] if tr else 0.0 for tr in traces])
            samples[method.value] = np.array(rows)
            continue
        rows = []
        for i, value in enumerate(points):
            offset = 0 if config.paired_points else i * config.trials
            final, _ = run_trials(config_at(base, axis, value), offset, workers)
            rows.append(final)
        samples[method.value] = np.array(rows)
    return SweepResult(axis=axis, values=list(points), samples=samples)


def paired_bootstrap_ci(diff: np.ndarray, level: float = 0.95, n_boot: int = 5000,
                        seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of paired differences."""
    diff = np.asarray(diff, dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, diff.size, size=(n_boot, diff.size))
    means = diff[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    return float(np.quantile(means, alpha)), float(np.quantile(means, 1.0 - alpha))
