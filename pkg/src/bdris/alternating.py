"""Alternating optimisation of transmit power and phase-shift matrix."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .manifold import LN2, ManifoldOptConfig, optimize_phase
from .metrics import PowerConfig, effective_gain, link_metrics
from .power import Branch, PowerDecision, optimal_power

MULTIPLIER_MODES = ("fixed", "kkt")


@dataclass(frozen=True)
class AoConfig:
    max_outer_iterations: int = 50
    secrecy_tolerance: float = 1e-4
    max_redraws: int = 3
    # "kkt": the phase step ascends the secrecy rate at the optimal power,
    # i.e. the Lagrangian with the power step's KKT multiplier refreshed at
    # every inner iterate; "fixed": it ascends the Lagrangian with
    # manifold.lambda_init (plus any dual updates) at the current power.
    multiplier: str = "kkt"
    manifold: ManifoldOptConfig = field(default_factory=ManifoldOptConfig)

    def __post_init__(self):
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be positive")
        if self.secrecy_tolerance <= 0:
            raise ValueError("secrecy_tolerance must be positive")
        if self.max_redraws < 0:
            raise ValueError("max_redraws must be non-negative")
        if self.multiplier not in MULTIPLIER_MODES:
            raise ValueError(f"multiplier must be one of {MULTIPLIER_MODES}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    secrecy_rate: float
    p_s: float
    interference_slack: float
    inner_iterations: int
    wall_time: float


@dataclass
class ConvergenceTrace:
    records: list[TraceRecord] = field(default_factory=list)
    redraws: int = 0
    status: str = "max_iterations"
    inner_statuses: list[str] = field(default_factory=list)

    @property
    def secrecy(self) -> np.ndarray:
        return np.array([r.secrecy_rate for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "secrecy_rate", "p_s_mw", "interference_slack_mw"])
        for r in self.records:
            writer.writerow([r.iteration, repr(r.secrecy_rate), repr(r.p_s), repr(r.interference_slack)])
        return buf.getvalue()


def haar_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def interference_multiplier(channels: ChannelSet, phi: np.ndarray, decision: PowerDecision,
                            powers: PowerConfig) -> float:
    """KKT multiplier of ``|g phi w|^2 P_s <= I_th`` at the power-step optimum.

    Zero unless the interference limit is what caps the power; then it is
    ``dR/dP_s / |g phi w|^2``, the shadow price that makes the Lagrangian
    gradient equal to the gradient of the power-optimised secrecy rate.
    """
    if decision.branch is Branch.SILENT or decision.p_star >= powers.p_max:
        return 0.0
    g_gain = effective_gain(channels.g, phi)
    if g_gain == 0.0:
        return 0.0
    a_s, a_e, p = decision.normalized_gain_su, decision.normalized_gain_eve, decision.p_star
    d_rate = (a_s / (1.0 + a_s * p) - a_e / (1.0 + a_e * p)) / LN2
    return max(0.0, d_rate / g_gain)


def solve(channels: ChannelSet, powers: PowerConfig, cfg: AoConfig, rng: np.random.Generator,
          phi_init: np.ndarray | None = None, phase_step=optimize_phase, draw_phi=haar_unitary
          ) -> tuple[np.ndarray, PowerDecision, ConvergenceTrace]:
    """Alternate the power switch and the manifold phase step.

    Each outer iteration records the secrecy rate of the new phi at its
    optimal power, which is exactly what the next power step returns.
    ``phase_step`` and ``draw_phi`` let baselines reuse the loop on a
    restricted feasible set.
    """
    m = channels.m
    phi = draw_phi(m, rng) if phi_init is None else phi_init
    trace = ConvergenceTrace()
    decision = optimal_power(channels, phi, powers)
    while decision.branch is Branch.SILENT and trace.redraws < cfg.max_redraws:
        phi = draw_phi(m, rng)
        trace.redraws += 1
        decision = optimal_power(channels, phi, powers)

    lam = cfg.manifold.lambda_init
    start = time.perf_counter()
    for it in range(1, cfg.max_outer_iterations + 1):
        decision = optimal_power(channels, phi, powers)
        if decision.branch is Branch.SILENT:
            _record(trace, it, channels, phi, 0.0, powers, 0, start)
            trace.status = "silent"
            break
        before = link_metrics(channels, phi, decision.p_star, powers).secrecy_rate
        if cfg.multiplier == "kkt":
            phi, inner = phase_step(channels, phi, decision.p_star, powers, cfg.manifold, power_optimal=True)
        else:
            phi, inner = phase_step(channels, phi, decision.p_star, powers, cfg.manifold, lam=lam)
            lam = inner.lam
        trace.inner_statuses.append(inner.status)
        after = optimal_power(channels, phi, powers)
        current = _record(trace, it, channels, phi, after.p_star, powers, inner.accepted, start)
        if abs(current - before) < cfg.secrecy_tolerance:
            trace.status = "converged"
            break

    return phi, optimal_power(channels, phi, powers), trace


def _record(trace: ConvergenceTrace, it: int, channels: ChannelSet, phi: np.ndarray, p_s: float,
            powers: PowerConfig, inner: int, start: float) -> float:
    lm = link_metrics(channels, phi, p_s, powers)
    trace.records.append(TraceRecord(
        iteration=it,
        secrecy_rate=lm.secrecy_rate,
        p_s=p_s,
        interference_slack=powers.i_th - lm.interference_at_pu,
        inner_iterations=inner,
        wall_time=time.perf_counter() - start,
    ))
    return lm.secrecy_rate
