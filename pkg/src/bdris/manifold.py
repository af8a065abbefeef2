"""Riemannian ascent over unitary phase-shift matrices.

Gradients follow the real-gradient convention: for a perturbation ``D`` of
phi the first-order change of the Lagrangian is ``Re tr(G^H D)``.  Every
link gain is ``|h^T phi w|^2`` with the fixed combiner ``w``, so the
Euclidean gradient is the rank-one matrix ``a w^H`` and the skew generator
``phi^H grad`` has rank at most two.  :func:`optimize_phase` exploits that
to exponentiate in a two-dimensional subspace; :func:`retract` is the
general-purpose dense version.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .channel import ChannelSet
from .metrics import (
    PowerConfig,
    check_unitary,
    combining_vector,
    effective_gain,
    link_metrics,
)

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
TANGENT_TOL = 1e-8
DRIFT_TOL = 1e-10
MIN_STEP = 1e-12

PROJECTIONS = ("canonical", "paper-literal")
STEP_SCALINGS = ("normalized", "absolute")
CONSTRAINT_MODES = ("clamp", "projected")
# relative PU load above which the interference limit counts as active
ACTIVE_TOL = 1e-6


@dataclass(frozen=True)
class ManifoldOptConfig:
    initial_step: float = 0.1
    backtrack_factor: float = 0.5
    armijo_coefficient: float = 1e-4
    max_inner_iterations: int = 100
    gradient_tolerance: float = 1e-5
    lambda_init: float = 0.0
    dual_step_rho: float = 0.0
    projection: str = "canonical"
    # "normalized": initial_step is the geodesic length of the first trial
    # step; "absolute": it multiplies the raw Riemannian gradient.
    step_scaling: str = "normalized"
    # "clamp": ascend the fixed-lambda Lagrangian, rejecting infeasible
    # trials; "projected": while the limit is active, also strip the part
    # of the direction that raises the PU load (plus push_margin of it).
    constraint: str = "projected"
    push_margin: float = 0.1

    def __post_init__(self):
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 0 < self.armijo_coefficient < 1:
            raise ValueError("armijo_coefficient must lie in (0, 1)")
        if self.max_inner_iterations < 1:
            raise ValueError("max_inner_iterations must be positive")
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.lambda_init < 0 or self.dual_step_rho < 0:
            raise ValueError("lambda_init and dual_step_rho must be non-negative")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"projection must be one of {PROJECTIONS}")
        if self.step_scaling not in STEP_SCALINGS:
            raise ValueError(f"step_scaling must be one of {STEP_SCALINGS}")
        if self.constraint not in CONSTRAINT_MODES:
            raise ValueError(f"constraint must be one of {CONSTRAINT_MODES}")
        if self.push_margin < 0:
            raise ValueError("push_margin must be non-negative")


@dataclass(frozen=True)
class GradientBundle:
    euclidean: np.ndarray
    riemannian: np.ndarray
    lagrangian_value: float
    secrecy_value: float


@dataclass
class InnerTrace:
    lagrangian: list[float] = field(default_factory=list)  # start value, then one per accepted step
    steps: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    status: str = "max_iterations"
    lam: float = 0.0

    @property
    def accepted(self) -> int:
        return len(self.steps)


class _Objective:
    """Lagrangian as a function of the effective beam ``u = phi w``."""

    enforce_limit = True

    def __init__(self, channels: ChannelSet, p_s: float, powers: PowerConfig, lam: float):
        self.h_s = channels.h_s
        self.h_e = channels.h_e
        self.g = channels.g
        self.p_s = p_s
        self.i_th = powers.i_th
        self.lam = lam
        self.snr_s = p_s / powers.noise_su(channels)
        self.snr_e = p_s / powers.noise_eve(channels)

    def parts(self, u: np.ndarray):
        a_s = self.h_s @ u
        a_e = self.h_e @ u
        a_g = self.g @ u
        gamma_s = abs(a_s) ** 2 * self.snr_s
        gamma_e = abs(a_e) ** 2 * self.snr_e
        interference = abs(a_g) ** 2 * self.p_s
        return a_s, a_e, a_g, gamma_s, gamma_e, interference

    def value(self, u: np.ndarray) -> tuple[float, float]:
        """(Lagrangian, interference at the PU)."""
        _, _, _, gamma_s, gamma_e, interference = self.parts(u)
        diff = (np.log1p(gamma_s) - np.log1p(gamma_e)) / LN2
        return float(diff - self.lam * (interference - self.i_th)), float(interference)

    def interference_vector(self, u: np.ndarray) -> np.ndarray:
        """``a`` for the gradient of the PU load ``p_s |g phi w|^2``."""
        return 2.0 * self.p_s * (self.g @ u) * self.g.conj()

    def active(self, u: np.ndarray) -> bool:
        interference = abs(self.g @ u) ** 2 * self.p_s
        return self.p_s > 0 and interference >= self.i_th * (1.0 - ACTIVE_TOL)

    def grad_vector(self, u: np.ndarray) -> np.ndarray:
        """``a`` such that the Euclidean gradient w.r.t. phi is ``a w^H``."""
        a_s, a_e, a_g, gamma_s, gamma_e, _ = self.parts(u)
        c_s = 2.0 * self.snr_s / (LN2 * (1.0 + gamma_s))
        c_e = 2.0 * self.snr_e / (LN2 * (1.0 + gamma_e))
        a = c_s * a_s * self.h_s.conj() - c_e * a_e * self.h_e.conj()
        if self.lam:
            a = a - 2.0 * self.lam * self.p_s * a_g * self.g.conj()
        return a


class _PowerOptimalObjective:
    """Secrecy rate at the closed-form optimal power, as a function of ``u``.

    Where the interference limit sets the power, ``P* = I_th / |g^T u|^2``
    and the gradient is the Lagrangian gradient with the power step's KKT
    multiplier ``(dR/dP) / |g^T u|^2``; where ``P_max`` binds the
    multiplier is zero.  Every point is feasible by construction.
    """

    enforce_limit = False

    def __init__(self, channels: ChannelSet, powers: PowerConfig):
        self.h_s = channels.h_s
        self.h_e = channels.h_e
        self.g = channels.g
        self.noise_s = powers.noise_su(channels)
        self.noise_e = powers.noise_eve(channels)
        self.p_max = powers.p_max
        self.i_th = powers.i_th
        self.lam = 0.0

    def parts(self, u: np.ndarray):
        a_s, a_e, a_g = self.h_s @ u, self.h_e @ u, self.g @ u
        gain_s = abs(a_s) ** 2 / self.noise_s
        gain_e = abs(a_e) ** 2 / self.noise_e
        g_gain = abs(a_g) ** 2
        if gain_s <= gain_e:
            p = 0.0
        elif g_gain == 0.0:
            p = self.p_max
        else:
            p = min(self.i_th / g_gain, self.p_max)
        return a_s, a_e, a_g, gain_s, gain_e, g_gain, p

    def value(self, u: np.ndarray) -> tuple[float, float]:
        _, _, _, gain_s, gain_e, g_gain, p = self.parts(u)
        rate = (np.log1p(gain_s * p) - np.log1p(gain_e * p)) / LN2
        return float(rate), float(g_gain * p)

    def active(self, u: np.ndarray) -> bool:
        # only the kink where I_th / |g^T u|^2 meets P_max behaves like an
        # active constraint; below it the power follows the limit smoothly
        _, _, _, _, _, g_gain, p = self.parts(u)
        return p == self.p_max and g_gain * p >= self.i_th * (1.0 - ACTIVE_TOL)

    def interference_vector(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * self.p_max * (self.g @ u) * self.g.conj()

    def grad_vector(self, u: np.ndarray) -> np.ndarray:
        a_s, a_e, a_g, gain_s, gain_e, g_gain, p = self.parts(u)
        if p == 0.0:
            return np.zeros_like(u)
        c_s = 2.0 * p / (LN2 * (1.0 + gain_s * p) * self.noise_s)
        c_e = 2.0 * p / (LN2 * (1.0 + gain_e * p) * self.noise_e)
        a = c_s * a_s * self.h_s.conj() - c_e * a_e * self.h_e.conj()
        self.lam = 0.0
        if g_gain > 0.0 and self.i_th / g_gain < self.p_max:
            d_rate = (gain_s / (1.0 + gain_s * p) - gain_e / (1.0 + gain_e * p)) / LN2
            self.lam = d_rate / g_gain
            a = a - 2.0 * self.lam * p * a_g * self.g.conj()
        return a


def power_optimal_secrecy(channels: ChannelSet, phi: np.ndarray, powers: PowerConfig) -> float:
    """Secrecy rate of ``phi`` at its closed-form optimal power."""
    u = phi @ combining_vector(phi.shape[0])
    return _PowerOptimalObjective(channels, powers).value(u)[0]


def power_optimal_gradient(channels: ChannelSet, phi: np.ndarray, powers: PowerConfig) -> np.ndarray:
    """Euclidean gradient of :func:`power_optimal_secrecy` (real-gradient convention)."""
    w = combining_vector(phi.shape[0])
    return np.outer(_PowerOptimalObjective(channels, powers).grad_vector(phi @ w), w.conj())


def phase_objective(channels: ChannelSet, p_s: float, powers: PowerConfig, lam: float,
                    power_optimal: bool):
    if power_optimal:
        return _PowerOptimalObjective(channels, powers)
    return _Objective(channels, p_s, powers, lam)


def lagrangian(channels: ChannelSet, phi: np.ndarray, p_s: float, powers: PowerConfig, lam: float) -> float:
    """Unclamped rate difference minus ``lam * (interference - I_th)``."""
    u = phi @ combining_vector(phi.shape[0])
    return _Objective(channels, p_s, powers, lam).value(u)[0]


def euclidean_gradient(channels: ChannelSet, phi: np.ndarray, p_s: float, powers: PowerConfig,
                       lam: float) -> np.ndarray:
    w = combining_vector(phi.shape[0])
    a = _Objective(channels, p_s, powers, lam).grad_vector(phi @ w)
    return np.outer(a, w.conj())


def project_to_tangent(phi: np.ndarray, euclidean_grad: np.ndarray, projection: str = "canonical") -> np.ndarray:
    """Map an ambient gradient onto the tangent space of the unitary group at phi.

    ``canonical`` is the orthogonal projection ``phi skew(phi^H G)``.
    ``paper-literal`` is ``G - phi G^H phi``, which for square unitary phi
    equals ``2 phi skew(phi^H G)``.
    """
    phi = check_unitary(phi)
    if projection == "canonical":
        x = phi.conj().T @ euclidean_grad
        return phi @ (0.5 * (x - x.conj().T))
    if projection == "paper-literal":
        return euclidean_grad - phi @ euclidean_grad.conj().T @ phi
    raise ValueError(f"unknown projection {projection!r}")


def gradient_bundle(channels: ChannelSet, phi: np.ndarray, p_s: float, powers: PowerConfig, lam: float,
                    projection: str = "canonical") -> GradientBundle:
    egrad = euclidean_gradient(channels, phi, p_s, powers, lam)
    return GradientBundle(
        euclidean=egrad,
        riemannian=project_to_tangent(phi, egrad, projection),
        lagrangian_value=lagrangian(channels, phi, p_s, powers, lam),
        secrecy_value=link_metrics(channels, phi, p_s, powers).secrecy_rate,
    )


def polar(phi: np.ndarray) -> np.ndarray:
    """Nearest unitary matrix in Frobenius norm."""
    u, _, vh = np.linalg.svd(phi)
    return u @ vh


def _reunitarize(phi: np.ndarray) -> np.ndarray:
    if np.linalg.norm(phi @ phi.conj().T - np.eye(phi.shape[0])) > DRIFT_TOL:
        return polar(phi)
    return phi


def retract(phi: np.ndarray, tangent: np.ndarray, eta: float) -> np.ndarray:
    """``phi expm(eta phi^H T)`` via scaling-and-squaring Pade."""
    phi = check_unitary(phi)
    s = phi.conj().T @ tangent
    scale = max(np.linalg.norm(s), 1.0)
    if np.linalg.norm(s + s.conj().T) > TANGENT_TOL * scale:
        raise ValueError("direction is not tangent: phi^H T is not skew-Hermitian")
    if eta == 0:
        return phi.copy()
    return _reunitarize(phi @ scipy.linalg.expm(eta * s))


def clamp_step(eta: float, channels: ChannelSet, phi: np.ndarray, p_s: float, powers: PowerConfig) -> float:
    """``min(eta, I_th / (|g phi|^2 P_s))``; unchanged when nothing is transmitted."""
    if p_s <= 0:
        return eta
    load = effective_gain(channels.g, phi) * p_s
    if load == 0:
        return eta
    return min(eta, powers.i_th / load)


class _RankTwoStep:
    """Exact ``expm(eta S)`` for ``S = c (b w^H - w b^H) / 2``, S of rank <= 2."""

    def __init__(self, phi: np.ndarray, w: np.ndarray, b: np.ndarray, scale: float):
        r = b - w * (w.conj() @ b)
        nr = np.linalg.norm(r)
        if nr > 1e-14 * max(np.linalg.norm(b), 1e-300):
            q = np.column_stack([w, r / nr])
        else:
            q = w[:, None]
        s_full_b = q.conj().T @ b
        s_full_w = q.conj().T @ w
        small = 0.5 * scale * (np.outer(s_full_b, s_full_w.conj()) - np.outer(s_full_w, s_full_b.conj()))
        self.small = 0.5 * (small - small.conj().T)  # exact skew part
        self.q = q
        self.phi_q = phi @ q
        self.norm = float(np.linalg.norm(self.small))

    def exp_small(self, eta: float) -> np.ndarray:
        # eigh of the Hermitian i*S keeps the small exponential exactly unitary
        vals, vecs = np.linalg.eigh(1j * self.small * eta)
        return (vecs * np.exp(-1j * vals)) @ vecs.conj().T - np.eye(self.small.shape[0])

    def beam(self, u: np.ndarray, d: np.ndarray) -> np.ndarray:
        # u_new = phi exp(eta S) w and Q^H w = e_1
        return u + self.phi_q @ d[:, 0]

    def apply(self, phi: np.ndarray, d: np.ndarray) -> np.ndarray:
        return phi + self.phi_q @ d @ self.q.conj().T


def feasible_direction(x_obj, x_load, inner, margin: float):
    """Remove the load-raising part of an ascent direction.

    Returns ``(mu, slope)`` for the direction ``x_obj - mu x_load``: ``mu``
    is ``1 + margin`` times the least-squares multiplier (zero when the
    ascent direction already lowers the load) and ``slope`` is the
    directional derivative of the objective along the new direction.
    """
    ip = inner(x_obj, x_load)
    nn = inner(x_load, x_load)
    if ip <= 0 or nn == 0:
        return 0.0, inner(x_obj, x_obj)
    mu = (1.0 + margin) * ip / nn
    return mu, inner(x_obj, x_obj) - mu * ip


def _ascent(objective: _Objective, state, cfg: ManifoldOptConfig, direction, clamp):
    """Shared Armijo loop over an opaque iterate.

    ``direction(state) -> (u, norm, slope, trial)`` gives the current beam,
    the norm of the search direction, the objective's directional derivative
    along it and ``trial(eta) -> (new_state, new_u)``.
    """
    trace = InnerTrace(lam=objective.lam)
    value = None
    for _ in range(cfg.max_inner_iterations):
        u, norm, slope, trial = direction(state)
        value, interference = objective.value(u)
        if not trace.lagrangian:
            trace.lagrangian.append(value)
        trace.grad_norms.append(norm)
        if norm < cfg.gradient_tolerance or slope <= 0:
            trace.status = "converged"
            break
        first = clamp(cfg.initial_step, interference)
        eta = first / norm if cfg.step_scaling == "normalized" else first
        # no slack: a step that raises the PU load past the limit would force
        # the next power step down and break the monotone outer trace
        limit = max(interference, objective.i_th) if objective.enforce_limit else np.inf
        while eta * norm >= MIN_STEP:
            new_state, new_u = trial(eta)
            new_value, new_interference = objective.value(new_u)
            if (new_interference <= limit
                    and new_value >= value + cfg.armijo_coefficient * eta * slope):
                break
            eta *= cfg.backtrack_factor
        else:
            trace.status = "line_search_failed"
            break
        state = new_state
        trace.lagrangian.append(new_value)
        trace.steps.append(eta)
    return state, trace


def _interference_clamp(p_s: float, i_th: float, enabled: bool = True):
    # clamp_step with the PU load already known
    def clamp(eta: float, interference: float) -> float:
        if not enabled or p_s <= 0 or interference <= 0:
            return eta
        return min(eta, i_th / interference)
    return clamp


def optimize_phase(channels: ChannelSet, phi_init: np.ndarray, p_s: float, powers: PowerConfig,
                   cfg: ManifoldOptConfig | None = None, lam: float | None = None,
                   power_optimal: bool = False) -> tuple[np.ndarray, InnerTrace]:
    """Projected-gradient ascent of the Lagrangian on the unitary group.

    ``lam`` overrides ``cfg.lambda_init``.  With ``dual_step_rho > 0`` the
    multiplier takes one projected dual step after the pass; the updated
    value is reported in ``trace.lam``.

    With ``power_optimal`` the ascent targets the secrecy rate at the
    closed-form optimal power instead (``p_s`` and ``lam`` are unused), so
    the objective already accounts for the interference limit and no clamp
    or feasibility check is needed.
    """
    cfg = cfg or ManifoldOptConfig()
    phi = check_unitary(phi_init)
    lam = cfg.lambda_init if lam is None else lam
    w = combining_vector(phi.shape[0])
    objective = phase_objective(channels, p_s, powers, lam, power_optimal)
    scale = 2.0 if cfg.projection == "paper-literal" else 1.0

    def direction(state):
        phi_now = _materialize(state)
        u = phi_now @ w
        b = phi_now.conj().T @ objective.grad_vector(u)
        slope = None
        if cfg.constraint == "projected" and objective.active(u):
            b_load = phi_now.conj().T @ objective.interference_vector(u)
            mu, slope = feasible_direction(b, b_load, lambda x, y: scale**2 * skew_inner(x, y, w),
                                           cfg.push_margin)
            b = b - mu * b_load
        step = _RankTwoStep(phi_now, w, b, scale)
        if slope is None:
            slope = step.norm**2

        def trial(eta):
            d = step.exp_small(eta)
            return (phi_now, d, step), step.beam(u, d)

        return u, step.norm, slope, trial

    clamp = _interference_clamp(p_s, powers.i_th, enabled=not power_optimal)
    state, trace = _ascent(objective, phi, cfg, direction, clamp)
    phi = _materialize(state)
    if cfg.dual_step_rho > 0 and not power_optimal:
        interference = effective_gain(channels.g, phi) * p_s
        trace.lam = max(0.0, lam + cfg.dual_step_rho * (interference - powers.i_th))
    if trace.status == "line_search_failed":
        log.debug("phase line search stalled after %d accepted steps", trace.accepted)
    return phi, trace


def skew_inner(b1: np.ndarray, b2: np.ndarray, w: np.ndarray) -> float:
    """``Re tr(K1^H K2)`` for ``K = (b w^H - w b^H) / 2`` and unit ``w``."""
    return 0.5 * float(np.real(np.vdot(b1, b2)) - np.real(np.vdot(w, b1) * np.vdot(w, b2)))


def _materialize(state) -> np.ndarray:
    if isinstance(state, np.ndarray):
        return state
    phi, d, step = state
    return _reunitarize(step.apply(phi, d))
