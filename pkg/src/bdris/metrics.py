"""SINR, rate and interference evaluation for a fixed (phi, P_s)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet

UNITARY_TOL = 1e-8


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * np.log10(mw)


@dataclass(frozen=True)
class PowerConfig:
    """Power budget and noise levels, all in linear mW."""

    p_max: float = 100.0
    q_p: float = 1e4
    sigma_s_sq: float = 1e-4
    sigma_e_sq: float = 1e-4
    i_th: float = 1e-5

    def __post_init__(self):
        for name in ("p_max", "q_p", "sigma_s_sq", "sigma_e_sq", "i_th"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be a positive finite value, got {v!r}")

    def noise_su(self, channels: ChannelSet) -> float:
        """Interference-plus-noise power at the SU."""
        return self.sigma_s_sq + abs(channels.f_s) ** 2 * self.q_p

    def noise_eve(self, channels: ChannelSet) -> float:
        return self.sigma_e_sq + abs(channels.f_e) ** 2 * self.q_p


@dataclass(frozen=True)
class LinkMetrics:
    gamma_s: float
    gamma_e: float
    rate_s: float
    rate_e: float
    secrecy_rate: float
    interference_at_pu: float


def combining_vector(m: int) -> np.ndarray:
    """Receiver reference direction: the normalised all-ones vector."""
    return np.full(m, 1.0 / np.sqrt(m), dtype=complex)


def is_unitary(phi: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    phi = np.asarray(phi)
    if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
        return False
    return np.linalg.norm(phi @ phi.conj().T - np.eye(phi.shape[0])) <= tol


def check_unitary(phi: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    """Return ``phi`` as a complex array, raising if it is not unitary."""
    phi = np.asarray(phi, dtype=complex)
    if not is_unitary(phi, tol):
        raise ValueError("phase-shift matrix is not unitary")
    return phi


def effective_channel(h: np.ndarray, phi: np.ndarray, w: np.ndarray | None = None) -> complex:
    """Scalar ``h^T phi w`` seen by a single-antenna receiver."""
    h = np.asarray(h)
    phi = np.asarray(phi)
    if phi.shape != (h.shape[0], h.shape[0]):
        raise ValueError(f"dimension mismatch: h has {h.shape[0]} entries, phi is {phi.shape}")
    if w is None:
        w = combining_vector(h.shape[0])
    return complex(h @ (phi @ w))


def effective_gain(h: np.ndarray, phi: np.ndarray, w: np.ndarray | None = None) -> float:
    """``|h^T phi w|^2``, the power gain of a link through the surface."""
    return abs(effective_channel(h, phi, w)) ** 2


def row_norm_gain(h: np.ndarray, phi: np.ndarray) -> float:
    """``||h^T phi||^2``; unitarily invariant, so independent of phi.

    Kept to document why the inner-product gain above is used instead.
    """
    h = np.asarray(h)
    if np.asarray(phi).shape != (h.shape[0], h.shape[0]):
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(h @ phi) ** 2)


def sinr_pair(channels: ChannelSet, phi: np.ndarray, p_s: float, powers: PowerConfig) -> tuple[float, float]:
    gamma_s = effective_gain(channels.h_s, phi) * p_s / powers.noise_su(channels)
    gamma_e = effective_gain(channels.h_e, phi) * p_s / powers.noise_eve(channels)
    return gamma_s, gamma_e


def secrecy_from_sinr(gamma_s: float, gamma_e: float) -> float:
    return max(0.0, float(np.log2(1.0 + gamma_s) - np.log2(1.0 + gamma_e)))


def link_metrics(channels: ChannelSet, phi: np.ndarray, p_s: float, powers: PowerConfig) -> LinkMetrics:
    gamma_s, gamma_e = sinr_pair(channels, phi, p_s, powers)
    rate_s = float(np.log2(1.0 + gamma_s))
    rate_e = float(np.log2(1.0 + gamma_e))
    return LinkMetrics(
        gamma_s=gamma_s,
        gamma_e=gamma_e,
        rate_s=rate_s,
        rate_e=rate_e,
        secrecy_rate=max(0.0, rate_s - rate_e),
        interference_at_pu=effective_gain(channels.g, phi) * p_s,
    )
