"""Closed-form transmit power for a fixed phase-shift matrix.

With phi fixed the secrecy rate is increasing in P_s exactly when the SU's
normalised gain beats Eve's, so the optimum is either the largest feasible
power or silence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .metrics import PowerConfig, effective_gain


class Branch(str, enum.Enum):
    TRANSMIT = "transmit"
    SILENT = "silent"


@dataclass(frozen=True)
class PowerDecision:
    p_star: float
    branch: Branch
    normalized_gain_su: float
    normalized_gain_eve: float


def max_feasible_power(channels: ChannelSet, phi: np.ndarray, powers: PowerConfig) -> float:
    """Largest P_s meeting both the interference limit and P_max."""
    g_gain = effective_gain(channels.g, phi)
    if g_gain == 0.0:
        return powers.p_max
    return min(powers.i_th / g_gain, powers.p_max)


def optimal_power(channels: ChannelSet, phi: np.ndarray, powers: PowerConfig) -> PowerDecision:
    gain_su = effective_gain(channels.h_s, phi) / powers.noise_su(channels)
    gain_eve = effective_gain(channels.h_e, phi) / powers.noise_eve(channels)
    # ties go silent: the secrecy rate is zero either way
    if gain_su > gain_eve:
        return PowerDecision(max_feasible_power(channels, phi, powers), Branch.TRANSMIT, gain_su, gain_eve)
    return PowerDecision(0.0, Branch.SILENT, gain_su, gain_eve)
