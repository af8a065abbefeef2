"""Secrecy-rate maximisation for a BD-RIS equipped UAV in a cognitive-radio NTN.

Alternates a closed-form power switch with Riemannian ascent of the
phase-shift matrix over the unitary group, plus a seeded Monte Carlo harness.
"""

from .alternating import AoConfig, ConvergenceTrace, haar_unitary, solve
from .channel import ArrayGeometry, ChannelSet, LinkGeometry, draw_channel_set, steering_vector
from .config import Method, ScenarioConfig, default_config, parse_config
from .manifold import ManifoldOptConfig, optimize_phase
from .metrics import LinkMetrics, PowerConfig, effective_gain, link_metrics
from .montecarlo import Axis, SweepResult, run_sweep, run_trial
from .power import Branch, PowerDecision, optimal_power

__version__ = "0.1.0"
