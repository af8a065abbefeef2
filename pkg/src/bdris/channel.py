"""Rician channel synthesis for the UAV/HAPS links.

Vector links (ST->SU, ST->Eve, ST->PU) carry a Kronecker-structured planar
array LoS response; the PT->SU and PT->Eve interference links are scalars.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .config import ScenarioConfig

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class ArrayGeometry:
    m_x: int
    m_y: int
    carrier_frequency: float = 2e9
    element_spacing: float | None = None  # None -> half wavelength

    def __post_init__(self):
        if int(self.m_x) != self.m_x or int(self.m_y) != self.m_y:
            raise ValueError("m_x and m_y must be integers")
        if self.m_x < 1 or self.m_y < 1:
            raise ValueError(f"array needs at least one element per axis, got {self.m_x}x{self.m_y}")
        if self.carrier_frequency <= 0:
            raise ValueError("carrier_frequency must be positive")
        if self.element_spacing is not None and self.element_spacing <= 0:
            raise ValueError("element_spacing must be positive")

    @property
    def m(self) -> int:
        return self.m_x * self.m_y

    @property
    def spacing(self) -> float:
        if self.element_spacing is None:
            return SPEED_OF_LIGHT / (2.0 * self.carrier_frequency)
        return self.element_spacing

    @property
    def delta(self) -> float:
        """Phase increment 2*pi*f_c*q/c between adjacent elements."""
        return 2.0 * np.pi * self.carrier_frequency * self.spacing / SPEED_OF_LIGHT

    @classmethod
    def for_elements(cls, m: int, **kwargs) -> "ArrayGeometry":
        """Most square m_x x m_y factorisation of ``m`` (m_x <= m_y)."""
        if m < 1:
            raise ValueError("element count must be positive")
        m_x = max(d for d in range(1, int(np.sqrt(m)) + 1) if m % d == 0)
        return cls(m_x=m_x, m_y=m // m_x, **kwargs)


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    rician_k: float
    power_gain: float = 1.0
    elevation: float | None = None  # None -> drawn per trial
    azimuth: float | None = None

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError("distance must be positive")
        if self.power_gain <= 0:
            raise ValueError("power_gain must be positive")
        if self.rician_k < 0:
            raise ValueError("rician_k must be non-negative")
        if self.elevation is not None and not 0.0 <= self.elevation <= np.pi / 2:
            raise ValueError("elevation must lie in [0, pi/2]")
        if self.azimuth is not None and not 0.0 <= self.azimuth < 2 * np.pi:
            raise ValueError("azimuth must lie in [0, 2*pi)")

    @property
    def mean_path_gain(self) -> float:
        return self.power_gain / self.distance**2


@dataclass(frozen=True)
class ChannelSet:
    h_s: np.ndarray  # ST -> SU
    h_e: np.ndarray  # ST -> Eve
    g: np.ndarray  # ST -> PU
    f_s: complex  # PT -> SU
    f_e: complex  # PT -> Eve

    def __post_init__(self):
        m = self.h_s.shape
        if len(m) != 1 or self.h_e.shape != m or self.g.shape != m:
            raise ValueError("h_s, h_e and g must be vectors of equal length")
        values = np.concatenate([self.h_s, self.h_e, self.g, [self.f_s, self.f_e]])
        if not np.all(np.isfinite(values)):
            raise ValueError("channel entries must be finite")

    @property
    def m(self) -> int:
        return self.h_s.shape[0]


def steering_vector(geom: ArrayGeometry, elevation: float, azimuth: float) -> np.ndarray:
    """LoS response of the planar array.

    Kronecker product of the column factor (increments ``delta*sin(el)*cos(az)``)
    and the row factor (increments ``delta*sin(el)*sin(az)``), so entry
    ``i*m_y + j`` is ``x[i] * y[j]``.
    """
    s = geom.delta * np.sin(elevation)
    x = np.exp(-1j * s * np.cos(azimuth) * np.arange(geom.m_x))
    y = np.exp(-1j * s * np.sin(azimuth) * np.arange(geom.m_y))
    return np.kron(x, y)


def _cn(rng: np.random.Generator, size=None):
    # unit-variance circularly-symmetric complex Gaussian
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) / np.sqrt(2.0)


def _mix(k: float) -> tuple[float, float]:
    if np.isinf(k):
        return 1.0, 0.0
    return np.sqrt(k / (k + 1.0)), np.sqrt(1.0 / (k + 1.0))


def _angles(link: LinkGeometry, rng: np.random.Generator) -> tuple[float, float]:
    # draws are consumed even when pinned so pinning one link leaves the
    # others' random streams untouched
    el = rng.uniform(0.0, np.pi / 2)
    az = rng.uniform(0.0, 2 * np.pi)
    if link.elevation is not None:
        el = link.elevation
    if link.azimuth is not None:
        az = link.azimuth
    return el, az


def draw_rician_vector(link: LinkGeometry, geom: ArrayGeometry, rng: np.random.Generator,
                       elevation: float | None = None, azimuth: float | None = None) -> np.ndarray:
    """One Rician vector realisation.

    Angles default to the link's pinned values; when a link leaves them
    unset they are drawn uniformly from ``rng`` first.
    """
    if elevation is None or azimuth is None:
        el, az = _angles(link, rng)
        elevation = el if elevation is None else elevation
        azimuth = az if azimuth is None else azimuth
    los_w, nlos_w = _mix(link.rician_k)
    h = los_w * steering_vector(geom, elevation, azimuth)
    nlos = _cn(rng, geom.m)
    if nlos_w:
        h = h + nlos_w * nlos
    return np.sqrt(link.mean_path_gain) * h


def draw_rician_scalar(link: LinkGeometry, rng: np.random.Generator) -> complex:
    los_w, nlos_w = _mix(link.rician_k)
    n = _cn(rng)
    return complex(np.sqrt(link.mean_path_gain) * (los_w + nlos_w * n))


def draw_channel_set(config: "ScenarioConfig", rng: np.random.Generator) -> ChannelSet:
    """Draw all five links for one trial, in a fixed order."""
    links = config.links
    geom = config.array
    el, az = _angles(links.st_su, rng)
    h_s = draw_rician_vector(links.st_su, geom, rng, el, az)
    if links.share_su_eve_angles:
        _angles(links.st_eve, rng)
        h_e = draw_rician_vector(links.st_eve, geom, rng, el, az)
    else:
        h_e = draw_rician_vector(links.st_eve, geom, rng)
    g = draw_rician_vector(links.st_pu, geom, rng)
    f_s = draw_rician_scalar(links.pt_su, rng)
    f_e = draw_rician_scalar(links.pt_eve, rng)
    return ChannelSet(h_s=h_s, h_e=h_e, g=g, f_s=f_s, f_e=f_e)


def trial_rng(base_seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for trial ``t``: seed ``base_seed + t`` mod 2**64."""
    return np.random.default_rng((int(base_seed) + int(trial_index)) % 2**64)
