"""
Power-limited uplink channel: CNR budget, AWGN, flat Rician block fading.

The fading gain is constant within a slot. Across slots the line-of-sight
phase performs a random walk and the scattered part is a unit-power AR(1)
process whose one-slot correlation is J0(2*pi*fd*T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import j0

from .errors import ParameterError

SPEED_OF_LIGHT = 299_792_458.0
SUBCARRIERS_PER_PRB = 12
SYMBOLS_PER_SLOT = 14


def doppler_hz(speed_kmh: float, carrier_hz: float = 2e9) -> float:
    return speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT


@dataclass(frozen=True)
class LinkBudget:
    cnr_db: float = -2.15
    n_prb: int = 1

    def __post_init__(self):
        if self.n_prb < 1:
            raise ParameterError("n_prb must be >= 1")


def snr_from_budget(b: LinkBudget) -> float:
    """Per-RE SNR when a fixed transmit power is spread over ``n_prb`` PRBs."""
    return b.cnr_db - 10.0 * math.log10(b.n_prb)


@dataclass(frozen=True)
class FadingProcess:
    k_factor_db: float = 10.0
    doppler_hz: float = doppler_hz(3.0)
    slot_duration_s: float = 1e-3

    @property
    def los_power(self) -> float:
        if math.isinf(self.k_factor_db):
            return 1.0 if self.k_factor_db > 0 else 0.0
        K = 10 ** (self.k_factor_db / 10)
        return K / (K + 1)

    @property
    def slot_correlation(self) -> float:
        return float(j0(2 * math.pi * self.doppler_hz * self.slot_duration_s))

    @property
    def phase_step_std(self) -> float:
        return 2 * math.pi * self.doppler_hz * self.slot_duration_s


class FadingStream:
    """Slot-by-slot generator for a :class:`FadingProcess`."""

    def __init__(self, fp: FadingProcess, seed):
        self.fp = fp
        self.rng = np.random.default_rng(seed)
        self.phase = self.rng.uniform(0, 2 * np.pi)
        self.g = self._cn(1)[0]

    def _cn(self, n):
        return (self.rng.standard_normal(n) + 1j * self.rng.standard_normal(n)) / math.sqrt(2)

    def take(self, n: int) -> np.ndarray:
        """Gains for the next ``n`` slots (the current state first)."""
        fp = self.fp
        rho = fp.slot_correlation
        steps = self.rng.standard_normal(n) * fp.phase_step_std
        w = self._cn(n)
        phase = self.phase + np.concatenate(([0.0], np.cumsum(steps[:-1])))
        # x[t] is the scattered state after t + 1 AR(1) updates
        x = lfilter([math.sqrt(max(0.0, 1 - rho * rho))], [1.0, -rho], w, zi=[rho * self.g])[0]
        g = np.concatenate(([self.g], x[:-1]))
        self.phase = float(phase[-1] + steps[-1])
        self.g = complex(x[-1])
        return math.sqrt(fp.los_power) * np.exp(1j * phase) + math.sqrt(1 - fp.los_power) * g


def sample_fading(fp: FadingProcess, n_slots: int, seed) -> np.ndarray:
    if n_slots < 1:
        raise ParameterError("n_slots must be >= 1")
    return FadingStream(fp, seed).take(n_slots)


def noise_variance(snr_db: float) -> float:
    return 0.0 if snr_db == math.inf else 10 ** (-snr_db / 10)


def transmit(symbols, h, snr_db: float, seed) -> np.ndarray:
    """``y = h * c + n`` with n ~ CN(0, 10^(-snr/10)); ``seed`` may be a Generator."""
    c = np.asarray(symbols, dtype=complex)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sigma2 = noise_variance(snr_db)
    n = (rng.standard_normal(c.shape) + 1j * rng.standard_normal(c.shape)) * math.sqrt(sigma2 / 2)
    return h * c + n
