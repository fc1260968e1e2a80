"""Intensity-modulated LED link model.

Pipeline: bias + modulation index, clipping at zero and twice the bias, a
single-pole LED low-pass (bilinear transform, pre-warped so the -3 dB point
is exact), lumped path gain, an optional fluorescent-lamp harmonic comb kept
below 500 kHz, white Gaussian noise, and finally removal of the DC level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .dsp import Waveform
from .errors import ParameterError

FLICKER_CAP = 5.0e5


@dataclass(frozen=True)
class ChannelConfig:
    """Link parameters in normalized units.

    ``led_f3db=None`` bypasses the LED low-pass and ``snr_db=math.inf``
    disables noise. ``noise_var``, when set, fixes the noise variance
    directly and ``snr_db`` is ignored.
    """

    led_f3db: Optional[float] = 4.5e6
    snr_db: float = math.inf
    mod_index: float = 0.3
    bias: float = 1.0
    path_gain: float = 1.0
    flicker: bool = False
    flicker_fund: float = 5.0e4
    flicker_max: float = FLICKER_CAP
    flicker_rel_db: float = -10.0
    seed: int = 0
    noise_var: Optional[float] = None

    def __post_init__(self):
        if self.led_f3db is not None and not (self.led_f3db > 0 and math.isfinite(self.led_f3db)):
            raise ParameterError(f"led_f3db must be positive, got {self.led_f3db!r}", field="led_f3db")
        if math.isnan(self.snr_db):
            raise ParameterError("snr_db must be a number or inf", field="snr_db")
        if not (0.0 < self.mod_index <= 1.0):
            raise ParameterError(f"mod_index must lie in (0, 1], got {self.mod_index!r}", field="mod_index")
        if not self.bias > 0:
            raise ParameterError(f"bias must be positive, got {self.bias!r}", field="bias")
        if not (self.path_gain > 0 and math.isfinite(self.path_gain)):
            raise ParameterError(f"path_gain must be positive, got {self.path_gain!r}", field="path_gain")
        if not self.flicker_fund > 0:
            raise ParameterError("flicker_fund must be positive", field="flicker_fund")
        if not (0 < self.flicker_max <= FLICKER_CAP):
            raise ParameterError(f"flicker_max must lie in (0, {FLICKER_CAP:g}]", field="flicker_max")
        if self.noise_var is not None and not self.noise_var >= 0:
            raise ParameterError("noise_var must be non-negative", field="noise_var")

    def with_seed(self, seed: int) -> "ChannelConfig":
        return replace(self, seed=int(seed))

    def harmonics(self) -> np.ndarray:
        """Harmonic numbers of the flicker comb (all at or below ``flicker_max``)."""
        kmax = int(math.floor(self.flicker_max / self.flicker_fund * (1 + 1e-12)))
        return np.arange(1, kmax + 1)


@dataclass(frozen=True, eq=False)
class ChannelParts:
    """Separate contributions before the final DC removal."""

    signal: np.ndarray
    flicker: np.ndarray
    noise: np.ndarray
    clipped_fraction: float
    noise_var: float

    @property
    def signal_ac_power(self) -> float:
        return float(np.var(self.signal))


def led_lowpass_coefficients(f3db: float, sample_rate: float) -> tuple[float, float, float]:
    """``(b0, b1, a1)`` of the bilinear single-pole low-pass with -3 dB at ``f3db``."""
    if not f3db < sample_rate / 2:
        raise ParameterError(
            f"led_f3db {f3db:g} Hz must be below Nyquist {sample_rate / 2:g} Hz", field="led_f3db"
        )
    k = math.tan(math.pi * f3db / sample_rate)
    b = k / (1 + k)
    return b, b, (k - 1) / (k + 1)


def led_response(f, f3db: float, sample_rate: float) -> np.ndarray:
    """Complex frequency response of the discretized LED model at ``f`` (Hz)."""
    b0, b1, a1 = led_lowpass_coefficients(f3db, sample_rate)
    z1 = np.exp(-2j * np.pi * np.asarray(f, dtype=float) / sample_rate)
    return (b0 + b1 * z1) / (1 + a1 * z1)


def flicker_comb(n: int, sample_rate: float, ch: ChannelConfig, rms: float, rng) -> np.ndarray:
    """Decaying harmonic comb ``sum_k (A/k) sin(2 pi k f0 t + phi_k)`` with total RMS ``rms``."""
    k = ch.harmonics()
    phases = rng.uniform(0.0, 2 * np.pi, size=len(k))
    amp = rms / math.sqrt(np.sum(0.5 / k.astype(float) ** 2))
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    for kk, ph in zip(k, phases):
        out += (amp / kk) * np.sin(2 * np.pi * kk * ch.flicker_fund * t + ph)
    return out


def simulate_channel(wave: Waveform, ch: ChannelConfig) -> ChannelParts:
    flick_ss, noise_ss = np.random.SeedSequence(ch.seed).spawn(2)
    x = ch.bias + ch.mod_index * wave.samples
    hi = 2.0 * ch.bias
    clipped = float(np.mean((x < 0.0) | (x > hi))) if len(x) else 0.0
    x = np.clip(x, 0.0, hi)

    if ch.led_f3db is not None and len(x):
        b0, b1, a1 = led_lowpass_coefficients(ch.led_f3db, wave.sample_rate)
        # start from the steady state of the first sample, no switch-on transient
        y = kernels.one_pole(x, b0, b1, a1, x[0], x[0])
    else:
        y = x.copy()
    y *= ch.path_gain

    p_sig = float(np.var(y)) if len(y) else 0.0
    if ch.flicker and len(y):
        rms = math.sqrt(p_sig) * 10.0 ** (ch.flicker_rel_db / 20.0)
        flick = flicker_comb(len(y), wave.sample_rate, ch, rms, np.random.default_rng(flick_ss))
    else:
        flick = np.zeros_like(y)

    if ch.noise_var is not None:
        nv = float(ch.noise_var)
    elif math.isinf(ch.snr_db) and ch.snr_db > 0:
        nv = 0.0
    else:
        nv = p_sig / 10.0 ** (ch.snr_db / 10.0)
    if nv > 0:
        noise = math.sqrt(nv) * np.random.default_rng(noise_ss).standard_normal(len(y))
    else:
        noise = np.zeros_like(y)
    return ChannelParts(y, flick, noise, clipped, nv)


def apply_channel(wave: Waveform, ch: ChannelConfig) -> Waveform:
    """Pass a unit-RMS modem waveform through the link; output is AC-coupled."""
    parts = simulate_channel(wave, ch)
    out = parts.signal + parts.flicker + parts.noise
    if len(out):
        out = out - np.mean(out)
    return Waveform(out, wave.sample_rate)
