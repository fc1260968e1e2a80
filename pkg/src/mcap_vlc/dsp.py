"""Signal primitives: SRRC prototype, FIR filtering, Welch PSD, waveform files."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sps_signal

from .errors import ParameterError

# above this many multiply-adds fir_filter switches to overlap-add FFT convolution
_DIRECT_CONV_LIMIT = 4_000_000


@dataclass(frozen=True, eq=False)
class Taps:
    """Real FIR coefficients with an odd, linear-phase length."""

    coefficients: np.ndarray
    sample_rate: float

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.float64)
        if c.ndim != 1 or len(c) % 2 == 0:
            raise ParameterError(f"tap count must be odd, got {len(c)}")
        if not np.all(np.isfinite(c)):
            raise ParameterError("taps must be finite")
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be positive")
        object.__setattr__(self, "coefficients", c)

    def __len__(self):
        return len(self.coefficients)


@dataclass(frozen=True, eq=False)
class Waveform:
    """Real-valued samples at a fixed sample rate (Hz)."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1:
            raise ParameterError("waveform samples must be one-dimensional")
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(s)):
            raise ParameterError("waveform samples must be finite")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def rms(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))


@dataclass(frozen=True, eq=False)
class Psd:
    """One-sided power spectral density, in dB relative to the peak bin."""

    frequencies: np.ndarray
    power_db: np.ndarray
    resolution_bw: float

    def band_power(self, f_lo: float, f_hi: float) -> float:
        """Linear power (relative to peak bin) summed over ``[f_lo, f_hi]``."""
        sel = (self.frequencies >= f_lo) & (self.frequencies <= f_hi)
        return float(np.sum(10.0 ** (self.power_db[sel] / 10.0)))

    def peak_db(self, f_lo: float, f_hi: float) -> float:
        sel = (self.frequencies >= f_lo) & (self.frequencies <= f_hi)
        if not np.any(sel):
            return -np.inf
        return float(np.max(self.power_db[sel]))


def srrc_value(t: np.ndarray, beta: float) -> np.ndarray:
    """Un-normalized SRRC impulse response at ``t`` measured in symbol periods."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    at_zero = np.isclose(t, 0.0, atol=1e-12)
    if beta > 0:
        at_edge = np.isclose(np.abs(t), 1.0 / (4.0 * beta), atol=1e-12)
    else:
        at_edge = np.zeros_like(at_zero)
    reg = ~(at_zero | at_edge)

    tr = t[reg]
    num = np.sin(np.pi * tr * (1 - beta)) + 4 * beta * tr * np.cos(np.pi * tr * (1 + beta))
    den = np.pi * tr * (1 - (4 * beta * tr) ** 2)
    out[reg] = num / den
    out[at_zero] = 1 - beta + 4 * beta / np.pi
    if beta > 0:
        q = np.pi / (4 * beta)
        out[at_edge] = (beta / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(q) + (1 - 2 / np.pi) * np.cos(q)
        )
    return out


def design_srrc(beta: float, span: int, sps: int, sample_rate: float | None = None) -> Taps:
    """Square-root raised cosine prototype with ``span * sps + 1`` taps.

    The response is sampled symmetrically about the centre tap and scaled to
    unit energy. ``sample_rate`` defaults to ``sps`` (unit symbol rate).
    """
    if not (0.0 <= beta <= 1.0):
        raise ParameterError(f"roll-off must lie in [0, 1], got {beta}")
    if int(span) != span or span < 1:
        raise ParameterError(f"span must be a positive integer, got {span}")
    if int(sps) != sps or sps < 1:
        raise ParameterError(f"sps must be a positive integer, got {sps}")
    span, sps = int(span), int(sps)
    n = span * sps + 1
    t = (np.arange(n) - (n - 1) / 2) / sps
    h = srrc_value(t, beta)
    h /= np.sqrt(np.sum(h**2))
    return Taps(h, float(sample_rate) if sample_rate is not None else float(sps))


def fir_filter(x: Waveform, h: Taps) -> Waveform:
    """Full linear convolution of ``x`` with ``h`` (length ``len(x) + len(h) - 1``)."""
    if not math.isclose(x.sample_rate, h.sample_rate, rel_tol=1e-12):
        raise ParameterError(
            f"sample rate mismatch: waveform {x.sample_rate} Hz, taps {h.sample_rate} Hz"
        )
    if len(x) == 0:
        return Waveform(np.zeros(0), x.sample_rate)
    if len(x) * len(h) <= _DIRECT_CONV_LIMIT:
        y = np.convolve(x.samples, h.coefficients)
    else:
        y = sps_signal.oaconvolve(x.samples, h.coefficients)
    return Waveform(y, x.sample_rate)


def welch_psd(x: Waveform, segment_len: int = 1024, overlap: float = 0.5) -> Psd:
    """Averaged Hann-windowed periodogram, normalized so the peak bin is 0 dB."""
    segment_len = int(segment_len)
    if segment_len < 2:
        raise ParameterError("segment_len must be at least 2")
    if len(x) < segment_len:
        raise ParameterError(f"signal of {len(x)} samples is shorter than one segment ({segment_len})")
    if not (0.0 <= overlap < 1.0):
        raise ParameterError(f"overlap must lie in [0, 1), got {overlap}")
    f, p = sps_signal.welch(
        x.samples,
        fs=x.sample_rate,
        window="hann",
        nperseg=segment_len,
        noverlap=int(round(overlap * segment_len)),
        detrend=False,
        return_onesided=True,
        scaling="density",
    )
    peak = np.max(p)
    if peak <= 0:
        db = np.full_like(p, -np.inf)
    else:
        db = 10.0 * np.log10(np.maximum(p, peak * 1e-30) / peak)
    return Psd(f, db, x.sample_rate / segment_len)


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_waveform(path: str | Path, wave: Waveform, description: str = "") -> Path:
    """Write raw little-endian float32 samples plus a JSON sidecar.

    Returns the sidecar path.
    """
    path = Path(path)
    path.write_bytes(wave.samples.astype("<f4").tobytes())
    meta = {
        "sample_rate_hz": float(wave.sample_rate),
        "description": description,
        "format": "float32le",
        "channels": 1,
        "num_samples": len(wave),
    }
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return side


def read_waveform(path: str | Path) -> Waveform:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    samples = np.frombuffer(path.read_bytes(), dtype="<f4").astype(np.float64)
    return Waveform(samples, float(meta["sample_rate_hz"]))
