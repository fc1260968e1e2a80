"""Frame timing: Schmidl-Cox coarse search plus cross-correlation refinement.

The CAP signal is real, so the self-correlation uses plain products of real
samples instead of complex conjugates. The preamble is two identical halves,
each a cyclically shaped m-CAP block, which keeps the repetition exact at the
seam while staying inside the payload band.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dsp import Waveform
from .errors import ParameterError
from .mcap import FilterBank, McapConfig, build_filter_bank

DEFAULT_THRESHOLD = 0.6
MIN_HALF_SYMBOLS = 16
# coarse error is set by the signal bandwidth, not sps: up to ~35 samples seen
FINE_MIN_RADIUS = 48


@dataclass(frozen=True, eq=False)
class SyncPreamble:
    waveform: Waveform
    half_len: int
    sps: int


@dataclass(frozen=True)
class SyncResult:
    coarse_index: int
    fine_index: int
    peak_metric: float
    detected: bool


def make_preamble(
    cfg: McapConfig,
    half_len_symbols: int = 64,
    seed: int = 1,
    bank: FilterBank | None = None,
) -> SyncPreamble:
    """Seeded two-half preamble with ``half_len_symbols`` symbols per subband per half."""
    if half_len_symbols < MIN_HALF_SYMBOLS:
        raise ParameterError(
            f"half_len_symbols must be >= {MIN_HALF_SYMBOLS}, got {half_len_symbols}",
            field="half_len_symbols",
        )
    bank = bank if bank is not None else build_filter_bank(cfg)
    H = half_len_symbols * cfg.sps
    rng = np.random.default_rng([0x5C, seed])
    pts = cfg.constellation.points()
    syms = pts[rng.integers(0, len(pts), size=(cfg.m, half_len_symbols))]

    up = np.zeros((cfg.m, H), dtype=np.complex128)
    up[:, ::cfg.sps] = syms
    # wrap each filter around a length-H circle with the centre tap at index 0
    T = cfg.num_taps
    idx = (np.arange(T) - (T - 1) // 2) % H
    wrapped = np.zeros((cfg.m, H), dtype=np.complex128)
    for k in range(cfg.m):
        np.add.at(wrapped[k], idx, bank.tx[k])
    block = np.fft.ifft(np.fft.fft(up, axis=1) * np.fft.fft(wrapped, axis=1), axis=1)
    half = np.sum(block.real, axis=0) * bank.tx_gain
    return SyncPreamble(Waveform(np.tile(half, 2), cfg.sample_rate), H, cfg.sps)


def schmidl_cox_metric(wave: Waveform | np.ndarray, half_len: int) -> np.ndarray:
    """``M(d) = P(d)^2 / R(d)^2`` for every start ``d`` with a full ``2H`` window.

    ``P(d) = sum_k r[d+k] r[d+k+H]`` and ``R(d) = sum_k r[d+k+H]^2``. Windows
    with (numerically) zero energy get ``M = 0``.
    """
    x = wave.samples if isinstance(wave, Waveform) else np.asarray(wave, dtype=np.float64)
    if half_len < 1:
        raise ParameterError("half_len must be positive")
    if len(x) < 2 * half_len:
        raise ParameterError(f"need at least {2 * half_len} samples, got {len(x)}")
    p, r = kernels.sc_sums(x, int(half_len))
    floor = 1e-12 * np.max(r) if len(r) else 0.0
    live = r > floor
    out = np.zeros_like(p)
    out[live] = (p[live] / r[live]) ** 2
    return out


def ncc_scan(x: np.ndarray, ref: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Normalized cross-correlation of ``ref`` against ``x[d:d+len(ref)]`` for ``d`` in ``[lo, hi]``."""
    seg = x[lo:hi + len(ref)]
    num = np.correlate(seg, ref, mode="valid")
    energy = np.cumsum(np.concatenate([[0.0], seg * seg]))
    win = energy[len(ref):] - energy[:-len(ref)]
    den = np.sqrt(np.maximum(win, 0.0)) * np.linalg.norm(ref)
    out = np.zeros_like(num)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def detect(
    wave: Waveform,
    preamble: SyncPreamble,
    threshold: float = DEFAULT_THRESHOLD,
    radius: int | None = None,
) -> SyncResult:
    """Locate the preamble start in ``wave``.

    The coarse index is the first global maximum of the metric among points
    at or above ``threshold``. The fine index maximizes normalized
    cross-correlation with the known preamble within ``radius`` samples of
    it, where ``radius = max(sps, FINE_MIN_RADIUS)`` unless given.
    """
    x = wave.samples
    H = preamble.half_len
    ref = preamble.waveform.samples
    if len(x) < 2 * H:
        return SyncResult(-1, -1, 0.0, False)
    metric = schmidl_cox_metric(x, H)
    peak = float(np.max(metric))
    if peak < threshold:
        return SyncResult(-1, -1, peak, False)
    coarse = int(np.argmax(metric))

    rad = max(preamble.sps, FINE_MIN_RADIUS) if radius is None else int(radius)
    last = len(x) - len(ref)
    lo = max(0, coarse - rad)
    hi = min(last, coarse + rad)
    if hi < lo:
        return SyncResult(coarse, coarse, peak, True)
    fine = lo + int(np.argmax(ncc_scan(x, ref, lo, hi)))
    return SyncResult(coarse, fine, peak, True)
