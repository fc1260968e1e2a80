"""Multi-band CAP transceiver: filter bank, transmit, matched-filter receive.

Each of the ``m`` subbands carries an independent QAM stream. The in-phase
and quadrature shaping filters of subband ``n`` are the SRRC prototype
multiplied by a cosine and a sine at the subband centre frequency, so the
bank forms Hilbert pairs and no explicit carrier mixer is needed. Subband
centres sit at ``freq_offset + (2n - 1) B / (2m)``; with symbol rate
``B / (m (1 + beta))`` adjacent subbands touch without overlapping.

Frame layout per subband is ``train_len`` known training symbols followed by
the payload. Symbol ``k`` of every subband peaks at sample
``k * sps + (taps - 1) / 2`` of the transmit waveform and at
``k * sps + (taps - 1)`` after the matched filter.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from .dsp import Taps, Waveform, design_srrc, srrc_value
from .errors import DegenerateChannelError, FrameError, ParameterError
from .qam import ConstellationSpec, map_bits

TRAINING_SEED = 0x7EA1
MIN_TRAIN_LEN = 8


@dataclass(frozen=True)
class McapConfig:
    m: int
    qam_order: int = 16
    bandwidth: float = 6.5e6
    rolloff: float = 0.15
    oversample: int = 4
    span: int = 40
    freq_offset: float = 5.0e5
    train_len: int = 32

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ParameterError(f"m must be a positive integer, got {self.m!r}", field="m")
        ConstellationSpec(self.qam_order)  # validates the order
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ParameterError(f"bandwidth must be positive, got {self.bandwidth!r}", field="bandwidth")
        if not (0.0 <= self.rolloff <= 1.0):
            raise ParameterError(f"rolloff must lie in [0, 1], got {self.rolloff!r}", field="rolloff")
        if int(self.oversample) != self.oversample or self.oversample < 2:
            raise ParameterError(f"oversample must be an integer >= 2, got {self.oversample!r}", field="oversample")
        if int(self.span) != self.span or self.span < 1:
            raise ParameterError(f"span must be a positive integer, got {self.span!r}", field="span")
        if not (self.freq_offset >= 0 and math.isfinite(self.freq_offset)):
            raise ParameterError(f"freq_offset must be >= 0, got {self.freq_offset!r}", field="freq_offset")
        if int(self.train_len) != self.train_len or self.train_len < MIN_TRAIN_LEN:
            raise ParameterError(
                f"train_len must be an integer >= {MIN_TRAIN_LEN}, got {self.train_len!r}", field="train_len"
            )
        if self.freq_offset + self.bandwidth > self.sample_rate / 2 * (1 + 1e-12):
            raise ParameterError(
                f"band edge {self.freq_offset + self.bandwidth:g} Hz exceeds Nyquist "
                f"{self.sample_rate / 2:g} Hz",
                field="freq_offset",
            )

    @property
    def constellation(self) -> ConstellationSpec:
        return ConstellationSpec(self.qam_order)

    @property
    def sample_rate(self) -> float:
        return self.oversample * self.bandwidth / (1.0 + self.rolloff)

    @property
    def sps(self) -> int:
        """Samples per symbol on every subband."""
        return int(self.oversample) * int(self.m)

    @property
    def symbol_rate(self) -> float:
        """Per-subband symbol rate (Bd)."""
        return self.bandwidth / (self.m * (1.0 + self.rolloff))

    @property
    def num_taps(self) -> int:
        return int(self.span) * self.sps + 1

    @property
    def group_delay(self) -> int:
        """Combined transmit + matched-filter delay in samples."""
        return self.num_taps - 1

    def center_freqs(self) -> np.ndarray:
        n = np.arange(1, self.m + 1)
        return self.freq_offset + (2 * n - 1) * self.bandwidth / (2 * self.m)

    def frame_len(self, payload_per_subband: int) -> int:
        """Transmit waveform length for the given payload symbols per subband."""
        total = self.train_len + payload_per_subband
        return (total - 1) * self.sps + self.num_taps


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Transmit filters as complex rows ``tx_i + 1j*tx_q``; receive rows are their time reversal."""

    prototype: Taps
    center_freqs: np.ndarray
    tx: np.ndarray
    rx: np.ndarray
    sps: int
    rx_delay: float = 0.0

    @property
    def m(self) -> int:
        return self.tx.shape[0]

    @property
    def sample_rate(self) -> float:
        return self.prototype.sample_rate

    def tx_i(self, n: int) -> Taps:
        return Taps(self.tx[n].real, self.sample_rate)

    def tx_q(self, n: int) -> Taps:
        return Taps(self.tx[n].imag, self.sample_rate)

    def rx_i(self, n: int) -> Taps:
        return Taps(self.rx[n].real, self.sample_rate)

    def rx_q(self, n: int) -> Taps:
        return Taps(self.rx[n].imag, self.sample_rate)

    @cached_property
    def energies(self) -> np.ndarray:
        """Mean of the I and Q filter energies, per subband."""
        return 0.5 * (np.sum(self.tx.real**2, axis=1) + np.sum(self.tx.imag**2, axis=1))

    @cached_property
    def tx_gain(self) -> float:
        """Gain giving unit expected output power for unit-energy symbols."""
        return float(1.0 / np.sqrt(np.sum(self.energies) / self.sps))

    def dump_csv(self, path: str | Path) -> None:
        """Write ``subband, tap, tx_i, tx_q`` rows (subband is 1-based)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["subband", "tap", "tx_i", "tx_q"])
            for n in range(self.m):
                for k, c in enumerate(self.tx[n]):
                    w.writerow([n + 1, k, f"{c.real:.17g}", f"{c.imag:.17g}"])


def _cap_pulses(cfg: McapConfig, t_sym: np.ndarray, scale: float) -> np.ndarray:
    """``g(t) * exp(j 2 pi f_n t)`` per subband at times ``t_sym`` (in symbol periods)."""
    g = srrc_value(t_sym, cfg.rolloff) * scale
    t = t_sym / cfg.symbol_rate
    phase = 2 * np.pi * cfg.center_freqs()[:, None] * t[None, :]
    return g[None, :] * (np.cos(phase) + 1j * np.sin(phase))


def build_filter_bank(cfg: McapConfig, rx_delay: float = 0.0) -> FilterBank:
    """Hilbert-pair filter bank for ``cfg``.

    ``rx_delay`` (in samples, may be fractional) re-evaluates the matched
    filters on a shifted time grid, so their outputs at the usual integer
    instants equal the ideal matched-filter output ``rx_delay`` samples later.
    """
    proto = design_srrc(cfg.rolloff, cfg.span, cfg.sps, sample_rate=cfg.sample_rate)
    n = len(proto)
    t_sym = (np.arange(n) - (n - 1) / 2) / cfg.sps
    scale = proto.coefficients[(n - 1) // 2] / srrc_value(np.zeros(1), cfg.rolloff)[0]
    tx = _cap_pulses(cfg, t_sym, scale)
    if rx_delay == 0.0:
        rx = tx[:, ::-1].copy()
    else:
        rx = _cap_pulses(cfg, -t_sym - rx_delay / cfg.sps, scale)
    return FilterBank(proto, cfg.center_freqs(), tx, rx, cfg.sps, float(rx_delay))


def training_symbols(cfg: McapConfig) -> np.ndarray:
    """Known training block, shape ``(m, train_len)``."""
    rng = np.random.default_rng([TRAINING_SEED, cfg.m, cfg.qam_order, cfg.train_len])
    pts = cfg.constellation.points()
    return pts[rng.integers(0, len(pts), size=(cfg.m, cfg.train_len))]


def split_subbands(symbols: np.ndarray, m: int) -> np.ndarray:
    """Round-robin symbol stream -> ``(m, n)``: symbol ``j`` goes to subband ``j % m``."""
    symbols = np.asarray(symbols)
    if len(symbols) % m:
        raise ParameterError(f"{len(symbols)} symbols do not divide evenly over {m} subbands")
    return symbols.reshape(-1, m).T


def merge_subbands(per_band: np.ndarray) -> np.ndarray:
    return np.asarray(per_band).T.ravel()


def synthesize(per_band: np.ndarray, cfg: McapConfig, bank: FilterBank) -> np.ndarray:
    """Sum of shaped subband streams, scaled by the bank's nominal gain."""
    per_band = np.asarray(per_band, dtype=np.complex128)
    if per_band.ndim != 2 or per_band.shape[0] != cfg.m:
        raise ParameterError(f"expected {cfg.m} subband rows, got shape {per_band.shape}")
    n = per_band.shape[1]
    if n == 0:
        return np.zeros(0)
    out = np.zeros((n - 1) * cfg.sps + cfg.num_taps)
    for k in range(cfg.m):
        kernels.interp_add(per_band[k], bank.tx[k], cfg.sps, out)
    out *= bank.tx_gain
    return out


def transmit(bits, cfg: McapConfig, bank: FilterBank) -> Waveform:
    """Modulate ``bits`` into one real m-CAP frame (training + payload).

    The output is scaled to unit expected RMS.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    group = cfg.m * cfg.constellation.bits_per_symbol
    if len(bits) % group:
        raise ParameterError(
            f"{len(bits)} bits is not a multiple of m * bits_per_symbol = {group}", field="bits"
        )
    payload = split_subbands(map_bits(bits, cfg.constellation), cfg.m)
    frame = np.concatenate([training_symbols(cfg), payload], axis=1)
    return Waveform(synthesize(frame, cfg, bank), cfg.sample_rate)


@dataclass(frozen=True, eq=False)
class EqualizerState:
    """One complex tap per subband, applied after a common ``1 / rms_scale``."""

    coefficients: np.ndarray
    rms_scale: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128)
        if not np.all(np.isfinite(c)) or np.any(c == 0):
            raise ParameterError("equalizer coefficients must be finite and nonzero")
        if not (self.rms_scale > 0 and math.isfinite(self.rms_scale)):
            raise ParameterError("rms_scale must be positive")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def identity(cls, m: int) -> "EqualizerState":
        return cls(np.ones(m, dtype=np.complex128))

    def apply(self, raw: np.ndarray) -> np.ndarray:
        return raw * (self.coefficients[:, None] / self.rms_scale)


def matched_symbols(wave: Waveform, cfg: McapConfig, bank: FilterBank, n_total: int) -> np.ndarray:
    """Matched-filter outputs at the symbol instants, shape ``(m, n_total)``.

    Includes the training block. Outputs are scaled so that a clean loopback
    returns the transmitted symbols.
    """
    if not math.isclose(wave.sample_rate, cfg.sample_rate, rel_tol=1e-9):
        raise ParameterError(
            f"waveform rate {wave.sample_rate} Hz does not match modem rate {cfg.sample_rate} Hz"
        )
    need = (n_total - 1) * cfg.sps + cfg.num_taps
    if n_total < 1 or len(wave) < need:
        raise FrameError(f"waveform has {len(wave)} samples, frame needs {need}")
    out = np.empty((cfg.m, n_total), dtype=np.complex128)
    norm = bank.energies * bank.tx_gain
    for k in range(cfg.m):
        y = kernels.decim_complex(wave.samples, bank.rx[k], cfg.sps, cfg.group_delay, n_total)
        # (y_i, -y_q) undoes the minus sign on the quadrature branch
        out[k] = np.conj(y) / norm[k]
    return out


def payload_capacity(wave_len: int, cfg: McapConfig) -> int:
    """Payload symbols per subband that fit in ``wave_len`` samples."""
    if wave_len < cfg.num_taps:
        return -cfg.train_len
    return (wave_len - cfg.num_taps) // cfg.sps + 1 - cfg.train_len


def receive(
    wave: Waveform,
    cfg: McapConfig,
    bank: FilterBank,
    eq: EqualizerState,
    n_payload: int | None = None,
) -> np.ndarray:
    """Equalized payload symbols per subband, shape ``(m, n_payload)``.

    ``wave`` must start at the frame start. Without ``n_payload`` every
    complete symbol period in the waveform is decoded.
    """
    if len(wave) < cfg.train_len * cfg.sps + cfg.group_delay:
        raise FrameError(
            f"waveform of {len(wave)} samples is shorter than training + group delay"
        )
    if n_payload is None:
        n_payload = payload_capacity(len(wave), cfg)
    if n_payload < 0:
        raise FrameError("negative payload length")
    raw = matched_symbols(wave, cfg, bank, cfg.train_len + n_payload)
    return eq.apply(raw[:, cfg.train_len:])


def train_equalizer(known: np.ndarray, received_raw: np.ndarray, rms_scale: float = 1.0) -> EqualizerState:
    """Least-squares one-tap estimate per subband; the coefficient inverts it."""
    known = np.atleast_2d(np.asarray(known, dtype=np.complex128))
    received_raw = np.atleast_2d(np.asarray(received_raw, dtype=np.complex128))
    if known.shape != received_raw.shape:
        raise ParameterError(f"shape mismatch: known {known.shape}, received {received_raw.shape}")
    if known.shape[1] < MIN_TRAIN_LEN:
        raise ParameterError(f"need at least {MIN_TRAIN_LEN} training symbols, got {known.shape[1]}")
    den = np.sum(np.abs(known) ** 2, axis=1)
    if np.any(den == 0):
        raise DegenerateChannelError("training block has zero energy")
    h = np.sum(received_raw * np.conj(known), axis=1) / den / rms_scale
    if np.any(np.abs(h) < 1e-9):
        bad = int(np.argmin(np.abs(h)))
        raise DegenerateChannelError(f"subband {bad + 1}: channel estimate |h| = {abs(h[bad]):.3g}")
    return EqualizerState(1.0 / h, rms_scale)


def bit_rate(cfg: McapConfig) -> float:
    """Aggregate raw bit rate in bit/s; independent of the subband count."""
    return cfg.bandwidth * math.log2(cfg.qam_order) / (1.0 + cfg.rolloff)
