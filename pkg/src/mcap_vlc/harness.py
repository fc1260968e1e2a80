"""BER experiments: PRBS data, framed end-to-end runs, sweeps, complexity counts.

A run is split into frames of at most ``frame_symbols`` QAM symbols. Each
frame is a pure function of ``(seed, frame index, attempt)``: a random-length
stretch of idle traffic, the sync preamble, the modem frame (training +
PRBS payload) and a short idle tail. Because frames are independent, a long
run equals the pooled result of its frame-aligned pieces.

The receiver syncs to integer-sample accuracy, then picks a fractional
sampling delay by testing delayed matched filters on the training block.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import kernels
from .channel import ChannelConfig, apply_channel
from .dsp import Waveform
from .errors import DegenerateChannelError, FrameError, ParameterError
from .mcap import (
    McapConfig,
    bit_rate,
    build_filter_bank,
    matched_symbols,
    merge_subbands,
    split_subbands,
    synthesize,
    train_equalizer,
    training_symbols,
    transmit,
)
from .qam import demap_symbols, map_bits
from .sync import DEFAULT_THRESHOLD, SyncPreamble, detect, make_preamble

FEC7_THRESHOLD = 3.8e-3
FEC20_THRESHOLD = 1.5e-2
DEFAULT_FRAME_SYMBOLS = 65_520  # multiple of lcm(1..10)
PREAMBLE_HALF_SYMBOLS = 64
PREAMBLE_SEED = 1
MAX_RETRIES = 3
MIN_SYMBOLS_ADVISED = 10_000
TIMING_CANDIDATES = tuple(np.arange(-8, 9) / 8.0)

PRBS15_PERIOD = 2**15 - 1


def prbs(seed: int, n: int) -> np.ndarray:
    """PRBS-15 bits (x^15 + x^14 + 1), LSB of the register shifted out first.

    Only the low 15 bits of ``seed`` form the initial state.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}", field="n")
    state = int(seed) & PRBS15_PERIOD
    if state == 0:
        raise ParameterError("PRBS seed must have a nonzero low 15-bit state", field="seed")
    return kernels.lfsr15(state, int(n))


@dataclass(frozen=True)
class BerReport:
    """Pooled error counts for one operating point.

    ``symbols_tx`` counts QAM symbols over all subbands. A frame whose sync
    fails on every attempt counts all of its bits as errors.
    ``evm_snr_db`` is the data-aided modulation error ratio of the payload
    after a per-frame, per-subband complex gain fit.
    """

    m: int
    qam_order: int
    bits_tx: int
    bit_errors: int
    ber: float
    per_subband_errors: tuple
    symbols_tx: int
    sync_failures: int
    passes_fec7: bool
    passes_fec20: bool
    frames: int = 0
    failed_frames: int = 0
    evm_snr_db: float = math.nan

    @classmethod
    def from_counts(cls, m, qam_order, bits_tx, errors, per_sub, symbols, sync_failures,
                    frames, failed, err_power_sum, n_err_syms):
        ber = errors / bits_tx if bits_tx else 0.0
        if n_err_syms and err_power_sum > 0:
            evm = 10.0 * math.log10(n_err_syms / err_power_sum)
        elif n_err_syms:
            evm = math.inf
        else:
            evm = math.nan
        return cls(
            m=m, qam_order=qam_order, bits_tx=int(bits_tx), bit_errors=int(errors), ber=ber,
            per_subband_errors=tuple(int(e) for e in per_sub), symbols_tx=int(symbols),
            sync_failures=int(sync_failures),
            passes_fec7=ber < FEC7_THRESHOLD, passes_fec20=ber < FEC20_THRESHOLD,
            frames=frames, failed_frames=failed, evm_snr_db=evm,
        )


@lru_cache(maxsize=32)
def _bank(cfg: McapConfig):
    return build_filter_bank(cfg)


@lru_cache(maxsize=512)
def _delayed_bank(cfg: McapConfig, delay: float):
    return build_filter_bank(cfg, rx_delay=delay)


@lru_cache(maxsize=32)
def _preamble(cfg: McapConfig) -> SyncPreamble:
    return make_preamble(cfg, PREAMBLE_HALF_SYMBOLS, PREAMBLE_SEED, bank=_bank(cfg))


@lru_cache(maxsize=32)
def _training(cfg: McapConfig) -> np.ndarray:
    return training_symbols(cfg)


def frame_sizes(n_symbols: int, m: int, frame_symbols: int = DEFAULT_FRAME_SYMBOLS) -> list[int]:
    """QAM symbols per frame; every entry is a multiple of ``m`` and the total is >= ``n_symbols``."""
    spf = max(m, (frame_symbols // m) * m)
    full, rest = divmod(int(n_symbols), spf)
    sizes = [spf] * full
    if rest:
        sizes.append(-(-rest // m) * m)
    return sizes


def _lead_in_max(cfg: McapConfig) -> int:
    return 16 * cfg.sps


def idle_fill(cfg: McapConfig, n: int, rng) -> np.ndarray:
    """``n`` samples of random-symbol m-CAP traffic (steady state, no ramp)."""
    if n <= 0:
        return np.zeros(0)
    n_sym = -(-n // cfg.sps) + 2 * cfg.span + 2
    pts = cfg.constellation.points()
    syms = pts[rng.integers(0, len(pts), size=(cfg.m, n_sym))]
    x = synthesize(syms, cfg, _bank(cfg))
    start = cfg.num_taps
    return x[start:start + n]


def build_frame(cfg: McapConfig, bits: np.ndarray, lead_in: int, rng=None) -> tuple[Waveform, int]:
    """Idle lead-in + sync preamble + idle guard + modem frame + idle tail.

    Returns the waveform and the index where the modem frame starts.

    The link is never silent: the receiver's DC removal would turn silence
    into a constant level, which the repetition metric scores as a perfect
    match. The guard (one preamble half of idle traffic) keeps the modem
    frame's low-energy ramp-up out of the metric window right after the
    preamble, where it would otherwise push ``P^2/R^2`` above the true peak.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    bank = _bank(cfg)
    pre = _preamble(cfg)
    body = transmit(bits, cfg, bank).samples
    samples = np.concatenate([
        idle_fill(cfg, lead_in, rng),
        pre.waveform.samples,
        idle_fill(cfg, pre.half_len, rng),
        body,
        idle_fill(cfg, 4 * cfg.sps, rng),
    ])
    return Waveform(samples, cfg.sample_rate), lead_in + 2 * pre.half_len + pre.half_len


def refine_timing(body: Waveform, cfg: McapConfig, known: np.ndarray,
                  candidates=TIMING_CANDIDATES) -> float:
    """Fractional sampling delay (samples) minimizing the one-tap training residual."""
    best, best_delay = np.inf, 0.0
    den_k = np.sum(np.abs(known) ** 2, axis=1)
    for d in candidates:
        raw = matched_symbols(body, cfg, _delayed_bank(cfg, float(d)), cfg.train_len)
        h = np.sum(raw * np.conj(known), axis=1) / den_k
        fit = h[:, None] * known
        err = np.sum(np.abs(raw - fit) ** 2) / max(np.sum(np.abs(fit) ** 2), 1e-300)
        if err < best:
            best, best_delay = err, float(d)
    return best_delay


def _modulation_error(got: np.ndarray, ref: np.ndarray) -> float:
    """Error power after a per-subband least-squares complex gain fit.

    Short training leaves a few percent of gain error in the equalizer; the
    fit keeps that bias out of the reported SNR so it measures noise and ISI.
    """
    g = np.sum(got * np.conj(ref), axis=1) / np.sum(np.abs(ref) ** 2, axis=1)
    return float(np.sum(np.abs(got / g[:, None] - ref) ** 2))


def _frame_seeds(seed: int, frame: int, attempt: int) -> tuple[int, int, int]:
    data_ss = np.random.SeedSequence([seed & (2**63 - 1), frame])
    prbs_seed = int(data_ss.generate_state(1)[0]) % PRBS15_PERIOD + 1
    chan_ss = np.random.SeedSequence([seed & (2**63 - 1), frame, attempt])
    lead_word, chan_word = chan_ss.generate_state(2)
    return prbs_seed, int(lead_word), int(chan_word)


@dataclass
class _Tally:
    m: int
    bits: int = 0
    errors: int = 0
    per_sub: np.ndarray = field(default=None)
    symbols: int = 0
    sync_failures: int = 0
    frames: int = 0
    failed: int = 0
    err_power: float = 0.0
    err_syms: int = 0

    def __post_init__(self):
        if self.per_sub is None:
            self.per_sub = np.zeros(self.m, dtype=np.int64)


def _run_frame(cfg, ch, n_sym, seed, frame, threshold, max_retries, tally):
    k = cfg.constellation.bits_per_symbol
    m = cfg.m
    prbs_seed, _, _ = _frame_seeds(seed, frame, 0)
    bits = prbs(prbs_seed, n_sym * k)
    ref_syms = map_bits(bits, cfg.constellation)
    n_pay = n_sym // m
    pre_len = 3 * _preamble(cfg).half_len  # preamble + guard
    need = cfg.frame_len(n_pay)

    tally.frames += 1
    tally.bits += len(bits)
    tally.symbols += n_sym

    for attempt in range(max_retries + 1):
        _, lead_word, chan_word = _frame_seeds(seed, frame, attempt)
        lead = lead_word % (_lead_in_max(cfg) + 1)
        tx, _ = build_frame(cfg, bits, lead, np.random.default_rng([lead_word, chan_word]))
        chan_seed = int(np.random.SeedSequence([ch.seed, chan_word]).generate_state(1)[0])
        rx = apply_channel(tx, ch.with_seed(chan_seed))
        res = detect(rx, _preamble(cfg), threshold)
        start = res.fine_index + pre_len
        if not res.detected or start + need > len(rx):
            tally.sync_failures += 1
            continue
        body = Waveform(rx.samples[start:start + need + 2], rx.sample_rate)
        delay = refine_timing(body, cfg, _training(cfg))
        raw = matched_symbols(body, cfg, _delayed_bank(cfg, delay), cfg.train_len + n_pay)
        try:
            eq = train_equalizer(_training(cfg), raw[:, :cfg.train_len])
        except DegenerateChannelError:
            tally.sync_failures += 1
            continue
        per_band = eq.apply(raw[:, cfg.train_len:])
        syms = merge_subbands(per_band)
        got = demap_symbols(syms, cfg.constellation)
        wrong = (got != bits).reshape(-1, k).sum(axis=1)
        tally.errors += int(wrong.sum())
        tally.per_sub += np.bincount(np.arange(n_sym) % m, weights=wrong, minlength=m).astype(np.int64)
        tally.err_power += _modulation_error(per_band, split_subbands(ref_syms, m))
        tally.err_syms += n_sym
        return
    # frame lost: every bit counts as an error
    tally.failed += 1
    tally.errors += len(bits)
    tally.per_sub += np.full(m, (n_sym // m) * k, dtype=np.int64)


def run_point(
    cfg: McapConfig,
    ch: ChannelConfig,
    n_symbols: int,
    seed: int,
    *,
    frame_symbols: int = DEFAULT_FRAME_SYMBOLS,
    first_frame: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    max_retries: int = MAX_RETRIES,
) -> BerReport:
    """Transmit at least ``n_symbols`` QAM symbols through ``ch`` and count bit errors.

    ``first_frame`` offsets the frame index used for seeding so a long run
    can be reproduced piecewise.
    """
    if n_symbols < 1:
        raise ParameterError(f"n_symbols must be >= 1, got {n_symbols}", field="symbols")
    if n_symbols < MIN_SYMBOLS_ADVISED:
        warnings.warn(
            f"{n_symbols} symbols is below {MIN_SYMBOLS_ADVISED}; BER estimate will be coarse",
            stacklevel=2,
        )
    tally = _Tally(cfg.m)
    for i, n_sym in enumerate(frame_sizes(n_symbols, cfg.m, frame_symbols)):
        _run_frame(cfg, ch, n_sym, int(seed), first_frame + i, threshold, max_retries, tally)
    return BerReport.from_counts(
        cfg.m, cfg.qam_order, tally.bits, tally.errors, tally.per_sub, tally.symbols,
        tally.sync_failures, tally.frames, tally.failed, tally.err_power, tally.err_syms,
    )


@dataclass(frozen=True)
class SweepPoint:
    m: int
    qam_order: int
    snr_db: float
    led_f3db: float | None
    flicker: bool
    freq_offset: float

    def key(self) -> str:
        return (f"m={self.m}|M={self.qam_order}|snr={self.snr_db!r}|led={self.led_f3db!r}"
                f"|flicker={bool(self.flicker)}|off={self.freq_offset!r}")


def point_seed(base_seed: int, point: SweepPoint) -> int:
    """Seed attached to the parameter tuple rather than its grid position."""
    h = hashlib.blake2b(f"{int(base_seed)}#{point.key()}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little") & (2**63 - 1)


@dataclass(frozen=True)
class SweepGrid:
    points: tuple
    symbols: int
    base_seed: int = 0
    modem: dict = field(default_factory=dict, hash=False)
    channel: ChannelConfig = field(default_factory=ChannelConfig)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ParameterError("sweep grid is empty", field="points")
        if int(self.symbols) != self.symbols or self.symbols < 1:
            raise ParameterError(f"symbols must be a positive integer, got {self.symbols!r}", field="symbols")
        for p in self.points:
            self.configs(p)

    def configs(self, p: SweepPoint) -> tuple[McapConfig, ChannelConfig]:
        cfg = McapConfig(m=p.m, qam_order=p.qam_order, freq_offset=p.freq_offset, **self.modem)
        ch = replace(self.channel, snr_db=p.snr_db, led_f3db=p.led_f3db, flicker=bool(p.flicker))
        if ch.led_f3db is not None and ch.led_f3db >= cfg.sample_rate / 2:
            raise ParameterError(
                f"led_f3db {ch.led_f3db:g} Hz must be below Nyquist {cfg.sample_rate / 2:g} Hz",
                field="led_f3db",
            )
        return cfg, ch


@dataclass(frozen=True)
class SweepResult:
    point: SweepPoint
    report: BerReport
    bit_rate_bps: float


def _run_sweep_point(args):
    grid, p = args
    cfg, ch = grid.configs(p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = run_point(cfg, ch, grid.symbols, point_seed(grid.base_seed, p))
    return SweepResult(p, rep, bit_rate(cfg))


def sweep(grid: SweepGrid, workers: int = 1) -> list[SweepResult]:
    """Run every grid point; output order follows ``grid.points`` regardless of ``workers``."""
    jobs = [(grid, p) for p in grid.points]
    if workers <= 1 or len(jobs) == 1:
        return [_run_sweep_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_sweep_point, jobs))


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion ``k / n``."""
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def cap_complexity(m: int, taps: int) -> int:
    """Multiplications per symbol period for the m-CAP filter bank: ``4 L m``."""
    if m < 1 or taps < 1:
        raise ParameterError("m and L must be >= 1")
    return 4 * int(taps) * int(m)


def ofdm_complexity(n: int) -> int:
    """(I)FFT-pair cost scaling ``2 log2(N)`` for ``N`` subcarriers."""
    n = int(n)
    if n < 2 or n & (n - 1):
        raise ParameterError(f"N must be a power of two >= 2, got {n}", field="N")
    return 2 * (n.bit_length() - 1)


def received_frame(cfg: McapConfig, ch: ChannelConfig, n_symbols: int, seed: int) -> Waveform:
    """One framed PRBS transmission after the channel, as used for spectrum plots."""
    n = -(-int(n_symbols) // cfg.m) * cfg.m
    bits = prbs(_frame_seeds(seed, 0, 0)[0], n * cfg.constellation.bits_per_symbol)
    rng = np.random.default_rng([int(seed) & (2**63 - 1), 0x9D])
    tx, _ = build_frame(cfg, bits, 0, rng)
    return apply_channel(tx, ch)
