"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary and also when this file is run as a script.
"""
import contextlib
import json
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.special import erfc

from conftest import ACCEPTANCE_LINES
from mcap_vlc.channel import ChannelConfig, apply_channel
from mcap_vlc.cli import main
from mcap_vlc.config import bundled_config, load_config
from mcap_vlc.harness import (
    _preamble,
    build_frame,
    cap_complexity,
    frame_sizes,
    ofdm_complexity,
    prbs,
    run_point,
    wilson_interval,
)
from mcap_vlc.mcap import (
    EqualizerState,
    McapConfig,
    bit_rate,
    build_filter_bank,
    merge_subbands,
    receive,
    transmit,
)
from mcap_vlc.qam import demap_symbols
from mcap_vlc.sync import detect

TREND_SNR_DB = 20.0
TREND_SYMBOLS = 1_008_000
TREND_M = (1, 2, 4, 6, 8, 10)


@contextlib.contextmanager
def criterion(number, title):
    info = {}
    try:
        yield info
    except BaseException:
        line = f"criterion {number:2d} FAIL  {title}  {info.get('detail', '')}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"criterion {number:2d} PASS  {title}  {info.get('detail', '')}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_01_rate_arithmetic():
    with criterion(1, "bit rates 11.30/22.61/33.91 Mb/s") as c:
        got = {M: bit_rate(McapConfig(m=1, qam_order=M)) / 1e6 for M in (4, 16, 64)}
        c["detail"] = ", ".join(f"{M}-QAM {v:.4f}" for M, v in got.items())
        for M, want in ((4, 11.30), (16, 22.61), (64, 33.91)):
            assert abs(got[M] - want) <= 0.01


def test_criterion_02_perfect_reconstruction():
    with criterion(2, "clean loopback BER = 0, 30 cases, >= 1e5 symbols each") as c:
        worst = 0
        for m in range(1, 11):
            for order in (4, 16, 64):
                cfg = McapConfig(m=m, qam_order=order)
                bank = build_filter_bank(cfg)
                k = cfg.constellation.bits_per_symbol
                n_pay = -(-100_000 // m)
                bits = prbs(m * 100 + order, n_pay * m * k)
                wave = transmit(bits, cfg, bank)
                syms = merge_subbands(receive(wave, cfg, bank, EqualizerState.identity(m)))
                errors = int(np.count_nonzero(demap_symbols(syms, cfg.constellation) != bits))
                assert n_pay * m >= 100_000
                worst = max(worst, errors)
        c["detail"] = f"max bit errors {worst}"
        assert worst == 0


@pytest.fixture(scope="module")
def trend_reports():
    ch = ChannelConfig(led_f3db=4.5e6, snr_db=TREND_SNR_DB, seed=31)
    return {m: run_point(McapConfig(m=m, qam_order=64), ch, TREND_SYMBOLS, seed=1000 + m) for m in TREND_M}


def test_criterion_03_monotone_trend(trend_reports):
    with criterion(3, f"64-QAM BER non-increasing in m at {TREND_SNR_DB:g} dB, LED 4.5 MHz") as c:
        r = trend_reports
        c["detail"] = " ".join(f"m{m}={r[m].ber:.2e}" for m in TREND_M)
        assert all(r[m].symbols_tx >= 1_000_000 for m in TREND_M)
        assert 1e-2 <= r[1].ber <= 1e-1
        for a, b in zip(TREND_M, TREND_M[1:]):
            _, hi_a = wilson_interval(r[a].bit_errors, r[a].bits_tx)
            lo_b, _ = wilson_interval(r[b].bit_errors, r[b].bits_tx)
            assert lo_b <= hi_a, (a, b)
        assert r[10].ber < r[1].ber


def penalty_interval(with_flicker, clean):
    lo_f, hi_f = wilson_interval(with_flicker.bit_errors, with_flicker.bits_tx)
    lo_c, hi_c = wilson_interval(clean.bit_errors, clean.bits_tx)
    return with_flicker.ber - clean.ber, lo_f - hi_c, hi_f - lo_c


def test_criterion_04_flicker_coexistence():
    with criterion(4, "flicker penalty at m=10 <= penalty at m=1 (offset 500 kHz)") as c:
        base = ChannelConfig(led_f3db=4.5e6, snr_db=TREND_SNR_DB, seed=41)
        pen = {}
        for m in (1, 10):
            cfg = McapConfig(m=m, qam_order=64, freq_offset=5e5)
            clean = run_point(cfg, base, 1_000_000, seed=77)
            flick = run_point(cfg, replace(base, flicker=True), 1_000_000, seed=77)
            pen[m] = penalty_interval(flick, clean)
        c["detail"] = f"penalty m1={pen[1][0]:+.2e} m10={pen[10][0]:+.2e}"
        # the m=10 penalty interval must not lie wholly above the m=1 interval
        assert pen[10][1] <= pen[1][2]


def test_criterion_05_symbol_count_scale():
    with criterion(5, "default sweep sends > 1e6 symbols per point") as c:
        cfg = load_config(bundled_config("default"))
        sent = {p.m: sum(frame_sizes(cfg.grid.symbols, p.m)) for p in cfg.grid.points}
        c["detail"] = f"configured {cfg.grid.symbols}, min sent {min(sent.values())}"
        assert cfg.grid.symbols > 1_000_000
        assert min(sent.values()) > 1_000_000


def test_criterion_06_sync_accuracy():
    with criterion(6, "sync at 10 dB: >= 99% detected, >= 95% within sps/2") as c:
        summary = []
        for m in (1, 5, 10):
            cfg = McapConfig(m=m, qam_order=64)
            bits = prbs(3, 200 * m * 6)
            found, good = 0, 0
            for trial in range(100):
                rng = np.random.default_rng([m, trial])
                lead = int(rng.integers(0, 16 * cfg.sps + 1))
                tx, _ = build_frame(cfg, bits, lead, rng)
                rx = apply_channel(tx, ChannelConfig(snr_db=10.0, seed=trial))
                res = detect(rx, _preamble(cfg))
                if res.detected:
                    found += 1
                    good += abs(res.fine_index - lead) <= cfg.sps / 2
            summary.append((m, found, good))
        c["detail"] = " ".join(f"m{m}: {f}/100 det, {g} in tol" for m, f, g in summary)
        for _, found, good in summary:
            assert found >= 99
            assert good >= 0.95 * found


def test_criterion_07_awgn_oracle():
    with criterion(7, "4-QAM AWGN BER within 30% of Q(sqrt(SNR)) near 1e-3") as c:
        parts = []
        for m in (1, 10):
            r = run_point(McapConfig(m=m, qam_order=4), ChannelConfig(led_f3db=None, snr_db=7.0, seed=5),
                          500_000, seed=17)
            snr = 10 ** (r.evm_snr_db / 10)
            expected = 0.5 * erfc(math.sqrt(snr / 2))
            parts.append((m, r, expected))
        c["detail"] = " ".join(f"m{m}: {r.ber:.3e} vs {e:.3e} ({r.bits_tx} bits)" for m, r, e in parts)
        for _, r, expected in parts:
            assert r.bits_tx >= 1_000_000
            assert 3e-4 <= expected <= 3e-3
            assert abs(r.ber / expected - 1) <= 0.30


def _psd(tmp_path, doc, name):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(doc))
    out = tmp_path / f"{name}.csv"
    assert main(["psd", "--config", str(p), "--out", str(out), "--quiet"]) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    return data[:, 0], data[:, 1]


def test_criterion_08_spectrum_shape(tmp_path):
    with criterion(8, "PSD: m=5, flicker on, 500 kHz offset") as c:
        doc = json.loads(bundled_config("fig4").read_text())
        assert doc["modem"]["m"] == 5 and doc["channel"]["flicker"] and doc["modem"]["freq_offset"] == 5e5
        f, on = _psd(tmp_path, doc, "on")
        doc["channel"]["flicker"] = False
        _, off = _psd(tmp_path, doc, "off")

        inband = (f >= 0.5e6) & (f <= 7.0e6)
        # each file is normalized to its own peak bin; re-reference both to the in-band peak
        on = on - on[inband].max()
        off = off - off[inband].max()
        peak = 0.0
        oob = on[f > 7.5e6].max() - peak
        centres = McapConfig(m=5).center_freqs()
        sub_levels = [on[np.argmin(np.abs(f - fc))] - peak for fc in centres]
        lift_below = (on - off)[f < 0.5e6].max()
        lift_above = np.abs(on - off)[f > 0.6e6].max()
        c["detail"] = (f"OOB {oob:.1f} dB, subbands {min(sub_levels):.1f}..{max(sub_levels):.1f} dB, "
                       f"flicker lift <0.5 MHz {lift_below:.1f} dB, >0.6 MHz {lift_above:.2f} dB")
        # five subbands carry energy across the band
        assert min(sub_levels) >= -15
        # interferer is visible below 0.5 MHz and absent above
        assert lift_below >= 10
        assert lift_above <= 0.5
        assert oob <= -30


def test_criterion_09_complexity():
    with criterion(9, "cap_complexity(10,10)=400, ofdm_complexity(1024)=20") as c:
        a, b = cap_complexity(10, 10), ofdm_complexity(1024)
        c["detail"] = f"{a}, {b}"
        assert a == 400 and b == 20


def test_criterion_10_determinism(tmp_path):
    with criterion(10, "identical config and seed give byte-identical outputs") as c:
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "modem": {"m": 4, "qam_order": 16},
            "channel": {"snr_db": 16.0, "flicker": True},
            "sweep": {"m": [2, 7], "qam_order": [16, 64], "symbols": 12_000, "seed": 3},
            "psd": {"symbols": 5000},
        }))
        outputs = []
        for run in ("a", "b"):
            d = tmp_path / run
            d.mkdir()
            assert main(["sweep", "--config", str(cfg), "--out", str(d / "sweep"), "--seed", "9", "--quiet"]) == 0
            assert main(["psd", "--config", str(cfg), "--out", str(d / "psd.csv"), "--seed", "9", "--quiet"]) == 0
            assert main(["txwave", "--config", str(cfg), "--bits", "prbs:5:12800", "--out", str(d / "tx.f32"),
                         "--quiet"]) == 0
            outputs.append([(d / "sweep" / "results.csv").read_bytes(), (d / "psd.csv").read_bytes(),
                            (d / "tx.f32").read_bytes(), (d / "tx.f32.json").read_bytes()])
        same = [x == y for x, y in zip(*outputs)]
        c["detail"] = f"results.csv, psd.csv, tx.f32, sidecar identical: {same}"
        assert all(same)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
