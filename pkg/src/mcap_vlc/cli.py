"""Command-line front end: ``mcap-vlc {sweep,psd,txwave}``.

Exit codes: 0 success, 2 configuration or validation error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dsp import welch_psd, write_waveform
from .errors import ParameterError
from .harness import FEC7_THRESHOLD, FEC20_THRESHOLD, prbs, received_frame, sweep
from .mcap import build_filter_bank, transmit

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

RESULTS_COLUMNS = (
    "m", "qam_order", "snr_db", "led_f3db_hz", "freq_offset_hz", "flicker", "symbols",
    "bits_tx", "bit_errors", "ber", "sync_failures", "passes_fec7", "passes_fec20", "bit_rate_bps",
)


def _num(x) -> str:
    """Shortest round-trip text for a number; ``None`` becomes an empty field."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def _manifest(command: str, config_path, cfg: RunConfig, extra: dict | None = None) -> str:
    doc = {
        "tool": "mcap-vlc",
        "version": __version__,
        "command": command,
        "config_path": str(config_path),
        "base_seed": cfg.grid.base_seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "resolved": cfg.to_manifest(),
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = sweep(cfg.grid, workers=cfg.workers)
    rows = []
    for res in results:
        p, r = res.point, res.report
        rows.append((
            p.m, p.qam_order, p.snr_db, p.led_f3db, p.freq_offset, bool(p.flicker), r.symbols_tx,
            r.bits_tx, r.bit_errors, r.ber, r.sync_failures, r.passes_fec7, r.passes_fec20,
            res.bit_rate_bps,
        ))
        _say(args, f"m={p.m:2d} {p.qam_order:2d}-QAM snr={p.snr_db:g} dB  ber={r.ber:.3e}"
                   f"  fec7={'pass' if r.passes_fec7 else 'fail'}"
                   f"  fec20={'pass' if r.passes_fec20 else 'fail'}")
    (out / "results.csv").write_text(_csv_text(RESULTS_COLUMNS, rows), encoding="utf-8", newline="")
    (out / "manifest.json").write_text(
        _manifest("sweep", args.config, cfg, {
            "outputs": ["results.csv"],
            "fec_thresholds": {"fec7": FEC7_THRESHOLD, "fec20": FEC20_THRESHOLD},
        }),
        encoding="utf-8",
    )
    _say(args, f"wrote {out / 'results.csv'} ({len(rows)} rows)")
    return EXIT_OK


def cmd_psd(args) -> int:
    cfg = _load(args)
    modem = cfg.modem if args.m is None else replace(cfg.modem, m=args.m)
    wave = received_frame(modem, cfg.channel, cfg.psd["symbols"], cfg.channel.seed)
    psd = welch_psd(wave, segment_len=cfg.psd["segment_len"], overlap=cfg.psd["overlap"])
    out = Path(args.out)
    text = _csv_text(("freq_hz", "power_db"), zip(psd.frequencies, psd.power_db))
    out.write_text(text, encoding="utf-8", newline="")
    Path(f"{out}.manifest.json").write_text(
        _manifest("psd", args.config, cfg, {"m": modem.m, "outputs": [out.name]}), encoding="utf-8"
    )
    _say(args, f"wrote {out} ({len(psd.frequencies)} bins, RBW {psd.resolution_bw:.1f} Hz)")
    return EXIT_OK


def parse_bits_source(spec: str) -> np.ndarray:
    """``prbs:<seed>:<count>`` or the path of a file of packed bits (MSB first)."""
    if spec.startswith("prbs:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ParameterError(f"bits source {spec!r} must look like prbs:<seed>:<count>", field="bits")
        try:
            seed, count = int(parts[1], 0), int(parts[2], 0)
        except ValueError:
            raise ParameterError(f"bits source {spec!r} has a non-integer field", field="bits") from None
        if seed & 0x7FFF == 0:
            raise ParameterError("prbs seed must have a nonzero low 15 bits", field="bits")
        return prbs(seed, count)
    data = Path(spec).read_bytes()
    if not data:
        raise ParameterError(f"bits file {spec!r} is empty", field="bits")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def cmd_txwave(args) -> int:
    cfg = _load(args)
    bits = parse_bits_source(args.bits)
    wave = transmit(bits, cfg.modem, build_filter_bank(cfg.modem))
    out = Path(args.out)
    desc = (f"m-CAP transmit frame: m={cfg.modem.m}, {cfg.modem.qam_order}-QAM, "
            f"{len(bits)} payload bits, training {cfg.modem.train_len} symbols per subband")
    write_waveform(out, wave, desc)
    Path(f"{out}.manifest.json").write_text(
        _manifest("txwave", args.config, cfg, {"bits_source": args.bits, "outputs": [out.name]}),
        encoding="utf-8",
    )
    _say(args, f"wrote {out} ({len(wave)} samples at {wave.sample_rate:.6g} Hz)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON configuration file")
    common.add_argument("--out", required=True, help="output directory (sweep) or file (psd, txwave)")
    common.add_argument("--seed", type=int, default=None, help="override the configured base seed")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="mcap-vlc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="run a BER sweep and write results.csv")
    p = sub.add_parser("psd", parents=[common], help="write the received-signal PSD as CSV")
    p.add_argument("--m", type=int, default=None, help="override the number of subbands")
    t = sub.add_parser("txwave", parents=[common], help="export a transmit waveform")
    t.add_argument("--bits", required=True, help="prbs:<seed>:<count> or a packed-bits file")
    return parser


COMMANDS = {"sweep": cmd_sweep, "psd": cmd_psd, "txwave": cmd_txwave}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParameterError as exc:
        key = f" [{exc.field}]" if exc.field else ""
        print(f"mcap-vlc: configuration error{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"mcap-vlc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
