"""JSON run configuration with ``modem``, ``channel``, ``sweep`` and ``psd`` sections.

Any key may be omitted and then takes the library default. JSON has no
infinity, so ``snr_db`` also accepts the strings ``"inf"``/``"Infinity"``;
``led_f3db: null`` bypasses the LED model. Sweep axes accept a scalar or a
list and default to the corresponding modem/channel value.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .channel import ChannelConfig
from .errors import ParameterError
from .harness import SweepGrid, SweepPoint
from .mcap import McapConfig

SECTIONS = ("modem", "channel", "sweep", "psd")
MODEM_KEYS = tuple(f.name for f in fields(McapConfig))
CHANNEL_KEYS = tuple(f.name for f in fields(ChannelConfig))
SWEEP_AXES = ("m", "qam_order", "snr_db", "led_f3db", "flicker", "freq_offset")
SWEEP_KEYS = SWEEP_AXES + ("symbols", "seed", "workers")
PSD_KEYS = ("symbols", "segment_len", "overlap")

DEFAULT_SWEEP_SYMBOLS = 1_008_000
DEFAULT_PSD = {"symbols": 20_000, "segment_len": 1024, "overlap": 0.5}

_INT_KEYS = {"m", "qam_order", "oversample", "span", "train_len", "seed", "symbols", "workers", "segment_len"}
_BOOL_KEYS = {"flicker"}


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved and validated configuration document."""

    modem: McapConfig
    channel: ChannelConfig
    grid: SweepGrid
    workers: int
    psd: dict

    def with_seed(self, seed: int) -> "RunConfig":
        grid = SweepGrid(self.grid.points, self.grid.symbols, int(seed), self.grid.modem, self.grid.channel)
        return RunConfig(self.modem, self.channel.with_seed(seed), grid, self.workers, self.psd)

    def to_manifest(self) -> dict:
        return {
            "modem": _jsonable(asdict(self.modem)),
            "channel": _jsonable(asdict(self.channel)),
            "sweep": {
                "points": [_jsonable(asdict(p)) for p in self.grid.points],
                "symbols": self.grid.symbols,
                "base_seed": self.grid.base_seed,
                "workers": self.workers,
            },
            "psd": dict(self.psd),
        }


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        out[k] = ("inf" if v > 0 else "-inf") if isinstance(v, float) and math.isinf(v) else v
    return out


def _coerce(section: str, key: str, value):
    where = f"{section}.{key}"
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ParameterError(f"{where} must be true or false, got {value!r}", field=key)
        return value
    if key == "led_f3db" and value is None:
        return None
    if key == "noise_var" and value is None:
        return None
    if key == "snr_db" and isinstance(value, str):
        if value.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ParameterError(f"{where} must be a number or \"inf\", got {value!r}", field=key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(f"{where} must be a number, got {value!r}", field=key)
    if key in _INT_KEYS:
        if float(value) != int(value):
            raise ParameterError(f"{where} must be an integer, got {value!r}", field=key)
        return int(value)
    return float(value)


def _section(doc: dict, name: str, allowed: tuple) -> dict:
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ParameterError(f"section {name!r} must be an object", field=name)
    for key in raw:
        if key not in allowed:
            raise ParameterError(f"unknown key {name}.{key}", field=key)
    return raw


def _axis(raw, section: str, key: str) -> list:
    values = raw if isinstance(raw, list) else [raw]
    if not values:
        raise ParameterError(f"{section}.{key} must not be empty", field=key)
    return [_coerce(section, key, v) for v in values]


def _tagged(section: str, exc: ParameterError) -> ParameterError:
    key = exc.field or section
    msg = str(exc)
    if f"{section}.{key}" not in msg:
        msg = f"{section}.{key}: {msg}"
    return ParameterError(msg, field=key)


def parse_config(doc) -> RunConfig:
    """Validate a decoded JSON document; raises ``ParameterError`` naming the bad key."""
    if not isinstance(doc, dict):
        raise ParameterError("configuration must be a JSON object", field="config")
    for key in doc:
        if key not in SECTIONS:
            raise ParameterError(f"unknown section {key!r}", field=key)

    modem_raw = _section(doc, "modem", MODEM_KEYS)
    modem_kw = {k: _coerce("modem", k, v) for k, v in modem_raw.items()}
    try:
        modem = McapConfig(**{"m": 1, **modem_kw})
    except ParameterError as exc:
        raise _tagged("modem", exc) from None

    chan_raw = _section(doc, "channel", CHANNEL_KEYS)
    chan_kw = {k: _coerce("channel", k, v) for k, v in chan_raw.items()}
    try:
        channel = ChannelConfig(**chan_kw)
    except ParameterError as exc:
        raise _tagged("channel", exc) from None

    sw = _section(doc, "sweep", SWEEP_KEYS)
    defaults = {
        "m": modem.m,
        "qam_order": modem.qam_order,
        "snr_db": channel.snr_db,
        "led_f3db": channel.led_f3db,
        "flicker": channel.flicker,
        "freq_offset": modem.freq_offset,
    }
    axes = {k: _axis(sw[k], "sweep", k) if k in sw else [defaults[k]] for k in SWEEP_AXES}
    symbols = _coerce("sweep", "symbols", sw.get("symbols", DEFAULT_SWEEP_SYMBOLS))
    seed = _coerce("sweep", "seed", sw.get("seed", 0))
    workers = _coerce("sweep", "workers", sw.get("workers", 1))
    if workers < 1:
        raise ParameterError("sweep.workers must be >= 1", field="workers")

    points = [
        SweepPoint(m=m, qam_order=q, snr_db=s, led_f3db=led, flicker=fl, freq_offset=off)
        for q, m, s, led, fl, off in itertools.product(
            axes["qam_order"], axes["m"], axes["snr_db"], axes["led_f3db"], axes["flicker"], axes["freq_offset"]
        )
    ]
    grid_modem = {k: getattr(modem, k) for k in MODEM_KEYS if k not in ("m", "qam_order", "freq_offset")}
    try:
        grid = SweepGrid(tuple(points), symbols, seed, grid_modem, channel)
    except ParameterError as exc:
        raise _tagged("sweep", exc) from None

    psd_raw = _section(doc, "psd", PSD_KEYS)
    psd = dict(DEFAULT_PSD)
    psd.update({k: _coerce("psd", k, v) for k, v in psd_raw.items()})
    if psd["symbols"] < 1:
        raise ParameterError("psd.symbols must be >= 1", field="symbols")
    if psd["segment_len"] < 8:
        raise ParameterError("psd.segment_len must be >= 8", field="segment_len")
    if not 0.0 <= psd["overlap"] < 1.0:
        raise ParameterError("psd.overlap must lie in [0, 1)", field="overlap")
    return RunConfig(modem, channel, grid, workers, psd)


def load_config(path) -> RunConfig:
    """Read and validate a configuration file. ``OSError`` propagates for I/O failures."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                             field="config") from None
    return parse_config(doc)


def bundled_config(name: str = "default") -> Path:
    """Path of a configuration shipped with the package."""
    return Path(__file__).with_name("configs") / f"{name}.json"
