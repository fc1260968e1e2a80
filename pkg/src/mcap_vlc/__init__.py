"""Multi-band CAP modem, simulated VLC link and BER harness."""
from .channel import ChannelConfig, apply_channel
from .dsp import Psd, Taps, Waveform, design_srrc, welch_psd
from .errors import DegenerateChannelError, FrameError, ParameterError
from .harness import BerReport, SweepGrid, SweepPoint, prbs, run_point, sweep
from .kernels import BACKEND
from .mcap import McapConfig, bit_rate, build_filter_bank, receive, transmit
from .qam import ConstellationSpec, demap_symbols, map_bits

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BerReport",
    "ChannelConfig",
    "ConstellationSpec",
    "DegenerateChannelError",
    "FrameError",
    "McapConfig",
    "ParameterError",
    "Psd",
    "SweepGrid",
    "SweepPoint",
    "Taps",
    "Waveform",
    "apply_channel",
    "bit_rate",
    "build_filter_bank",
    "demap_symbols",
    "design_srrc",
    "map_bits",
    "prbs",
    "receive",
    "run_point",
    "sweep",
    "transmit",
    "welch_psd",
]
