"""Hot inner loops with a numba backend and a numpy/scipy fallback.

The backend is chosen once at import time. Set ``MCAP_VLC_DISABLE_NUMBA=1``
to force the fallback path (useful for debugging or when numba is not
installed). Both backends are importable directly as
:mod:`mcap_vlc.kernels._numba` and :mod:`mcap_vlc.kernels._numpy` so they
can be cross-checked and benchmarked.
"""
import importlib
import os

from . import _numpy

_DISABLE = os.environ.get("MCAP_VLC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

_numba = None
if not _DISABLE:
    try:
        _numba = importlib.import_module(".kernels._numba", "mcap_vlc")
    except ImportError:  # numba missing
        _numba = None

BACKEND = "numba" if _numba is not None else "numpy"
_impl = _numba if _numba is not None else _numpy

lfsr15 = _impl.lfsr15
one_pole = _impl.one_pole
sc_sums = _impl.sc_sums
interp_add = _impl.interp_add
decim_complex = _impl.decim_complex

__all__ = ["BACKEND", "lfsr15", "one_pole", "sc_sums", "interp_add", "decim_complex"]
