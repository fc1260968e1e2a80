"""Vectorized numpy/scipy implementations of the hot loops.

Each function computes the same quantity as its counterpart in ``_numba``;
outputs agree to floating-point rounding, not bit-for-bit.
"""
import numpy as np
from scipy.signal import lfilter, upfirdn

_PERIOD15 = 2**15 - 1


def lfsr15(state, n):
    """Bits of the x^15 + x^14 + 1 register, LSB out first.

    Uses the output recurrence ``b[i+15] = b[i] ^ b[i+1]``, which lets 14
    bits be produced per vectorized step, then tiles the single period.
    """
    m = min(n, _PERIOD15)
    b = np.empty(max(m, 15) + 14, dtype=np.uint8)
    b[:15] = (state >> np.arange(15)) & 1
    i = 0
    while i + 15 < m:
        b[i + 15:i + 29] = b[i:i + 14] ^ b[i + 1:i + 15]
        i += 14
    return np.resize(b[:m], n)


def one_pole(x, b0, b1, a1, x_prev=0.0, y_prev=0.0):
    x = np.asarray(x, dtype=np.float64)
    zi = np.array([b1 * x_prev - a1 * y_prev])
    y, _ = lfilter([b0, b1], [1.0, a1], x, zi=zi)
    return y


def _window_sums(v, half):
    """Length-``half`` sliding sums of ``v`` via per-block prefix sums.

    A global cumsum would lose precision far from the origin; splitting into
    blocks keeps the rounding error relative to one block's magnitude.
    """
    nd = len(v) - half + 1
    nb = -(-len(v) // half) + 1
    padded = np.zeros(nb * half)
    padded[:len(v)] = v
    blocks = padded.reshape(nb, half)
    csum = np.cumsum(blocks, axis=1)
    excl = csum - blocks
    totals = csum[:, -1]
    s = totals[:-1, None] - excl[:-1] + excl[1:]
    return s.ravel()[:nd]


def sc_sums(x, half):
    x = np.asarray(x, dtype=np.float64)
    n = len(x) - half
    prod = x[:n] * x[half:]
    p = _window_sums(prod, half)
    r = _window_sums(x[half:] ** 2, half)
    nd = len(x) - 2 * half + 1
    return p[:nd], r[:nd]


def interp_add(sym, h, sps, out):
    sym = np.asarray(sym, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    if len(sym) == 0:
        return
    need = (len(sym) - 1) * sps + len(h)
    if len(out) < need:
        raise ValueError("output buffer too short")
    y = upfirdn(h.real, sym.real, up=sps) - upfirdn(h.imag, sym.imag, up=sps)
    out[:need] += y[:need]


def decim_complex(x, h, sps, start, n):
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.complex128)
    if n == 0:
        return np.zeros(0, dtype=np.complex128)
    pad = (-start) % sps
    xp = np.concatenate([np.zeros(pad), x]) if pad else x
    first = (start + pad) // sps
    yr = upfirdn(h.real, xp, up=1, down=sps)
    yi = upfirdn(h.imag, xp, up=1, down=sps)
    y = np.zeros(n, dtype=np.complex128)
    avail = max(0, min(n, len(yr) - first))
    y[:avail] = yr[first:first + avail] + 1j * yi[first:first + avail]
    return y
