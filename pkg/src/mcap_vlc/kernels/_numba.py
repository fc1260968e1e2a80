"""numba implementations of the hot loops. Signatures mirror ``_numpy``."""
import numpy as np
from numba import njit


@njit(cache=True)
def _lfsr15(state, n):
    out = np.empty(n, dtype=np.uint8)
    period = 32767
    s = state
    for i in range(min(n, period)):
        out[i] = s & 1
        fb = (s ^ (s >> 1)) & 1
        s = (s >> 1) | (fb << 14)
    # maximal-length sequence: the rest repeats the first period
    for i in range(period, n):
        out[i] = out[i - period]
    return out


def lfsr15(state, n):
    return _lfsr15(np.int64(state), np.int64(n))


@njit(cache=True)
def _one_pole(x, b0, b1, a1, x_prev, y_prev):
    y = np.empty_like(x)
    xp = x_prev
    yp = y_prev
    for i in range(x.shape[0]):
        yi = b0 * x[i] + b1 * xp - a1 * yp
        y[i] = yi
        xp = x[i]
        yp = yi
    return y


def one_pole(x, b0, b1, a1, x_prev=0.0, y_prev=0.0):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _one_pole(x, float(b0), float(b1), float(a1), float(x_prev), float(y_prev))


@njit(cache=True)
def _sc_sums(x, half):
    nd = x.shape[0] - 2 * half + 1
    p = np.empty(nd)
    r = np.empty(nd)
    ps = 0.0
    rs = 0.0
    for d in range(nd):
        if d % half == 0:
            # periodic exact recompute bounds running-sum drift
            ps = 0.0
            rs = 0.0
            for k in range(half):
                a = x[d + k + half]
                ps += x[d + k] * a
                rs += a * a
        else:
            a_out = x[d - 1 + half]
            a_in = x[d + 2 * half - 1]
            ps += x[d + half - 1] * a_in - x[d - 1] * a_out
            rs += a_in * a_in - a_out * a_out
        p[d] = ps
        r[d] = rs
    return p, r


def sc_sums(x, half):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _sc_sums(x, np.int64(half))


@njit(cache=True, fastmath=True)
def _interp_add(sym_re, sym_im, h_re, h_im, sps, out):
    ntap = h_re.shape[0]
    for k in range(sym_re.shape[0]):
        a = sym_re[k]
        b = sym_im[k]
        if a == 0.0 and b == 0.0:
            continue
        base = k * sps
        for j in range(ntap):
            out[base + j] += a * h_re[j] - b * h_im[j]


def interp_add(sym, h, sps, out):
    sym = np.asarray(sym, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    need = (len(sym) - 1) * sps + len(h)
    if len(sym) and len(out) < need:
        raise ValueError("output buffer too short")
    _interp_add(np.ascontiguousarray(sym.real), np.ascontiguousarray(sym.imag),
                np.ascontiguousarray(h.real), np.ascontiguousarray(h.imag), np.int64(sps), out)


@njit(cache=True, fastmath=True)
def _decim(x, h_re, h_im, sps, start, n):
    yr = np.zeros(n)
    yi = np.zeros(n)
    nx = x.shape[0]
    ntap = h_re.shape[0]
    for k in range(n):
        t = start + k * sps
        j0 = max(0, t - nx + 1)
        j1 = min(ntap, t + 1)
        ar = 0.0
        ai = 0.0
        for j in range(j0, j1):
            v = x[t - j]
            ar += h_re[j] * v
            ai += h_im[j] * v
        yr[k] = ar
        yi[k] = ai
    return yr, yi


def decim_complex(x, h, sps, start, n):
    x = np.ascontiguousarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.complex128)
    yr, yi = _decim(x, np.ascontiguousarray(h.real), np.ascontiguousarray(h.imag),
                    np.int64(sps), np.int64(start), np.int64(n))
    return yr + 1j * yi
