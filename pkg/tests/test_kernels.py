"""Both kernel backends against brute-force reference loops and each other."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from mcap_vlc import kernels
from mcap_vlc.kernels import _numpy

try:
    from mcap_vlc.kernels import _numba
except ImportError:  # pragma: no cover
    _numba = None

BACKENDS = [pytest.param(_numpy, id="numpy")]
if _numba is not None:
    BACKENDS.append(pytest.param(_numba, id="numba"))


def ref_lfsr15(state, n):
    out = []
    for _ in range(n):
        out.append(state & 1)
        fb = (state ^ (state >> 1)) & 1
        state = (state >> 1) | (fb << 14)
    return np.array(out, dtype=np.uint8)


def ref_one_pole(x, b0, b1, a1, x_prev, y_prev):
    y = np.empty_like(x)
    for i, xi in enumerate(x):
        y_prev = b0 * xi + b1 * x_prev - a1 * y_prev
        x_prev = xi
        y[i] = y_prev
    return y


def ref_sc_sums(x, h):
    n = len(x) - 2 * h + 1
    p = np.array([np.dot(x[d:d + h], x[d + h:d + 2 * h]) for d in range(n)])
    r = np.array([np.dot(x[d + h:d + 2 * h], x[d + h:d + 2 * h]) for d in range(n)])
    return p, r


def ref_interp(sym, h, sps, length):
    out = np.zeros(length)
    for k, s in enumerate(sym):
        seg = (s * h).real
        out[k * sps:k * sps + len(h)] += seg
    return out


def ref_decim(x, h, sps, start, n):
    y = np.zeros(n, dtype=np.complex128)
    for k in range(n):
        c = start + k * sps
        for j in range(len(h)):
            i = c - j
            if 0 <= i < len(x):
                y[k] += h[j] * x[i]
    return y


def test_backend_flag_is_consistent():
    assert kernels.BACKEND in ("numba", "numpy")
    if kernels.BACKEND == "numpy":
        assert kernels.lfsr15 is _numpy.lfsr15


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("state", [1, 0x7FFF, 0x1234])
def test_lfsr_matches_reference(impl, state):
    assert_array_equal(impl.lfsr15(state, 500), ref_lfsr15(state, 500))


@pytest.mark.parametrize("impl", BACKENDS)
def test_lfsr_long_run_matches_reference(impl):
    n = 40_000
    assert_array_equal(impl.lfsr15(77, n), ref_lfsr15(77, n))


@pytest.mark.parametrize("impl", BACKENDS)
def test_one_pole_matches_reference(impl, rng):
    x = rng.standard_normal(300)
    got = impl.one_pole(x, 0.2, 0.2, -0.6, 0.3, -0.1)
    assert_allclose(got, ref_one_pole(x, 0.2, 0.2, -0.6, 0.3, -0.1), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("h", [1, 7, 64])
def test_sc_sums_matches_reference(impl, rng, h):
    x = rng.standard_normal(400)
    p, r = impl.sc_sums(x, h)
    pr, rr = ref_sc_sums(x, h)
    assert_allclose(p, pr, rtol=1e-10, atol=1e-10)
    assert_allclose(r, rr, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("impl", BACKENDS)
def test_interp_add_matches_reference(impl, rng):
    sym = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    h = rng.standard_normal(13) + 1j * rng.standard_normal(13)
    length = 19 * 4 + 13 + 5
    out = np.zeros(length)
    impl.interp_add(sym, h, 4, out)
    assert_allclose(out, ref_interp(sym, h, 4, length), atol=1e-12)


@pytest.mark.parametrize("impl", BACKENDS)
def test_interp_add_accumulates(impl, rng):
    sym = rng.standard_normal(5).astype(np.complex128)
    h = rng.standard_normal(9).astype(np.complex128)
    out = np.ones(4 * 4 + 9)
    impl.interp_add(sym, h, 4, out)
    assert_allclose(out, 1.0 + ref_interp(sym, h, 4, len(out)), atol=1e-12)


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("start", [0, 3, 12, 50])
def test_decim_matches_reference(impl, rng, start):
    x = rng.standard_normal(90)
    h = rng.standard_normal(11) + 1j * rng.standard_normal(11)
    assert_allclose(impl.decim_complex(x, h, 5, start, 12), ref_decim(x, h, 5, start, 12), atol=1e-12)


@pytest.mark.skipif(_numba is None, reason="numba not installed")
@given(
    n=st.integers(20, 200),
    sps=st.integers(1, 8),
    taps=st.integers(1, 25),
    seed=st.integers(0, 2**32 - 1),
)
def test_backends_agree_on_filtering(n, sps, taps, seed):
    r = np.random.default_rng(seed)
    sym = r.standard_normal(n) + 1j * r.standard_normal(n)
    h = r.standard_normal(taps) + 1j * r.standard_normal(taps)
    length = (n - 1) * sps + taps
    a = np.zeros(length)
    b = np.zeros(length)
    _numba.interp_add(sym, h, sps, a)
    _numpy.interp_add(sym, h, sps, b)
    assert_allclose(a, b, atol=1e-10)
    start = int(r.integers(0, length))
    k = max(1, (length - start) // sps)
    assert_allclose(_numba.decim_complex(a, h, sps, start, k), _numpy.decim_complex(a, h, sps, start, k),
                    atol=1e-9)


@pytest.mark.skipif(_numba is None, reason="numba not installed")
@given(h=st.integers(1, 50), extra=st.integers(0, 300), seed=st.integers(0, 2**32 - 1))
def test_backends_agree_on_sc_sums(h, extra, seed):
    x = np.random.default_rng(seed).standard_normal(2 * h + extra) * 3.0
    pa, ra = _numba.sc_sums(x, h)
    pb, rb = _numpy.sc_sums(x, h)
    assert_allclose(pa, pb, rtol=1e-9, atol=1e-9)
    assert_allclose(ra, rb, rtol=1e-9, atol=1e-9)


def test_env_flag_selects_numpy_fallback():
    import json
    import os
    import subprocess
    import sys

    from mcap_vlc.harness import prbs
    from mcap_vlc.mcap import McapConfig, build_filter_bank, transmit

    code = (
        "import json, mcap_vlc.kernels as k\n"
        "from mcap_vlc.harness import prbs\n"
        "from mcap_vlc.mcap import McapConfig, build_filter_bank, transmit\n"
        "cfg = McapConfig(m=3, qam_order=16)\n"
        "w = transmit(prbs(4, 3 * 4 * 50), cfg, build_filter_bank(cfg))\n"
        "print(json.dumps([k.BACKEND, w.samples[::37].tolist()]))\n"
    )
    env = dict(os.environ, MCAP_VLC_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, samples = json.loads(out.stdout)
    assert backend == "numpy"
    cfg = McapConfig(m=3, qam_order=16)
    here = transmit(prbs(4, 3 * 4 * 50), cfg, build_filter_bank(cfg)).samples[::37]
    assert_allclose(samples, here, atol=1e-12)
