"""Time the numba kernels against the numpy/scipy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]

Kernel timings run both backends in this process. ``--end-to-end`` also
times one ``run_point`` call per backend in a subprocess, since the backend
is fixed at import time by ``MCAP_VLC_DISABLE_NUMBA``.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from mcap_vlc.kernels import _numpy

try:
    from mcap_vlc.kernels import _numba
except ImportError:
    _numba = None


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    sps, taps, n_sym = 20, 801, 20_000
    sym = rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym)
    h = rng.standard_normal(taps) + 1j * rng.standard_normal(taps)
    wave_len = (n_sym - 1) * sps + taps
    x = rng.standard_normal(wave_len)
    sig = rng.standard_normal(1_000_000)

    def interp(impl):
        out = np.zeros(wave_len)
        impl.interp_add(sym, h, sps, out)

    return {
        "lfsr15 (6e6 bits)": lambda impl: impl.lfsr15(0x1D2C, 6_000_000),
        "one_pole (1e6 samples)": lambda impl: impl.one_pole(sig, 0.3, 0.3, -0.4, 0.0, 0.0),
        "sc_sums (1e6, H=1280)": lambda impl: impl.sc_sums(sig, 1280),
        "interp_add (2e4 sym, 801 taps)": interp,
        "decim_complex (2e4 sym, 801 taps)": lambda impl: impl.decim_complex(x, h, sps, taps - 1, n_sym - 40),
    }


E2E = (
    "import time, warnings, json\n"
    "warnings.simplefilter('ignore')\n"
    "from mcap_vlc import kernels, McapConfig, ChannelConfig, run_point\n"
    "cfg = McapConfig(m=5, qam_order=64)\n"
    "run_point(cfg, ChannelConfig(snr_db=20), 5000, 1)\n"
    "t0 = time.perf_counter()\n"
    "r = run_point(cfg, ChannelConfig(snr_db=20), 200_000, 1)\n"
    "print(json.dumps([kernels.BACKEND, time.perf_counter() - t0, r.bit_errors]))\n"
)


def end_to_end():
    rows = []
    for disable in ("0", "1"):
        env = dict(os.environ, MCAP_VLC_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()

    print(f"{'kernel':36s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speed-up':>9s}")
    for name, fn in cases().items():
        t_np = best_of(lambda: fn(_numpy), args.repeat)
        if _numba is None:
            print(f"{name:36s} {t_np * 1e3:11.2f} {'n/a':>11s} {'':>9s}")
            continue
        t_nb = best_of(lambda: fn(_numba), args.repeat)
        print(f"{name:36s} {t_np * 1e3:11.2f} {t_nb * 1e3:11.2f} {t_np / t_nb:8.1f}x")

    if args.end_to_end:
        print("\nrun_point, m=5 64-QAM, 2e5 symbols")
        for backend, seconds, errors in end_to_end():
            print(f"  {backend:6s} {seconds:7.2f} s  ({errors} bit errors)")


if __name__ == "__main__":
    main()
