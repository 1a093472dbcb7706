"""Benchmark the diagonal-convolution maximum kernel: numba vs numpy.

The numba path is selected by default when numba imports; setting
SEVSTEPS_NO_NUMBA=1 forces the pure-numpy fallback.  This script times both
implementations directly (bypassing the env switch) on the workload used by
the maximal-inequality suite and reports the speedup.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from sevsteps import _kernels


def _workload(n_paths, n_steps, n_modes, seed=0):
    rng = np.random.default_rng(seed)
    mu = -1j * np.fft.fftfreq(n_modes, 1.0 / n_modes) ** 2
    k = 1.0 / n_steps
    r = 1.0 / (1.0 - k * mu)  # implicit Euler multipliers, contractive
    q = np.tile(
        ((1.0 + np.abs(np.fft.fftfreq(n_modes, 1.0 / n_modes)) ** 2) ** -1.0).astype(
            np.complex128
        ),
        (n_steps, 1),
    )
    dw = rng.standard_normal((n_paths, n_steps, n_modes)) * np.sqrt(k)
    return r, q, dw


def _time(fn, *args, repeats=5):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    cases = [(200, 64, 65), (500, 128, 65), (500, 256, 129)]
    print(f"numba available: {_kernels.HAVE_NUMBA}")
    print(f"{'paths x steps x modes':>24} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for n_paths, n_steps, n_modes in cases:
        r, q, dw = _workload(n_paths, n_steps, n_modes)
        w = np.ones(n_modes)
        t_np, out_np = _time(_kernels._diag_convolution_max_numpy, r, q, dw, w)
        if _kernels.HAVE_NUMBA:
            # warm-up compiles outside the timed region
            _kernels._diag_convolution_max_numba(r, q, dw[:2], w)
            t_nb, out_nb = _time(_kernels._diag_convolution_max_numba, r, q, dw, w)
            rel = np.max(np.abs(out_np - out_nb) / np.maximum(np.abs(out_np), 1e-30))
            assert rel < 1e-10, f"implementations disagree: rel err {rel:.2e}"
            speed = f"{t_np / t_nb:8.2f}x"
            nb_ms = f"{t_nb * 1e3:12.2f}"
        else:
            speed, nb_ms = "     n/a", "         n/a"
        label = f"{n_paths} x {n_steps} x {n_modes}"
        print(f"{label:>24} {t_np * 1e3:12.2f} {nb_ms} {speed}")


if __name__ == "__main__":
    main()
