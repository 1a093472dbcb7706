"""Hot inner loops with numba-compiled and pure-numpy implementations.

The numba path is used by default; set SEVSTEPS_NO_NUMBA=1 to force the
numpy fallback (benchmarks/bench_kernels.py compares the two).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("SEVSTEPS_NO_NUMBA", "") not in ("", "0")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _diag_convolution_max_numpy(r_mult, q, dw, weights):
    n_paths, n_steps, _ = dw.shape
    state = np.zeros((n_paths, r_mult.size), dtype=np.complex128)
    best = np.zeros(n_paths)
    for j in range(n_steps):
        state = r_mult * (state + q[j] * dw[:, j, :])
        norms = np.sqrt(np.sum(np.abs(weights * state) ** 2, axis=-1))
        best = np.maximum(best, norms)
    return best


if HAVE_NUMBA:

    @njit(cache=True)
    def _diag_convolution_max_numba(r_mult, q, dw, weights):  # pragma: no cover
        n_paths, n_steps, n_modes = dw.shape
        best = np.zeros(n_paths)
        for m in range(n_paths):
            state = np.zeros(n_modes, dtype=np.complex128)
            top = 0.0
            for j in range(n_steps):
                acc = 0.0
                for n in range(n_modes):
                    state[n] = r_mult[n] * (state[n] + q[j, n] * dw[m, j, n])
                    w = weights[n] * state[n]
                    acc += w.real * w.real + w.imag * w.imag
                nrm = np.sqrt(acc)
                if nrm > top:
                    top = nrm
            best[m] = top
        return best


def diag_convolution_max(r_mult, q, dw, weights=None):
    """Per-path maximum norm of the discrete convolution sum_i R^(j-i) Q_i dW_(i+1).

    Evaluated through the recursion M_j = R (M_(j-1) + Q_(j-1) dW_j), which
    also covers the left-point Riemann approximation of the stochastic
    convolution when R carries the semigroup multipliers.

    r_mult: (modes,) complex multipliers of R_k.
    q: (steps, modes) deterministic diagonal integrand per step.
    dw: (paths, steps, modes) noise increments.
    weights: optional (modes,) norm weights, default all-ones (L^2).
    Returns (paths,) array of max_j ||M_j||.
    """
    r_mult = np.ascontiguousarray(r_mult, dtype=np.complex128)
    q = np.ascontiguousarray(q, dtype=np.complex128)
    dw = np.ascontiguousarray(dw, dtype=np.complex128)
    if weights is None:
        weights = np.ones(r_mult.size)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if HAVE_NUMBA:
        return _diag_convolution_max_numba(r_mult, q, dw, weights)
    return _diag_convolution_max_numpy(r_mult, q, dw, weights)
