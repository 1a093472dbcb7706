"""Coupled Q-Wiener increment sampling on a fine grid with exact coarsening.

Increments are standardised (unit covariance per mode); the trace-class
weights sqrt(lambda_n) are applied where the diffusion operator acts.  The
generator is counter-based (Philox keyed by seed and path index), so paths
are reproducible independently of scheduling and can be generated in
parallel across path indices.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_MAGIC = b"SEVNPATH"


@dataclass(frozen=True)
class NoiseModel:
    """Trace-class covariance Q = sum lambda_n (h_n (x) h_n) on Fourier modes."""

    eigenvalues: np.ndarray
    field: str = "complex"

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        if np.any(lam < 0):
            raise ValueError("covariance eigenvalues must be nonnegative")
        if self.field not in ("real", "complex"):
            raise ValueError("field must be 'real' or 'complex'")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def mode_count(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))

    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)


def decay_noise_model(frequencies: np.ndarray, exponent: float = 1.0, field: str = "complex") -> NoiseModel:
    """lambda_n = (1 + n^2)^(-exponent), summable on the 1-D torus for exponent > 1/2."""
    n = np.asarray(frequencies, dtype=np.float64)
    return NoiseModel((1.0 + n**2) ** (-exponent), field)


@dataclass(frozen=True)
class NoisePath:
    """Standardised Wiener increments, one row per step, one column per mode."""

    increments: np.ndarray
    k: float
    seed: int
    path_index: int
    field: str = "complex"

    @property
    def steps(self) -> int:
        return self.increments.shape[0]

    @property
    def modes(self) -> int:
        return self.increments.shape[1]


def _steps_of(T: float, k: float) -> int:
    steps = round(T / k)
    if abs(steps * k - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T/k must be an integer")
    return steps


def sample_path(noise: NoiseModel, T: float, k_fine: float, seed: int, path_index: int) -> NoisePath:
    """Draw the fine-grid increments for one path.

    Real field: i.i.d. N(0, k) per mode and step.  Complex field: independent
    real and imaginary parts with variance k/2 each, so E|dW|^2 = k.
    """
    if k_fine <= 0:
        raise ValueError("k_fine must be positive")
    steps = _steps_of(T, k_fine)
    rng = np.random.Generator(np.random.Philox(key=[seed, path_index]))
    shape = (steps, noise.mode_count)
    if noise.field == "real":
        inc = rng.standard_normal(shape) * np.sqrt(k_fine)
        inc = inc.astype(np.complex128)
    else:
        z = rng.standard_normal((steps, noise.mode_count, 2))
        inc = (z[..., 0] + 1j * z[..., 1]) * np.sqrt(k_fine / 2.0)
    return NoisePath(inc, k_fine, seed, path_index, noise.field)


def coarsen(path: NoisePath, factor: int) -> NoisePath:
    """Sum disjoint blocks of `factor` fine increments; exact coupling."""
    if factor < 1 or path.steps % factor != 0:
        raise ValueError("steps must be divisible by the coarsening factor")
    if factor == 1:
        return path
    inc = path.increments
    # reduce dyadic factors by repeated pair sums so that coarsening composes
    # bitwise-exactly: coarsen(coarsen(p, 2), 2) == coarsen(p, 4)
    remaining = factor
    while remaining % 2 == 0:
        inc = inc[0::2] + inc[1::2]
        remaining //= 2
    if remaining > 1:
        inc = inc.reshape(inc.shape[0] // remaining, remaining, path.modes).sum(axis=1)
    return NoisePath(inc, path.k * factor, path.seed, path.path_index, path.field)


def q_wiener_norm_check(noise: NoiseModel, paths, t: float) -> float:
    """Empirical E||W(t)||^2 over the given paths; equals t * trace(Q) in law."""
    total = 0.0
    sqw = noise.sqrt_weights()
    for path in paths:
        j = round(t / path.k)
        if abs(j * path.k - t) > 1e-9 * max(t, 1.0):
            raise ValueError("t must be a fine grid point")
        w = (sqw * path.increments[:j]).sum(axis=0)
        total += float(np.sum(np.abs(w) ** 2))
    return total / len(paths)


def dump_path(path: NoisePath, fh) -> None:
    """Binary dump: fixed header, then little-endian float64 payload, step-major.

    Complex increments are stored as interleaved (re, im) pairs.
    """
    fh.write(_MAGIC)
    fh.write(
        struct.pack(
            "<qqdqqB",
            path.seed,
            path.path_index,
            path.k,
            path.steps,
            path.modes,
            1 if path.field == "complex" else 0,
        )
    )
    inc = np.ascontiguousarray(path.increments)
    buf = np.empty((path.steps, path.modes, 2))
    buf[..., 0] = inc.real
    buf[..., 1] = inc.imag
    fh.write(buf.astype("<f8").tobytes())


def load_path(fh) -> NoisePath:
    if fh.read(8) != _MAGIC:
        raise ValueError("not a noise path dump")
    seed, path_index, k, steps, modes, is_complex = struct.unpack("<qqdqqB", fh.read(41))
    raw = np.frombuffer(fh.read(steps * modes * 16), dtype="<f8").reshape(steps, modes, 2)
    inc = raw[..., 0] + 1j * raw[..., 1]
    return NoisePath(inc, k, seed, path_index, "complex" if is_complex else "real")
