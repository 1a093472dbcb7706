"""Spectral representation of states and diagonal operators on the 1-D torus.

States live in H^sigma([0, 2pi)) truncated to Fourier frequencies |n| <= K.
The generator A is diagonal on this basis, so the semigroup, resolvents and
fractional powers are exact multiplier operators.  All products of fields use
3/2 zero-padding to remove quadratic aliasing.

Coefficient arrays follow numpy FFT ordering [0, 1, ..., K, -K, ..., -1] and
are normalised so that u(x) = sum_n c_n exp(i n x); Parseval then reads
sum |c_n|^2 = mean_j |u(x_j)|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpectralSpace:
    """Truncated Fourier space on [0, 2pi) with ambient Sobolev index sigma."""

    mode_cutoff: int
    sigma: float = 0.0

    def __post_init__(self):
        if self.mode_cutoff < 1:
            raise ValueError("mode_cutoff must be a positive integer")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @property
    def n_modes(self) -> int:
        return 2 * self.mode_cutoff + 1

    @property
    def frequencies(self) -> np.ndarray:
        m = self.n_modes
        return (np.fft.fftfreq(m) * m).astype(np.int64)

    @property
    def grid_points(self) -> np.ndarray:
        m = self.n_modes
        return 2.0 * np.pi * np.arange(m) / m

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        """Evaluate u(x) = sum c_n exp(i n x) on the collocation grid."""
        return np.fft.ifft(coeffs, axis=-1) * self.n_modes

    def to_coefficients(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fft(values, axis=-1) / self.n_modes

    def sobolev_weights(self, sigma: float) -> np.ndarray:
        n = self.frequencies
        return (1.0 + n.astype(np.float64) ** 2) ** (sigma / 2.0)


@dataclass(frozen=True)
class StateVector:
    """Element of the truncated space, held as complex spectral coefficients."""

    coeffs: np.ndarray
    space: SpectralSpace

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape[-1] != self.space.n_modes:
            raise ValueError("coefficient count does not match the space")
        object.__setattr__(self, "coeffs", c)

    def norm(self, sigma: float | None = None) -> float:
        return norm_sigma(self, self.space.sigma if sigma is None else sigma)

    def physical(self) -> np.ndarray:
        return self.space.to_physical(self.coeffs)


@dataclass(frozen=True)
class DiagonalGenerator:
    """Generator A acting as multiplication by mu_n on each Fourier mode.

    Requires Re mu_n <= 0 so that A generates a contraction semigroup.
    """

    eigenvalues: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.eigenvalues, dtype=np.complex128)
        if np.any(mu.real > 1e-14):
            raise ValueError("generator eigenvalues must satisfy Re mu <= 0")
        object.__setattr__(self, "eigenvalues", mu)

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.eigenvalues * coeffs


def schrodinger_generator(space: SpectralSpace) -> DiagonalGenerator:
    """A = -i Laplace on the torus: mu_n = -i n^2."""
    n = space.frequencies.astype(np.float64)
    return DiagonalGenerator(-1j * n**2)


@dataclass(frozen=True)
class DiagonalOperator:
    """Bounded operator acting as per-mode multiplication."""

    multipliers: np.ndarray

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.multipliers * coeffs

    def __call__(self, u: StateVector) -> StateVector:
        return StateVector(self.multipliers * u.coeffs, u.space)

    def operator_norm(self) -> float:
        return float(np.max(np.abs(self.multipliers)))


@dataclass(frozen=True)
class GraphNorm:
    """Norm of D(A): (||u||^2 + ||A u||^2)^(1/2)."""

    generator: DiagonalGenerator

    def __call__(self, coeffs: np.ndarray) -> float:
        au = self.generator.apply(coeffs)
        return float(np.sqrt(np.sum(np.abs(coeffs) ** 2) + np.sum(np.abs(au) ** 2)))


def semigroup_at(generator: DiagonalGenerator, t: float) -> DiagonalOperator:
    """S(t) = exp(t A), a contraction for t >= 0."""
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    return DiagonalOperator(np.exp(t * generator.eigenvalues))


def resolvent(generator: DiagonalGenerator, m: float) -> DiagonalOperator:
    """R(m, A) = (m - A)^{-1} for m > 0; operator norm at most 1/m."""
    if m <= 0:
        raise ValueError("resolvent parameter must be positive")
    return DiagonalOperator(1.0 / (m - generator.eigenvalues))


def fractional_power_neg_A(generator: DiagonalGenerator, beta: float) -> DiagonalOperator:
    """(-A)^beta on the principal branch; the zero eigenvalue maps to 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    neg = -generator.eigenvalues
    mult = np.zeros_like(neg)
    nz = neg != 0
    mult[nz] = np.exp(beta * np.log(neg[nz]))
    return DiagonalOperator(mult)


def norm_sigma(u: StateVector, sigma: float) -> float:
    """H^sigma norm (sum (1+n^2)^sigma |c_n|^2)^(1/2); sigma = 0 is L^2."""
    w = u.space.sobolev_weights(sigma)
    return float(np.sqrt(np.sum(np.abs(w * u.coeffs) ** 2)))


def _padded_size(n_modes: int) -> int:
    # 3/2 rule: P >= 3K + 1 suffices to dealias quadratic products
    return int(np.ceil(1.5 * n_modes))


def _pad(coeffs: np.ndarray, cutoff: int, padded: int) -> np.ndarray:
    out_shape = coeffs.shape[:-1] + (padded,)
    out = np.zeros(out_shape, dtype=np.complex128)
    out[..., : cutoff + 1] = coeffs[..., : cutoff + 1]
    out[..., padded - cutoff :] = coeffs[..., -cutoff:]
    return out


def _truncate(coeffs: np.ndarray, cutoff: int, n_modes: int) -> np.ndarray:
    out_shape = coeffs.shape[:-1] + (n_modes,)
    out = np.zeros(out_shape, dtype=np.complex128)
    out[..., : cutoff + 1] = coeffs[..., : cutoff + 1]
    out[..., -cutoff:] = coeffs[..., coeffs.shape[-1] - cutoff :]
    return out


def multiply_coeffs(a: np.ndarray, b: np.ndarray, space: SpectralSpace) -> np.ndarray:
    """Dealiased spectral coefficients of the product of two fields.

    Broadcasts over leading axes; the last axis is the mode axis.
    """
    k, m = space.mode_cutoff, space.n_modes
    p = _padded_size(m)
    pa = np.fft.ifft(_pad(a, k, p), axis=-1) * p
    pb = np.fft.ifft(_pad(b, k, p), axis=-1) * p
    prod = np.fft.fft(pa * pb, axis=-1) / p
    return _truncate(prod, k, m)


def pointwise_multiply(a: StateVector, b: StateVector) -> StateVector:
    if a.space != b.space:
        raise ValueError("operands live in different spectral spaces")
    return StateVector(multiply_coeffs(a.coeffs, b.coeffs, a.space), a.space)


def nemytskij_coeffs(phi, coeffs: np.ndarray, space: SpectralSpace) -> np.ndarray:
    """Apply the scalar map phi on the collocation grid and transform back."""
    return space.to_coefficients(phi(space.to_physical(coeffs)))


def nemytskij(phi, u: StateVector) -> StateVector:
    return StateVector(nemytskij_coeffs(phi, u.coeffs, u.space), u.space)


def smooth_data(
    space: SpectralSpace,
    decay: float,
    seed: int | None = None,
    normalise: bool = True,
) -> StateVector:
    """State with coefficients decaying like (1+|n|)^(-decay).

    With seed given, phases (and mild amplitude jitter) are randomised;
    otherwise the coefficients are real positive.  decay > beta*2 + 1/2 puts
    the state in D((-A)^beta) for the Schroedinger generator with margin.
    """
    n = np.abs(space.frequencies).astype(np.float64)
    amp = (1.0 + n) ** (-decay)
    if seed is not None:
        rng = np.random.default_rng(seed)
        phase = np.exp(2j * np.pi * rng.random(space.n_modes))
        amp = amp * (0.5 + rng.random(space.n_modes)) * phase
    c = amp.astype(np.complex128)
    if normalise:
        c = c / np.sqrt(np.sum(np.abs(c) ** 2))
    return StateVector(c, space)
