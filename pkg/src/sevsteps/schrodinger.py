"""Builders for the stochastic Schroedinger model problems.

Linear: du = -i (Laplace + V) u dt - i u dW with trace-class Q-Wiener noise,
split as F(u) = -i V u and G(u) = -i M_u Q^(1/2).  Nonlinear Lipschitz
variant: du = -i (Laplace u + V u + phi(u)) dt - i psi(u) dW in L^2.

The Fourier noise basis h_n = exp(i n x) is unimodular, so the uniform
sup-norm bound on the basis holds with constant 1 and the Hilbert-Schmidt
norm of M_w Q^(1/2) is sqrt(trace Q) ||w||.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrator import SemilinearProblem
from .noise import NoiseModel
from .spectral import (
    SpectralSpace,
    StateVector,
    _pad,
    _padded_size,
    multiply_coeffs,
    schrodinger_generator,
)


@dataclass(frozen=True)
class PotentialSpec:
    """Potential V given by its samples on the collocation grid."""

    kind: str  # smooth | rough | custom
    samples: np.ndarray
    sup_norm: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", s)
        actual = float(np.max(np.abs(s)))
        if abs(actual - self.sup_norm) > 1e-12 * max(1.0, actual):
            raise ValueError("recorded sup-norm bound does not match the samples")

    def coefficients(self, space: SpectralSpace) -> np.ndarray:
        if self.samples.shape[-1] != space.n_modes:
            raise ValueError("potential sampled on a different grid")
        return space.to_coefficients(self.samples)

    def dealiased_sup(self, space: SpectralSpace) -> float:
        """Sup of the band-limited interpolant on the 3/2 dealiasing grid.

        This is the operator norm bound actually realised by the
        pseudo-spectral multiplication, used for declared Lipschitz constants.
        """
        c = self.coefficients(space)
        p = _padded_size(space.n_modes)
        vals = np.fft.ifft(_pad(c, space.mode_cutoff, p)) * p
        return float(np.max(np.abs(vals)))


def smooth_potential(space: SpectralSpace, amplitudes) -> PotentialSpec:
    """Real potential from a finite Fourier sum.

    amplitudes[j] is the (complex) coefficient of exp(i j x) for j >= 0;
    negative frequencies are filled by conjugation so V is real-valued.
    """
    c = np.zeros(space.n_modes, dtype=np.complex128)
    amplitudes = np.asarray(amplitudes, dtype=np.complex128)
    if amplitudes.size > space.mode_cutoff + 1:
        raise ValueError("too many Fourier modes for this space")
    c[0] = amplitudes[0].real
    for j in range(1, amplitudes.size):
        c[j] = amplitudes[j]
        c[-j] = np.conj(amplitudes[j])
    samples = space.to_physical(c)
    return PotentialSpec("smooth", samples, float(np.max(np.abs(samples))))


def rough_potential(space: SpectralSpace, seed: int, sup_bound: float) -> PotentialSpec:
    """i.i.d. uniform values in [-sup_bound, sup_bound] per grid cell."""
    if sup_bound <= 0:
        raise ValueError("sup_bound must be positive")
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-sup_bound, sup_bound, space.n_modes)
    return PotentialSpec("rough", samples, float(np.max(np.abs(samples))))


def _as_coeffs(u0, space: SpectralSpace):
    if isinstance(u0, StateVector):
        return u0.coeffs
    return u0  # coefficient array or callable sampler


def rough_initial_data(space: SpectralSpace, normalise: bool = True):
    """Sampler for initial data with a flat spectrum (no decay beyond L^2)."""

    def sample(rng):
        c = rng.standard_normal(space.n_modes) + 1j * rng.standard_normal(space.n_modes)
        if normalise:
            c = c / np.sqrt(np.sum(np.abs(c) ** 2))
        return c

    return sample


def build_linear(
    V: PotentialSpec,
    noise: NoiseModel,
    u0,
    sigma: float = 0.0,
    T: float = 1.0,
    space: SpectralSpace | None = None,
) -> SemilinearProblem:
    """Linear Schroedinger problem with potential and multiplicative noise."""
    if space is None:
        space = SpectralSpace((V.samples.shape[-1] - 1) // 2, sigma)
    generator = schrodinger_generator(space)
    if noise.mode_count != space.n_modes:
        raise ValueError("noise model does not share the spatial modes")
    v_coeffs = V.coefficients(space)
    sqrt_lam = noise.sqrt_weights()
    trace = noise.trace

    def drift(t, u):
        return -1j * multiply_coeffs(v_coeffs, u, space)

    def diffusion(t, u, dw):
        return -1j * multiply_coeffs(u, sqrt_lam * dw, space)

    def diffusion_hs(t, u, v):
        return np.sqrt(trace) * np.sqrt(np.sum(np.abs(u - v) ** 2))

    return SemilinearProblem(
        space=space,
        generator=generator,
        drift=drift,
        diffusion=diffusion,
        u0=_as_coeffs(u0, space),
        T=T,
        noise=noise,
        sigma=sigma,
        lipschitz_F=V.dealiased_sup(space) * (1 + 1e-9),
        lipschitz_G=np.sqrt(2.0 * trace),
        diffusion_hs=diffusion_hs,
    )


def build_nonlinear(
    phi,
    psi,
    V: PotentialSpec,
    noise: NoiseModel,
    u0,
    sigma: float = 0.0,
    T: float = 1.0,
    lip_phi: float = 1.0,
    lip_psi: float = 1.0,
    space: SpectralSpace | None = None,
) -> SemilinearProblem:
    """Nonlinear Lipschitz Schroedinger problem; restricted to the L^2 setting."""
    if sigma != 0.0:
        raise ValueError(
            "proper nonlinearities are only supported for sigma = 0: Nemytskij "
            "maps fail to be Lipschitz on H^sigma for sigma > 0"
        )
    if space is None:
        space = SpectralSpace((V.samples.shape[-1] - 1) // 2, 0.0)
    generator = schrodinger_generator(space)
    if noise.mode_count != space.n_modes:
        raise ValueError("noise model does not share the spatial modes")
    v_coeffs = V.coefficients(space)
    sqrt_lam = noise.sqrt_weights()
    trace = noise.trace
    phi = phi if phi is not None else (lambda z: np.zeros_like(z))
    psi = psi if psi is not None else (lambda z: z)
    zero = np.zeros(1, dtype=np.complex128)
    if abs(phi(zero)[0]) > 1e-12 or abs(psi(zero)[0]) > 1e-12:
        raise ValueError("phi and psi must vanish at zero")

    def drift(t, u):
        phys = space.to_physical(u)
        return -1j * (
            multiply_coeffs(v_coeffs, u, space) + space.to_coefficients(phi(phys))
        )

    def diffusion(t, u, dw):
        psi_u = space.to_coefficients(psi(space.to_physical(u)))
        return -1j * multiply_coeffs(psi_u, sqrt_lam * dw, space)

    def diffusion_hs(t, u, v):
        pu = space.to_coefficients(psi(space.to_physical(u)))
        pv = space.to_coefficients(psi(space.to_physical(v)))
        return np.sqrt(trace) * np.sqrt(np.sum(np.abs(pu - pv) ** 2))

    return SemilinearProblem(
        space=space,
        generator=generator,
        drift=drift,
        diffusion=diffusion,
        u0=_as_coeffs(u0, space),
        T=T,
        noise=noise,
        sigma=0.0,
        lipschitz_F=V.dealiased_sup(space) * (1 + 1e-9) + lip_phi,
        lipschitz_G=np.sqrt(2.0 * trace) * lip_psi,
        diffusion_hs=diffusion_hs,
    )
