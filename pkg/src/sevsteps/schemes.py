"""Rational one-step schemes R_k = r(-kA) and their certification.

Built-in schemes: exponential Euler (the splitting scheme, r(z) = exp(-z)),
implicit Euler (r(z) = 1/(1+z)) and Crank-Nicolson (r(z) = (2-z)/(2+z)).
Custom rational symbols are accepted when pole-free on the closed right
half-plane and certified contractive on the imaginary axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import DiagonalGenerator, DiagonalOperator, StateVector, semigroup_at

EXPONENTIAL_EULER = "exponential_euler"
IMPLICIT_EULER = "implicit_euler"
CRANK_NICOLSON = "crank_nicolson"

_BUILTIN = (EXPONENTIAL_EULER, IMPLICIT_EULER, CRANK_NICOLSON)

# boundary screen for custom symbols: 1e4 points on Re z = 0 with |z| <= 1e6
_SCREEN_POINTS = 10_000
_SCREEN_RADIUS = 1e6


@dataclass(frozen=True)
class RationalScheme:
    """Time discretisation scheme given by its symbol on Re z >= 0."""

    kind: str
    numerator: tuple | None = None
    denominator: tuple | None = None

    def __post_init__(self):
        if self.kind in _BUILTIN:
            return
        if self.kind != "custom":
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.numerator is None or self.denominator is None:
            raise ValueError("custom schemes need numerator and denominator coefficients")
        poles = np.roots(self.denominator)
        if np.any(poles.real >= -1e-12):
            raise ValueError("custom rational symbol has a pole in the closed right half-plane")

    def is_contractive_symbol(self) -> bool:
        """Sampled certification |r(z)| <= 1 on the imaginary-axis boundary."""
        y = np.concatenate(
            [[0.0], np.geomspace(1e-8, _SCREEN_RADIUS, _SCREEN_POINTS // 2)]
        )
        z = 1j * np.concatenate([y, -y])
        return bool(np.max(np.abs(symbol(self, z))) <= 1.0 + 1e-12)


def exponential_euler() -> RationalScheme:
    return RationalScheme(EXPONENTIAL_EULER)


def implicit_euler() -> RationalScheme:
    return RationalScheme(IMPLICIT_EULER)


def crank_nicolson() -> RationalScheme:
    return RationalScheme(CRANK_NICOLSON)


def symbol(scheme: RationalScheme, z):
    """Evaluate the symbol r at points of the closed right half-plane."""
    z = np.asarray(z, dtype=np.complex128)
    if scheme.kind == EXPONENTIAL_EULER:
        return np.exp(-z)
    if scheme.kind == IMPLICIT_EULER:
        return 1.0 / (1.0 + z)
    if scheme.kind == CRANK_NICOLSON:
        return (2.0 - z) / (2.0 + z)
    num = np.polyval(scheme.numerator, z)
    den = np.polyval(scheme.denominator, z)
    return num / den


def build_Rk(scheme: RationalScheme, generator: DiagonalGenerator, k: float) -> DiagonalOperator:
    """Diagonal multiplier r(-k mu_n) per mode."""
    if k <= 0:
        raise ValueError("step size must be positive")
    return DiagonalOperator(symbol(scheme, -k * generator.eigenvalues))


def contractivity_margin(scheme: RationalScheme, generator: DiagonalGenerator, k: float) -> float:
    """max_n |r(-k mu_n)|; acceptable iff <= 1 + 1e-12.

    The spectral certification is exact for diagonal generators, in the L^2
    norm and in any diagonal weighted norm (graph norm included) alike.
    """
    return build_Rk(scheme, generator, k).operator_norm()


def is_contractive(scheme: RationalScheme, generator: DiagonalGenerator, k: float) -> bool:
    return contractivity_margin(scheme, generator, k) <= 1.0 + 1e-12


@dataclass(frozen=True)
class OrderFit:
    """Result of a deterministic order measurement."""

    step_sizes: np.ndarray
    errors: np.ndarray
    slope: float | None
    exact: bool


def deterministic_order(
    scheme: RationalScheme,
    generator: DiagonalGenerator,
    u: StateVector,
    k_grid,
    T: float,
    floor: float = 1e-12,
) -> OrderFit:
    """Measure max_j ||(S(jk) - R_k^j) u|| over the grid and fit a log-log slope.

    Points within 10x machine epsilon of zero (relative to ||u||) are dropped
    from the fit to avoid floor contamination; if every error sits at the
    floor the scheme is reported as exact.
    """
    k_grid = np.asarray(sorted(k_grid, reverse=True), dtype=np.float64)
    if k_grid.size < 3:
        raise ValueError("need at least 3 step sizes")
    errors = np.empty_like(k_grid)
    for i, k in enumerate(k_grid):
        nk = round(T / k)
        if abs(nk * k - T) > 1e-9 * T:
            raise ValueError("T/k must be an integer for every step size")
        s_mult = np.exp(k * generator.eigenvalues)
        r_mult = symbol(scheme, -k * generator.eigenvalues)
        # cumulative powers over j = 1..N_k, modes on the last axis
        s_pows = np.cumprod(np.broadcast_to(s_mult, (nk, s_mult.size)), axis=0)
        r_pows = np.cumprod(np.broadcast_to(r_mult, (nk, r_mult.size)), axis=0)
        diff = (s_pows - r_pows) * u.coeffs
        errors[i] = np.max(np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1)))

    unorm = float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2)))
    if np.all(errors <= floor * max(unorm, 1.0)):
        return OrderFit(k_grid, errors, None, True)
    eps_floor = 10 * np.finfo(np.float64).eps * max(unorm, 1.0)
    keep = errors > eps_floor
    slope = float(np.polyfit(np.log(k_grid[keep]), np.log(errors[keep]), 1)[0])
    return OrderFit(k_grid, errors, slope, False)
