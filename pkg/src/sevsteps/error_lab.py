"""Strong-error estimators, rate fits and empirical inequality checkers.

Two error functionals are estimated from coupled trajectories: the uniform
strong error (L^p norm of the max-in-time error) and the pointwise strong
error (max-in-time of the L^p norms).  Rate fits come in a plain log-log
variant and a log-corrected variant (C3 + C4 log(T/k)) k^alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ._kernels import diag_convolution_max

_BOOTSTRAP = 200
_Z95 = 1.959963984540054  # two-sided 95% normal quantile


# ---------------------------------------------------------------------------
# constants from the maximal inequalities (D = 1, Hilbert case)

def stochastic_maximal_constant(p: float, lam: float = 0.0, T: float = 1.0) -> float:
    """C_{p,1} = 10 exp(lam T) sqrt(p); contractive case lam = 0."""
    return 10.0 * math.exp(lam * T) * math.sqrt(p)


def discrete_maximal_constant(p: float) -> float:
    """B_{p,1} = 10 p^2 (p-1)^{-1} C_{p,1} + 10 sqrt(p)."""
    return 10.0 * p**2 / (p - 1.0) * stochastic_maximal_constant(p) + 10.0 * math.sqrt(p)


# ---------------------------------------------------------------------------
# strong error estimators

@dataclass
class Estimate:
    value: float
    half_width: float


def _mean_hw(power_samples: np.ndarray, p: float) -> Estimate:
    """p-th root of the sample mean with a 95% half-width.

    Normal approximation on the p-th-power samples with a delta-method root;
    bootstrap fallback for small sample counts (heavy-tailed powers).
    """
    m = power_samples.size
    mean = float(np.mean(power_samples))
    root = mean ** (1.0 / p)
    if m < 2:
        return Estimate(root, float("inf"))
    if m >= 100:
        hw_mean = _Z95 * float(np.std(power_samples, ddof=1)) / math.sqrt(m)
        if mean > 0:
            hw = hw_mean * mean ** (1.0 / p - 1.0) / p
        else:
            hw = hw_mean ** (1.0 / p)
        return Estimate(root, max(hw, np.finfo(float).tiny))
    rng = np.random.default_rng(0)
    idx = rng.integers(0, m, size=(_BOOTSTRAP, m))
    boots = np.mean(power_samples[idx], axis=1) ** (1.0 / p)
    hw = _Z95 * float(np.std(boots, ddof=1))
    return Estimate(root, max(hw, np.finfo(float).tiny))


def _check_coupling(coarse, reference):
    if len(coarse) != len(reference) or len(coarse) < 1:
        raise ValueError("need equally many coarse and reference trajectories")
    for c, r in zip(coarse, reference):
        if c.key != r.key:
            raise ValueError("uncoupled paths: coarse and reference keys differ")


def _error_matrix(coarse, reference, weights=None):
    rows = []
    for c, r in zip(coarse, reference):
        if c.states.shape != r.states.shape:
            raise ValueError("trajectory grids do not match")
        diff = c.states - r.states
        if weights is not None:
            diff = diff * weights
        rows.append(np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1)))
    return np.stack(rows, axis=0)  # (paths, times)


def uniform_error_from_matrix(err: np.ndarray, p: float) -> Estimate:
    if err.shape[0] < 1:
        raise ValueError("need at least 1 path")
    return _mean_hw(np.max(err, axis=1) ** p, p)


def pointwise_error_from_matrix(err: np.ndarray, p: float) -> Estimate:
    # a single path degenerates to the uniform estimate (max over j of one value)
    if err.shape[0] < 1:
        raise ValueError("need at least 1 path")
    powers = err**p
    j_star = int(np.argmax(np.mean(powers, axis=0)))
    return _mean_hw(powers[:, j_star], p)


def uniform_strong_error(coarse, reference, p: float, weights=None) -> Estimate:
    """((1/M) sum_m max_j ||err||^p)^(1/p) over coupled trajectory pairs."""
    _check_coupling(coarse, reference)
    return uniform_error_from_matrix(_error_matrix(coarse, reference, weights), p)


def pointwise_strong_error(coarse, reference, p: float, weights=None) -> Estimate:
    """max_j ((1/M) sum_m ||err_j||^p)^(1/p) over coupled trajectory pairs."""
    _check_coupling(coarse, reference)
    return pointwise_error_from_matrix(_error_matrix(coarse, reference, weights), p)


@dataclass
class ErrorReport:
    """Per-step-size strong error estimates for one scheme and problem."""

    k: np.ndarray
    n_steps: np.ndarray
    uniform: list
    pointwise: list
    M: int
    p: float
    seed: int
    T: float

    def __post_init__(self):
        for u, pt in zip(self.uniform, self.pointwise):
            if u.half_width <= 0 or pt.half_width <= 0:
                raise ValueError("half-widths must be positive")
            # sup of means <= mean of sups at p-th-root level, up to roundoff
            if pt.value > u.value * (1.0 + 1e-12) + 1e-15:
                raise ValueError("pointwise error exceeds uniform error")

    def uniform_values(self) -> np.ndarray:
        return np.array([e.value for e in self.uniform])

    def pointwise_values(self) -> np.ndarray:
        return np.array([e.value for e in self.pointwise])


@dataclass
class RateFit:
    model: str
    alpha: float
    params: dict
    reliable: bool


def fit_rate(report: ErrorReport, model: str = "plain", which: str = "uniform") -> RateFit:
    """Fit a convergence rate to the error-vs-step-size data."""
    k = np.asarray(report.k, dtype=np.float64)
    e = report.uniform_values() if which == "uniform" else report.pointwise_values()
    if k.size < 4:
        raise ValueError("need at least 4 step sizes for a rate fit")
    if np.any(e <= 0):
        raise ValueError("cannot fit a rate to vanishing errors")
    order = np.argsort(k)
    k, e = k[order], e[order]
    reliable = bool(np.all(np.diff(e) >= 0))  # errors should grow with k

    slope = float(np.polyfit(np.log(k), np.log(e), 1)[0])
    if model == "plain":
        return RateFit("plain", slope, {"slope": slope}, reliable)
    if model != "log_corrected":
        raise ValueError(f"unknown fit model {model!r}")

    T = report.T
    alpha0 = min(max(slope, 0.05), 2.0)
    c30 = float(np.exp(np.mean(np.log(e) - alpha0 * np.log(k))))

    def resid(theta):
        c3, c4, alpha = theta
        pred = (c3 + c4 * np.log(T / k)) * k**alpha
        return np.log(np.maximum(pred, 1e-300)) - np.log(e)

    sol = least_squares(
        resid,
        x0=[c30, 0.1 * c30, alpha0],
        bounds=([0.0, 0.0, 1e-6], [np.inf, np.inf, 2.0]),
    )
    c3, c4, alpha = sol.x
    return RateFit("log_corrected", float(alpha), {"C3": float(c3), "C4": float(c4)}, reliable)


# ---------------------------------------------------------------------------
# Gronwall checkers

def check_continuous_gronwall(t, phi, alpha: float, beta: float, rtol: float = 1e-9) -> bool:
    """Verify the a priori bound phi <= alpha (1+beta^2 t)^(1/2) e^(1/2+beta^2 t/2).

    The hypothesis phi(t) <= alpha + beta (int_0^t phi^2)^(1/2) is checked by
    trapezoidal quadrature first; violating it is an input error.
    """
    t = np.asarray(t, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if np.any(phi < 0):
        raise ValueError("phi must be nonnegative")
    sq = phi**2
    integral = np.concatenate(
        [[0.0], np.cumsum(0.5 * (sq[1:] + sq[:-1]) * np.diff(t))]
    )
    hyp = alpha + beta * np.sqrt(integral)
    slack = rtol * (1.0 + np.abs(hyp))
    if np.any(phi > hyp + slack):
        raise ValueError("phi does not satisfy the Gronwall hypothesis")
    bound = alpha * np.sqrt(1.0 + beta**2 * t) * np.exp(0.5 + 0.5 * beta**2 * t)
    return bool(np.all(phi <= bound + rtol * (1.0 + bound)))


def check_discrete_gronwall(phi, alpha: float, beta: float, rtol: float = 1e-9) -> bool:
    """Discrete analogue with block sums in place of integrals."""
    phi = np.asarray(phi, dtype=np.float64)
    if np.any(phi < 0):
        raise ValueError("phi must be nonnegative")
    partial = np.concatenate([[0.0], np.cumsum(phi**2)])[:-1]
    hyp = alpha + beta * np.sqrt(partial)
    slack = rtol * (1.0 + np.abs(hyp))
    if np.any(phi > hyp + slack):
        raise ValueError("phi does not satisfy the Gronwall hypothesis")
    j = np.arange(phi.size, dtype=np.float64)
    bound = alpha * np.sqrt(1.0 + beta**2 * j) * np.exp(0.5 + 0.5 * beta**2 * j)
    return bool(np.all(phi <= bound + rtol * (1.0 + bound)))


# ---------------------------------------------------------------------------
# empirical maximal inequalities

def _chunked_gaussian(seed, n_paths, n_steps, n_modes, scale, chunk):
    done = 0
    block = 0
    while done < n_paths:
        size = min(chunk, n_paths - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, block]))
        yield rng.standard_normal((size, n_steps, n_modes)) * scale
        done += size
        block += 1


def empirical_discrete_maximal(
    Qs: np.ndarray,
    r_multipliers: np.ndarray,
    k: float,
    p: float,
    M: int,
    seed: int = 0,
    chunk: int = 500,
):
    """Monte Carlo ratio for the discrete-convolution maximal inequality.

    Qs: (steps, modes) deterministic diagonal integrands.  Returns
    (ratio, lhs, rhs): lhs is the L^p norm of max_j ||sum R^(j-i) Q_i dW||,
    rhs the square function sqrt(k sum ||Q_i||_HS^2); the inequality asserts
    ratio <= B_{p,1}.
    """
    Qs = np.atleast_2d(np.asarray(Qs, dtype=np.complex128))
    n_steps, n_modes = Qs.shape
    if np.max(np.abs(r_multipliers)) > 1.0 + 1e-12:
        raise ValueError("scheme must be contractive")
    powers = np.empty(M)
    done = 0
    for dw in _chunked_gaussian(seed, M, n_steps, n_modes, math.sqrt(k), chunk):
        maxima = diag_convolution_max(r_multipliers, Qs, dw)
        powers[done : done + maxima.size] = maxima**p
        done += maxima.size
    lhs = float(np.mean(powers) ** (1.0 / p))
    rhs = float(np.sqrt(k * np.sum(np.abs(Qs) ** 2)))
    if rhs == 0.0:
        return (0.0 if lhs == 0.0 else float("inf")), lhs, rhs
    return lhs / rhs, lhs, rhs


def empirical_stochastic_maximal(
    g: np.ndarray,
    semigroup_multipliers_at_k: np.ndarray,
    k: float,
    n_steps: int,
    p: float,
    M: int,
    seed: int = 0,
    chunk: int = 500,
):
    """Monte Carlo ratio for the stochastic-convolution maximal inequality.

    The convolution int_0^t S(t-s) g dW is approximated by its left-point
    Riemann-Ito sum on the fine grid, evaluated through the one-step
    recursion I_j = S(k)(I_{j-1} + g dW_j).  The inequality asserts
    ratio <= C_{p,1} = 10 sqrt(p).
    """
    g = np.asarray(g, dtype=np.complex128)
    if g.ndim == 1:
        g = np.broadcast_to(g, (n_steps, g.size))
    n_modes = g.shape[1]
    powers = np.empty(M)
    done = 0
    for dw in _chunked_gaussian(seed, M, n_steps, n_modes, math.sqrt(k), chunk):
        maxima = diag_convolution_max(semigroup_multipliers_at_k, g, dw)
        powers[done : done + maxima.size] = maxima**p
        done += maxima.size
    lhs = float(np.mean(powers) ** (1.0 / p))
    rhs = float(np.sqrt(k * np.sum(np.abs(g) ** 2)))
    if rhs == 0.0:
        return (0.0 if lhs == 0.0 else float("inf")), lhs, rhs
    return lhs / rhs, lhs, rhs


# ---------------------------------------------------------------------------
# CSV output

CSV_HEADER = "k,N_k,uniform_err,uniform_hw,pointwise_err,pointwise_hw,M,p,seed"


def report_to_csv(report: ErrorReport) -> str:
    """Render the mandatory CSV schema with 17 significant digits."""
    lines = [CSV_HEADER]
    for i in range(report.k.size):
        u, pt = report.uniform[i], report.pointwise[i]
        lines.append(
            ",".join(
                [
                    f"{report.k[i]:.17g}",
                    f"{int(report.n_steps[i])}",
                    f"{u.value:.17g}",
                    f"{u.half_width:.17g}",
                    f"{pt.value:.17g}",
                    f"{pt.half_width:.17g}",
                    f"{report.M}",
                    f"{report.p:.17g}",
                    f"{report.seed}",
                ]
            )
        )
    return "\n".join(lines) + "\n"
