"""Discrete scheme recursion, variation-of-constants check and reference runs.

One step of the recursion is U^j = R_k [U^{j-1} + k F(t_{j-1}, U^{j-1})
+ G(t_{j-1}, U^{j-1}) dW_j].  The fine-grid reference uses exponential
Euler, which is exact on the linear part, so the reference error is driven
by nonlinearity and noise only.

Drift and diffusion callables operate on coefficient arrays with the mode
axis last and must broadcast over leading axes; the batched runners exploit
this to advance many coupled paths in lockstep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import regularise, schemes
from .noise import NoiseModel, NoisePath
from .spectral import DiagonalGenerator, DiagonalOperator, SpectralSpace, semigroup_at

_PROBE_PAIRS = 100


@dataclass(frozen=True)
class SemilinearProblem:
    """dU = (A U + F(t, U)) dt + G(t, U) dW on the truncated spectral space.

    drift(t, u) returns F(t, u) as coefficients; diffusion(t, u, dw) returns
    G(t, u) applied to the standardised increment vector dw (the Q-weights
    are the diffusion's responsibility).  diffusion_hs(t, u, v), if given,
    returns the Hilbert-Schmidt norm of G(t, u) - G(t, v) and enables the
    Lipschitz probe for G.  u0 is either a coefficient array or a callable
    rng -> coefficients.
    """

    space: SpectralSpace
    generator: DiagonalGenerator
    drift: object
    diffusion: object
    u0: object
    T: float
    noise: NoiseModel
    sigma: float = 0.0
    lipschitz_F: float = 0.0
    lipschitz_G: float = 0.0
    diffusion_hs: object = None
    _skip_probes: bool = False

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("horizon must be positive")
        if not self._skip_probes:
            self._probe()

    def initial_state(self, rng=None) -> np.ndarray:
        if callable(self.u0):
            if rng is None:
                raise ValueError("random initial data needs an rng")
            return np.asarray(self.u0(rng), dtype=np.complex128)
        return np.asarray(self.u0, dtype=np.complex128)

    def _probe(self):
        """Linear-growth and empirical Lipschitz checks at construction."""
        m = self.space.n_modes
        zero = np.zeros(m, dtype=np.complex128)
        f0 = np.asarray(self.drift(0.0, zero))
        if not np.all(np.isfinite(f0.view(np.float64))):
            raise ValueError("drift is not finite at zero")
        unit_dw = np.ones(self.noise.mode_count, dtype=np.complex128)
        g0 = np.asarray(self.diffusion(0.0, zero, unit_dw))
        if not np.all(np.isfinite(g0.view(np.float64))):
            raise ValueError("diffusion is not finite at zero")

        rng = np.random.default_rng(0)
        scale = 1e-9  # slack for roundoff in the pseudo-spectral products
        for _ in range(_PROBE_PAIRS):
            u = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            du = np.sqrt(np.sum(np.abs(u - v) ** 2))
            df = self.drift(0.0, u) - self.drift(0.0, v)
            if np.sqrt(np.sum(np.abs(df) ** 2)) > self.lipschitz_F * du * (1 + scale) + scale:
                raise ValueError("drift violates the declared Lipschitz constant")
            if self.diffusion_hs is not None:
                dg = self.diffusion_hs(0.0, u, v)
                if dg > self.lipschitz_G * du * (1 + scale) + scale:
                    raise ValueError("diffusion violates the declared Lipschitz constant")


@dataclass(frozen=True)
class Trajectory:
    """States of one discrete path on (a stride of) the time grid."""

    times: np.ndarray
    states: np.ndarray
    k: float
    scheme: str
    seed: int
    path_index: int

    @property
    def key(self):
        return (self.seed, self.path_index)


def step(Rk: DiagonalOperator, F, G, u: np.ndarray, t: float, k: float, dW: np.ndarray) -> np.ndarray:
    """U = R_k u + k R_k F(t, u) + R_k G(t, u) dW."""
    if G is not None and dW.shape[-1] != u.shape[-1]:
        raise ValueError("increment dimension does not match the noise mode count")
    drift_term = 0.0 if F is None else k * F(t, u)
    noise_term = 0.0 if G is None else G(t, u, dW)
    return Rk.multipliers * (u + drift_term + noise_term)


def _check_grid(problem: SemilinearProblem, k: float, path: NoisePath):
    if abs(path.k - k) > 1e-12 * max(k, 1.0):
        raise ValueError("path step size does not match k")
    nk = round(problem.T / k)
    if abs(nk * k - problem.T) > 1e-9 or path.steps != nk:
        raise ValueError("path does not cover T with steps of size k")
    if path.modes != problem.noise.mode_count:
        raise ValueError("path mode count does not match the noise model")
    return nk


def _u0_rng(seed: int, path_index: int):
    # separate deterministic stream from the increment stream
    return np.random.Generator(np.random.Philox(key=[seed, path_index]).jumped())


def _integrate(problem, rk_mult, k, increments, u, record_stride):
    """Shared recursion; increments has shape (steps, ..., modes)."""
    steps = increments.shape[0]
    drift, diffusion = problem.drift, problem.diffusion
    n_rec = steps // record_stride + 1
    rec = np.empty((n_rec,) + u.shape, dtype=np.complex128)
    rec[0] = u
    r = 1
    for j in range(steps):
        t = j * k
        u = rk_mult * (u + k * drift(t, u) + diffusion(t, u, increments[j]))
        if (j + 1) % record_stride == 0:
            rec[r] = u
            r += 1
    times = np.arange(n_rec) * (k * record_stride)
    return times, rec


def run_discrete(
    problem: SemilinearProblem,
    scheme: schemes.RationalScheme,
    k: float,
    path: NoisePath,
    record_stride: int = 1,
    verify_voc: bool = False,
) -> Trajectory:
    """Run the scheme recursion along one coupled noise path."""
    nk = _check_grid(problem, k, path)
    if not schemes.is_contractive(scheme, problem.generator, k):
        raise ValueError("scheme is not contractive on this generator")
    rk_mult = schemes.build_Rk(scheme, problem.generator, k).multipliers
    u0 = problem.initial_state(_u0_rng(path.seed, path.path_index))
    times, rec = _integrate(problem, rk_mult, k, path.increments, u0, record_stride)
    traj = Trajectory(times, rec, k, scheme.kind, path.seed, path.path_index)
    if verify_voc:
        if record_stride != 1:
            raise ValueError("variation-of-constants check needs the full trajectory")
        _verify_variation_of_constants(problem, rk_mult, k, path, traj)
    return traj


def _verify_variation_of_constants(problem, rk_mult, k, path, traj, rtol=1e-9):
    """Evaluate the direct convolution formula at 3 random indices."""
    nk = path.steps
    rng = np.random.default_rng(path.path_index)
    idx = sorted(set(rng.integers(1, nk + 1, size=3).tolist()))
    u0 = traj.states[0]
    for j in idx:
        acc = rk_mult**j * u0
        for i in range(j):
            pw = rk_mult ** (j - i)
            ui = traj.states[i]
            acc = acc + pw * (k * problem.drift(i * k, ui) + problem.diffusion(i * k, ui, path.increments[i]))
        err = np.sqrt(np.sum(np.abs(acc - traj.states[j]) ** 2))
        ref = max(np.sqrt(np.sum(np.abs(traj.states[j]) ** 2)), 1e-30)
        if err > rtol * ref:
            raise AssertionError("recursion and variation-of-constants formulas disagree")


def run_reference(
    problem: SemilinearProblem,
    k_ref: float,
    path: NoisePath,
    record_stride: int = 1,
) -> Trajectory:
    """Fine-grid surrogate of the mild solution via exponential Euler."""
    return run_discrete(problem, schemes.exponential_euler(), k_ref, path, record_stride)


def run_regularised(
    problem: SemilinearProblem,
    m: int,
    scheme: schemes.RationalScheme,
    k: float,
    path: NoisePath,
    record_stride: int = 1,
) -> Trajectory:
    """Scheme recursion for the Yosida-lifted problem on the same path."""
    lifted = regularise.lift_problem(problem, m)
    return run_discrete(lifted, scheme, k, path, record_stride)


def run_discrete_batch(
    problem: SemilinearProblem,
    scheme: schemes.RationalScheme,
    k: float,
    paths: list,
    record_stride: int = 1,
):
    """Advance several coupled paths in lockstep.

    Returns (times, states) with states of shape (paths, records, modes).
    All paths must share seed/step layout; initial data is sampled per path.
    """
    if not paths:
        raise ValueError("no paths given")
    for p in paths:
        _check_grid(problem, k, p)
    if not schemes.is_contractive(scheme, problem.generator, k):
        raise ValueError("scheme is not contractive on this generator")
    rk_mult = schemes.build_Rk(scheme, problem.generator, k).multipliers
    inc = np.stack([p.increments for p in paths], axis=1)  # (steps, B, modes)
    u0 = np.stack(
        [problem.initial_state(_u0_rng(p.seed, p.path_index)) for p in paths], axis=0
    )
    times, rec = _integrate(problem, rk_mult, k, inc, u0, record_stride)
    return times, np.swapaxes(rec, 0, 1)
