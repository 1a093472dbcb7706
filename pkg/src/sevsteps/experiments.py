"""Monte Carlo experiment drivers shared by the CLI and the acceptance suite.

All studies couple coarse runs to a fine-grid reference through exact
coarsening of a single fine noise path per sample.  Paths are processed in
chunks that advance in lockstep (the integrator broadcasts over a path
axis); chunks can be distributed over worker threads, and results are
reduced in ascending path order, so outputs do not depend on the worker
count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import error_lab, schemes
from .integrator import SemilinearProblem, run_discrete_batch
from .noise import coarsen, sample_path
from .regularise import lift_problem

# cap on in-flight fine-grid noise per worker, in complex elements
_CHUNK_BUDGET = 6_000_000


def _chunk_sizes(M: int, steps: int, modes: int, threads: int):
    per = max(1, _CHUNK_BUDGET // max(1, steps * modes) // max(1, threads))
    per = min(per, M)
    bounds = list(range(0, M, per)) + [M]
    return list(zip(bounds[:-1], bounds[1:]))


def _run_chunks(task, chunks, threads: int):
    if threads <= 1:
        return [task(lo, hi) for lo, hi in chunks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda b: task(*b), chunks))


def _ratio(a: float, b: float) -> int:
    r = round(a / b)
    if abs(r * b - a) > 1e-9 * a:
        raise ValueError("step sizes must be dyadically nested")
    return r


@dataclass
class StrongErrorStudy:
    reports: dict  # scheme kind -> ErrorReport
    k_grid: np.ndarray
    k_ref: float


def run_strong_error_study(
    problem: SemilinearProblem,
    scheme_list,
    k_grid,
    k_ref: float,
    M: int,
    p: float = 2.0,
    seed: int = 0,
    threads: int = 1,
) -> StrongErrorStudy:
    """Coupled uniform/pointwise strong errors over a grid of step sizes."""
    k_grid = np.asarray(sorted(k_grid, reverse=True), dtype=np.float64)
    T = problem.T
    k_min = k_grid[-1]
    ref_stride = _ratio(k_min, k_ref)
    steps_ref = _ratio(T, k_ref)
    factors = [_ratio(k, k_ref) for k in k_grid]
    strides = [_ratio(k, k_min) for k in k_grid]
    weights = problem.space.sobolev_weights(problem.sigma)
    modes = problem.noise.mode_count

    def task(lo, hi):
        paths = [sample_path(problem.noise, T, k_ref, seed, i) for i in range(lo, hi)]
        _, ref = run_discrete_batch(
            problem, schemes.exponential_euler(), k_ref, paths, record_stride=ref_stride
        )
        out = {}
        for ik, k in enumerate(k_grid):
            cpaths = [coarsen(pth, factors[ik]) for pth in paths]
            ref_sub = ref[:, :: strides[ik]]
            for sch in scheme_list:
                _, states = run_discrete_batch(problem, sch, k, cpaths)
                diff = (states - ref_sub) * weights
                out[(sch.kind, ik)] = np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1))
        return out

    chunks = _chunk_sizes(M, steps_ref, modes, threads)
    results = _run_chunks(task, chunks, threads)

    reports = {}
    n_steps = np.array([round(T / k) for k in k_grid])
    for sch in scheme_list:
        uniform, pointwise = [], []
        for ik in range(k_grid.size):
            err = np.concatenate([r[(sch.kind, ik)] for r in results], axis=0)
            uniform.append(error_lab.uniform_error_from_matrix(err, p))
            pointwise.append(error_lab.pointwise_error_from_matrix(err, p))
        reports[sch.kind] = error_lab.ErrorReport(
            k=k_grid, n_steps=n_steps, uniform=uniform, pointwise=pointwise,
            M=M, p=p, seed=seed, T=T,
        )
    return StrongErrorStudy(reports, k_grid, k_ref)


@dataclass
class RegularisationStudy:
    m_grid: np.ndarray
    continuous_gap: np.ndarray  # ||sup_t ||ref - ref_m|| ||_p per m
    continuous_gap_hw: np.ndarray  # 95% half-widths of the gaps
    m_star: int
    k_disc: np.ndarray
    disc_report: error_lab.ErrorReport  # discretisation error of the lifted problem


def run_regularisation_study(
    problem: SemilinearProblem,
    m_grid,
    scheme,
    k_disc,
    k_ref: float,
    M: int,
    p: float = 2.0,
    seed: int = 0,
    m_star: int = 16,
    threads: int = 1,
    record_points: int = 256,
) -> RegularisationStudy:
    """Continuous regularisation gap in m, plus lifted discretisation errors."""
    m_grid = np.asarray(sorted(m_grid), dtype=np.int64)
    k_disc = np.asarray(sorted(k_disc, reverse=True), dtype=np.float64)
    T = problem.T
    steps_ref = _ratio(T, k_ref)
    rec_stride = max(1, steps_ref // record_points)
    while steps_ref % rec_stride:
        rec_stride -= 1
    k_min = k_disc[-1]
    cmp_stride = _ratio(k_min, k_ref)
    factors = [_ratio(k, k_ref) for k in k_disc]
    strides = [_ratio(k, k_min) for k in k_disc]
    weights = problem.space.sobolev_weights(problem.sigma)
    lifted = {int(m): lift_problem(problem, int(m)) for m in m_grid}
    if m_star not in lifted:
        lifted[m_star] = lift_problem(problem, m_star)
    ee = schemes.exponential_euler()

    def task(lo, hi):
        paths = [sample_path(problem.noise, T, k_ref, seed, i) for i in range(lo, hi)]
        _, ref = run_discrete_batch(problem, ee, k_ref, paths, record_stride=rec_stride)
        gaps = {}
        for m in m_grid:
            _, ref_m = run_discrete_batch(lifted[int(m)], ee, k_ref, paths, record_stride=rec_stride)
            diff = (ref - ref_m) * weights
            gaps[int(m)] = np.max(np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1)), axis=1)
        _, ref_star = run_discrete_batch(lifted[m_star], ee, k_ref, paths, record_stride=cmp_stride)
        disc = {}
        for ik, k in enumerate(k_disc):
            cpaths = [coarsen(pth, factors[ik]) for pth in paths]
            _, states = run_discrete_batch(lifted[m_star], scheme, k, cpaths)
            diff = (states - ref_star[:, :: strides[ik]]) * weights
            disc[ik] = np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1))
        return gaps, disc

    chunks = _chunk_sizes(M, steps_ref, problem.noise.mode_count, threads)
    results = _run_chunks(task, chunks, threads)

    gap_estimates = [
        error_lab._mean_hw(np.concatenate([g[int(m)] for g, _ in results]) ** p, p)
        for m in m_grid
    ]
    continuous_gap = np.array([e.value for e in gap_estimates])
    continuous_gap_hw = np.array([e.half_width for e in gap_estimates])
    uniform, pointwise = [], []
    for ik in range(k_disc.size):
        err = np.concatenate([d[ik] for _, d in results], axis=0)
        uniform.append(error_lab.uniform_error_from_matrix(err, p))
        pointwise.append(error_lab.pointwise_error_from_matrix(err, p))
    disc_report = error_lab.ErrorReport(
        k=k_disc,
        n_steps=np.array([round(T / k) for k in k_disc]),
        uniform=uniform,
        pointwise=pointwise,
        M=M,
        p=p,
        seed=seed,
        T=T,
    )
    return RegularisationStudy(
        m_grid, continuous_gap, continuous_gap_hw, m_star, k_disc, disc_report
    )


@dataclass
class StabilityStudy:
    n_grid: np.ndarray
    max_norm: np.ndarray  # || max_j ||U^j|| ||_p per N_k


def run_stability_study(
    problem: SemilinearProblem,
    scheme,
    n_grid,
    M: int,
    p: float = 2.0,
    seed: int = 0,
    threads: int = 1,
) -> StabilityStudy:
    """|| max_j ||U^j|| ||_p across time-step counts; bounded for stable schemes."""
    n_grid = np.asarray(sorted(n_grid), dtype=np.int64)
    T = problem.T
    weights = problem.space.sobolev_weights(problem.sigma)
    estimates = []
    for nk in n_grid:
        k = T / int(nk)

        def task(lo, hi, k=k):
            paths = [sample_path(problem.noise, T, k, seed, i) for i in range(lo, hi)]
            _, states = run_discrete_batch(problem, scheme, k, paths)
            norms = np.sqrt(np.sum(np.abs(states * weights) ** 2, axis=-1))
            return np.max(norms, axis=1)

        chunks = _chunk_sizes(M, int(nk), problem.noise.mode_count, threads)
        maxima = np.concatenate(_run_chunks(task, chunks, threads))
        estimates.append(float(np.mean(maxima**p) ** (1.0 / p)))
    return StabilityStudy(n_grid, np.array(estimates))
