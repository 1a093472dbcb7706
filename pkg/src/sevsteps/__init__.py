"""Contractive time discretisation of semilinear stochastic evolution
equations on spectral Hilbert spaces, with strong-error experiment tooling."""

__version__ = "0.1.0"

from .spectral import (
    DiagonalGenerator,
    DiagonalOperator,
    GraphNorm,
    SpectralSpace,
    StateVector,
    fractional_power_neg_A,
    nemytskij,
    norm_sigma,
    pointwise_multiply,
    resolvent,
    schrodinger_generator,
    semigroup_at,
    smooth_data,
)
from .schemes import (
    RationalScheme,
    build_Rk,
    contractivity_margin,
    crank_nicolson,
    deterministic_order,
    exponential_euler,
    implicit_euler,
    symbol,
)
from .noise import NoiseModel, NoisePath, coarsen, decay_noise_model, sample_path
from .regularise import YosidaOperator, lift_problem, yosida, yosida_defect
from .integrator import (
    SemilinearProblem,
    Trajectory,
    run_discrete,
    run_discrete_batch,
    run_reference,
    run_regularised,
    step,
)
from .schrodinger import (
    PotentialSpec,
    build_linear,
    build_nonlinear,
    rough_initial_data,
    rough_potential,
    smooth_potential,
)
from . import error_lab, experiments
