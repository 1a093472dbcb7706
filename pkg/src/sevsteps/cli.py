"""Experiment runner CLI.

Five commands expose the studies as reproducible batch jobs:

    sevsteps rates           quantified strong convergence rates (smooth data)
    sevsteps qualitative     convergence without a rate (rough data)
    sevsteps regularisation  resolvent-regularised problems: gap in m, error in k
    sevsteps inequalities    empirical maximal-inequality and Gronwall suite
    sevsteps stability       || max_j ||U^j|| ||_p across step counts

Configuration is a flat ``key = value`` text file; any key can be overridden
on the command line as ``--key value``.  Outputs (CSV, SVG, manifest) land in
the configured output directory.  Exit codes: 0 success, 1 configuration
error, 2 tolerance failure.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import __version__, error_lab, experiments, schemes
from .noise import decay_noise_model
from .schrodinger import (
    build_linear,
    build_nonlinear,
    rough_initial_data,
    rough_potential,
    smooth_potential,
)
from .spectral import SpectralSpace, smooth_data

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TOLERANCE = 2

_MAX_REF_STEPS = 2**20  # memory budget for the fine reference grid


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Flat experiment configuration; every field has a textual form."""

    problem: str = "linear"  # linear | nonlinear
    potential: str = "smooth"  # smooth | rough
    potential_seed: int = 1
    sup_bound: float = 1.0
    amplitudes: str = "0.5,0.2,0.1,0.05,0.02"
    scheme: str = "implicit_euler,crank_nicolson"
    sigma: float = 0.0
    K: int = 32
    lambda_decay: float = 2.0
    u0_decay: str = "6.0"  # spectral decay exponent, or "rough"
    u0_seed: int = 7
    T: float = 1.0
    p: float = 2.0
    M: int = 200
    seed: int = 0
    k_grid: str = "2^-4,2^-5,2^-6,2^-7,2^-8,2^-9"
    k_ref: str = ""  # empty -> min(k_grid)/16
    m_grid: str = "1,4,16,64,256"
    m_star: int = 16
    n_grid: str = "2^4,2^5,2^6,2^7,2^8,2^9,2^10,2^11,2^12"
    rate_band: str = "0.40,0.60"
    slack: float = 0.05
    stability_ratio: float = 2.0
    ineq_paths: int = 10000
    ineq_steps: int = 64
    gronwall_trials: int = 1000
    threads: int = 0  # 0 -> SEVSTEPS_THREADS or 1
    outdir: str = "sevsteps_out"


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _dyadic(token: str) -> float:
    """Parse '2^-6' or a plain float literal."""
    token = token.strip()
    if "^" in token:
        base, exp = token.split("^", 1)
        return float(base) ** int(exp)
    return float(token)


def _float_list(text: str):
    return [_dyadic(t) for t in text.split(",") if t.strip()]


def _int_list(text: str):
    return [int(round(_dyadic(t))) for t in text.split(",") if t.strip()]


def _coerce(key: str, value: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int" or kind is int:
            return int(value)
        if kind == "float" or kind is float:
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is not None:
        try:
            with open(path) as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        for ln, raw in enumerate(lines, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
            setattr(cfg, key, _coerce(key, value))
    for key, value in overrides.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown override --{key}")
        setattr(cfg, key, _coerce(key, value))
    return cfg


def _resolve_threads(cfg: ExperimentConfig) -> int:
    if cfg.threads > 0:
        return cfg.threads
    env = os.environ.get("SEVSTEPS_THREADS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"bad SEVSTEPS_THREADS value {env!r}") from exc
    return 1


def _parse_k_grid(cfg: ExperimentConfig):
    try:
        ks = sorted(set(_float_list(cfg.k_grid)), reverse=True)
    except ValueError as exc:
        raise ConfigError(f"bad k_grid: {exc}") from exc
    if not ks:
        raise ConfigError("k_grid is empty")
    for k in ks:
        if k <= 0:
            raise ConfigError("step sizes must be positive")
        n = cfg.T / k
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ConfigError(f"k = {k} does not divide T = {cfg.T}")
        r = k / ks[-1]
        if abs(r - 2 ** round(np.log2(r))) > 1e-9:
            raise ConfigError("k_grid entries must be dyadically nested")
    if cfg.k_ref.strip():
        k_ref = _dyadic(cfg.k_ref)
    else:
        k_ref = ks[-1] / 16.0
    if k_ref > ks[-1] / 2:
        raise ConfigError("k_ref must be finer than the smallest grid step")
    if round(cfg.T / k_ref) > _MAX_REF_STEPS:
        raise ConfigError(
            f"reference grid needs {round(cfg.T / k_ref)} steps; "
            f"budget is {_MAX_REF_STEPS}"
        )
    return np.array(ks), k_ref


def _parse_schemes(cfg: ExperimentConfig):
    factory = {
        "exponential_euler": schemes.exponential_euler,
        "implicit_euler": schemes.implicit_euler,
        "crank_nicolson": schemes.crank_nicolson,
    }
    out = []
    for name in cfg.scheme.split(","):
        name = name.strip()
        if not name:
            continue
        if name not in factory:
            raise ConfigError(f"unknown scheme {name!r}")
        out.append(factory[name]())
    if not out:
        raise ConfigError("no scheme selected")
    return out


def _sin_map(scale: float):
    """Componentwise sine, Lipschitz with constant `scale`, vanishing at 0."""

    def f(z):
        return scale * (np.sin(z.real) + 1j * np.sin(z.imag))

    return f


def build_problem(cfg: ExperimentConfig):
    space = SpectralSpace(cfg.K, cfg.sigma)
    noise = decay_noise_model(space.frequencies, cfg.lambda_decay)
    if cfg.potential == "smooth":
        amps = [complex(a) for a in cfg.amplitudes.split(",") if a.strip()]
        V = smooth_potential(space, amps)
    elif cfg.potential == "rough":
        V = rough_potential(space, cfg.potential_seed, cfg.sup_bound)
    else:
        raise ConfigError(f"unknown potential kind {cfg.potential!r}")
    if cfg.u0_decay.strip() == "rough":
        u0 = rough_initial_data(space)
    else:
        u0 = smooth_data(space, float(cfg.u0_decay), seed=cfg.u0_seed)
    if cfg.problem == "linear":
        return build_linear(V, noise, u0, sigma=cfg.sigma, T=cfg.T, space=space)
    if cfg.problem == "nonlinear":
        return build_nonlinear(
            _sin_map(0.5),
            _sin_map(1.0),
            V,
            noise,
            u0,
            sigma=cfg.sigma,
            T=cfg.T,
            lip_phi=0.5,
            lip_psi=1.0,
            space=space,
        )
    raise ConfigError(f"unknown problem kind {cfg.problem!r}")


# ---------------------------------------------------------------------------
# outputs

def _version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"sevsteps {__version__} ({out.stdout.strip()})"
    except OSError:
        pass
    return f"sevsteps {__version__}"


def _write_manifest(cfg: ExperimentConfig, command: str, wall: float):
    lines = [f"command = {command}", f"version = {_version_string()}"]
    for f in fields(ExperimentConfig):
        lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    lines.append(f"wall_seconds = {wall:.3f}")
    with open(os.path.join(cfg.outdir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_text(cfg: ExperimentConfig, name: str, text: str):
    with open(os.path.join(cfg.outdir, name), "w") as fh:
        fh.write(text)


def _plot_reports(cfg: ExperimentConfig, name: str, reports: dict, fits: dict):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for kind, rep in reports.items():
        k = rep.k
        e = rep.uniform_values()
        line = ax.loglog(k, e, "o-", label=kind)[0]
        fit = fits.get(kind)
        if fit is not None:
            c = np.exp(np.mean(np.log(e) - fit.alpha * np.log(k)))
            ax.loglog(
                k,
                c * k**fit.alpha,
                "--",
                color=line.get_color(),
                label=f"{kind} fit k^{fit.alpha:.2f}",
            )
    ax.set_xlabel("step size k")
    ax.set_ylabel("uniform strong error")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(os.path.join(cfg.outdir, name))
    plt.close(fig)


def _decreasing_with_slack(values, slack: float) -> bool:
    """Decrease across the grid: each step may regress by at most `slack`,
    and the last value must undercut the first."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return True
    if np.any(v[1:] > v[:-1] * (1.0 + slack)):
        return False
    return v[-1] < v[0]


# ---------------------------------------------------------------------------
# commands

def cmd_rates(cfg: ExperimentConfig) -> int:
    k_grid, k_ref = _parse_k_grid(cfg)
    scheme_list = _parse_schemes(cfg)
    try:
        lo, hi = (float(s) for s in cfg.rate_band.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad rate_band: {exc}") from exc
    problem = build_problem(cfg)
    study = experiments.run_strong_error_study(
        problem, scheme_list, k_grid, k_ref, cfg.M, cfg.p, cfg.seed,
        threads=_resolve_threads(cfg),
    )
    fits = {}
    ok = True
    for kind, rep in study.reports.items():
        _write_text(cfg, f"rates_{kind}.csv", error_lab.report_to_csv(rep))
        errs = rep.uniform_values()
        if np.all(errs <= 1e-12):
            print(f"{kind}: errors at machine floor, rate exact (report only)")
            continue
        if k_grid.size < 4:
            print(f"{kind}: grid too small for a rate fit (report only)")
            continue
        plain = error_lab.fit_rate(rep, "plain")
        logc = error_lab.fit_rate(rep, "log_corrected")
        fits[kind] = plain
        print(
            f"{kind}: uniform rate {plain.alpha:.4f} "
            f"(log-corrected alpha {logc.alpha:.4f}, "
            f"C3 {logc.params['C3']:.3g}, C4 {logc.params['C4']:.3g})"
        )
        if kind == "exponential_euler":
            continue  # informational only: exact on the linear part
        if not (lo <= plain.alpha <= hi):
            print(f"{kind}: rate outside [{lo}, {hi}]")
            ok = False
    _plot_reports(cfg, "rates.svg", study.reports, fits)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_qualitative(cfg: ExperimentConfig) -> int:
    k_grid, k_ref = _parse_k_grid(cfg)
    if k_grid.size < 5:
        raise ConfigError("qualitative study needs at least 5 step sizes")
    scheme_list = _parse_schemes(cfg)
    problem = build_problem(cfg)
    study = experiments.run_strong_error_study(
        problem, scheme_list, k_grid, k_ref, cfg.M, cfg.p, cfg.seed,
        threads=_resolve_threads(cfg),
    )
    ok = True
    for kind, rep in study.reports.items():
        _write_text(cfg, f"qualitative_{kind}.csv", error_lab.report_to_csv(rep))
        dec = _decreasing_with_slack(rep.uniform_values(), cfg.slack)
        print(f"{kind}: uniform errors {np.array2string(rep.uniform_values(), precision=4)} "
              f"{'decreasing' if dec else 'NOT decreasing'}")
        ok = ok and dec
    _plot_reports(cfg, "qualitative.svg", study.reports, {})
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_regularisation(cfg: ExperimentConfig) -> int:
    k_grid, k_ref = _parse_k_grid(cfg)
    try:
        m_grid = _int_list(cfg.m_grid)
    except ValueError as exc:
        raise ConfigError(f"bad m_grid: {exc}") from exc
    if not m_grid or any(m < 1 for m in m_grid):
        raise ConfigError("m_grid must contain positive integers")
    scheme = _parse_schemes(cfg)[0]
    problem = build_problem(cfg)
    study = experiments.run_regularisation_study(
        problem, m_grid, scheme, k_grid, k_ref, cfg.M, cfg.p, cfg.seed,
        m_star=cfg.m_star, threads=_resolve_threads(cfg),
    )
    gap_lines = ["m,continuous_gap"]
    for m, g in zip(study.m_grid, study.continuous_gap):
        gap_lines.append(f"{int(m)},{g:.17g}")
    _write_text(cfg, "regularisation_gap.csv", "\n".join(gap_lines) + "\n")
    _write_text(
        cfg, "regularisation_disc.csv", error_lab.report_to_csv(study.disc_report)
    )
    print("continuous gap per m:", np.array2string(study.continuous_gap, precision=4))
    print(
        "lifted discretisation errors:",
        np.array2string(study.disc_report.uniform_values(), precision=4),
    )
    if len(m_grid) < 2:
        print("single m: report only")
        return EXIT_OK
    gaps = study.continuous_gap
    inversions = int(np.sum(gaps[1:] > gaps[:-1] * (1.0 + cfg.slack)))
    gap_ok = inversions <= 1 and gaps[-1] < gaps[0]
    disc_ok = _decreasing_with_slack(study.disc_report.uniform_values(), cfg.slack)
    _plot_reports(cfg, "regularisation.svg", {scheme.kind: study.disc_report}, {})
    if not gap_ok:
        print("continuous regularisation gap is not decreasing in m")
    if not disc_ok:
        print(f"lifted discretisation error not decreasing at m = {cfg.m_star}")
    return EXIT_OK if (gap_ok and disc_ok) else EXIT_TOLERANCE


def _gronwall_trials(trials: int, seed: int):
    """Randomised hypotheses built to satisfy the Gronwall premise exactly.

    Each trial draws alpha, beta and a path phi <= alpha + beta * (partial
    integral/sum)^(1/2) by construction, then asserts the conclusion bound.
    Returns (continuous_failures, discrete_failures).
    """
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    cont_fail = disc_fail = 0
    for _ in range(trials):
        n = int(rng.integers(5, 80))
        alpha = float(rng.uniform(0.01, 5.0))
        beta = float(rng.uniform(0.0, 3.0))
        t = np.sort(rng.uniform(0.0, 2.0, n))
        t[0] = 0.0
        theta = rng.uniform(0.0, 1.0, n)
        phi = np.empty(n)
        integral = 0.0
        phi[0] = theta[0] * alpha
        for j in range(1, n):
            # trapezoid contribution of the previous node only; the current
            # node can only raise the premise, so this stays admissible
            integral += 0.5 * phi[j - 1] ** 2 * (t[j] - t[j - 1])
            phi[j] = theta[j] * (alpha + beta * np.sqrt(integral))
        if not error_lab.check_continuous_gronwall(t, phi, alpha, beta):
            cont_fail += 1

        nd = int(rng.integers(5, 80))
        alpha_d = float(rng.uniform(0.01, 5.0))
        beta_d = float(rng.uniform(0.0, 1.0))
        theta_d = rng.uniform(0.0, 1.0, nd)
        phi_d = np.empty(nd)
        partial = 0.0
        for j in range(nd):
            phi_d[j] = theta_d[j] * (alpha_d + beta_d * np.sqrt(partial))
            partial += phi_d[j] ** 2
        if not error_lab.check_discrete_gronwall(phi_d, alpha_d, beta_d):
            disc_fail += 1
    return cont_fail, disc_fail


def cmd_inequalities(cfg: ExperimentConfig) -> int:
    space = SpectralSpace(cfg.K, 0.0)
    from .spectral import schrodinger_generator, semigroup_at

    gen = schrodinger_generator(space)
    k = cfg.T / cfg.ineq_steps
    lam = (1.0 + space.frequencies.astype(np.float64) ** 2) ** -1.0
    Qs = np.tile(lam.astype(np.complex128), (cfg.ineq_steps, 1))

    r_mult = schemes.build_Rk(schemes.implicit_euler(), gen, k).multipliers
    b_bound = error_lab.discrete_maximal_constant(cfg.p)
    d_ratio, d_lhs, d_rhs = error_lab.empirical_discrete_maximal(
        Qs, r_mult, k, cfg.p, cfg.ineq_paths, cfg.seed
    )

    s_mult = semigroup_at(gen, k).multipliers
    c_bound = error_lab.stochastic_maximal_constant(cfg.p)
    s_ratio, s_lhs, s_rhs = error_lab.empirical_stochastic_maximal(
        lam, s_mult, k, cfg.ineq_steps, cfg.p, cfg.ineq_paths, cfg.seed
    )

    cont_fail, disc_fail = _gronwall_trials(cfg.gronwall_trials, cfg.seed)

    lines = ["check,value,bound,pass"]
    checks = [
        ("discrete_maximal_ratio", d_ratio, b_bound, d_ratio <= b_bound),
        ("stochastic_maximal_ratio", s_ratio, c_bound, s_ratio <= c_bound),
        ("gronwall_continuous_failures", float(cont_fail), 0.0, cont_fail == 0),
        ("gronwall_discrete_failures", float(disc_fail), 0.0, disc_fail == 0),
    ]
    ok = True
    for name, value, bound, passed in checks:
        lines.append(f"{name},{value:.17g},{bound:.17g},{int(passed)}")
        print(f"{name}: {value:.4g} vs bound {bound:.4g} -> {'ok' if passed else 'FAIL'}")
        ok = ok and passed
    _write_text(cfg, "inequalities.csv", "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_stability(cfg: ExperimentConfig) -> int:
    try:
        n_grid = _int_list(cfg.n_grid)
    except ValueError as exc:
        raise ConfigError(f"bad n_grid: {exc}") from exc
    if not n_grid or any(n < 1 for n in n_grid):
        raise ConfigError("n_grid must contain positive integers")
    scheme = _parse_schemes(cfg)[0]
    problem = build_problem(cfg)
    study = experiments.run_stability_study(
        problem, scheme, n_grid, cfg.M, cfg.p, cfg.seed,
        threads=_resolve_threads(cfg),
    )
    lines = ["N_k,max_norm"]
    for n, v in zip(study.n_grid, study.max_norm):
        lines.append(f"{int(n)},{v:.17g}")
    _write_text(cfg, "stability.csv", "\n".join(lines) + "\n")
    ratio = float(np.max(study.max_norm) / np.min(study.max_norm))
    print(
        f"{scheme.kind}: max/min of || max_j ||U^j|| ||_p = {ratio:.4f} "
        f"(bound {cfg.stability_ratio})"
    )
    return EXIT_OK if ratio <= cfg.stability_ratio else EXIT_TOLERANCE


_COMMANDS = {
    "rates": cmd_rates,
    "qualitative": cmd_qualitative,
    "regularisation": cmd_regularisation,
    "inequalities": cmd_inequalities,
    "stability": cmd_stability,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sevsteps",
        description="Strong-convergence experiments for contractive time "
        "discretisations of stochastic evolution equations.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None, help="flat key = value file")
    args, rest = parser.parse_known_args(argv)

    overrides = {}
    it = iter(rest)
    for tok in it:
        if not tok.startswith("--"):
            print(f"error: unexpected argument {tok!r}", file=sys.stderr)
            return EXIT_CONFIG
        key = tok[2:]
        value = next(it, None)
        if value is None:
            print(f"error: --{key} needs a value", file=sys.stderr)
            return EXIT_CONFIG
        overrides[key] = value

    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config, overrides)
        os.makedirs(cfg.outdir, exist_ok=True)
        code = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write_manifest(cfg, args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
