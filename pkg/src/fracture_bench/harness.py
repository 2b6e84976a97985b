"""Study driver: optimal-length runs per mesh, error fits, timing, CSV.

One StudyRecord per (method, mesh); errors are measured against the exact
limiting potential including the fracture term, with elastic-only and
inelastic-only columns emitted alongside so the elastic-limit reading
remains checkable from the same file.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analytic import reference_energies
from .config import StudyConfig
from .eigenerosion import optimal_epsilon, solve_ee
from .fem import EquilibriumSolver, SolverError
from .grid import build_grid
from .phasefield import (
    PFParams,
    SweepError,
    alternate_minimize,
    epsilon_sweep,
    optimal_epsilon_pf,
    pf_loads,
)

METHOD_ORDER = ("ee", "ee-re", "pf")

CSV_COLUMNS = (
    "method", "h", "h_over_2a", "epsilon", "elastic", "inelastic",
    "load_work", "potential", "error", "normalized_error", "elastic_error",
    "inelastic_error", "iterations", "crack_retention", "wall_time_s",
    "quadrature", "converged",
)


@dataclass(frozen=True)
class StudyRecord:
    """One benchmark run; failed runs carry converged=False and NaN energies."""

    method: str
    h: float
    h_over_2a: float
    epsilon: float
    elastic: float
    inelastic: float
    load_work: float
    potential: float
    error: float
    normalized_error: float
    elastic_error: float
    inelastic_error: float
    iterations: int
    crack_retention: float
    wall_time_s: float
    quadrature: str
    converged: bool


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit |potential - Pi0| = C h^alpha in log-log space."""

    C: float
    alpha: float
    residual: float     # rms of the log-space regression residuals
    n_points: int


@dataclass(frozen=True)
class TimingRecord:
    h: float
    epsilon_pf: float
    ee_time_s: float
    pf_time_s: float
    ratio: float
    pf_iterations: int


def _make_record(method, grid, epsilon, energy, refs, iterations,
                 retention, wall_time, quadrature, converged, a) -> StudyRecord:
    if energy is not None:
        potential = energy.potential
        elastic = energy.elastic
        inelastic = energy.inelastic
        load_work = energy.load_work
        error = potential - refs.Pi_total_exact
        elastic_error = (elastic - load_work) - refs.Pi_elastic_exact
        inelastic_error = inelastic - refs.E_fracture_exact
        normalized = error / abs(refs.Pi_total_exact)
    else:
        potential = elastic = inelastic = load_work = math.nan
        error = elastic_error = inelastic_error = normalized = math.nan
    return StudyRecord(
        method=method, h=grid.h, h_over_2a=grid.h / (2.0 * a),
        epsilon=epsilon, elastic=elastic, inelastic=inelastic,
        load_work=load_work, potential=potential, error=error,
        normalized_error=normalized, elastic_error=elastic_error,
        inelastic_error=inelastic_error, iterations=iterations,
        crack_retention=retention, wall_time_s=wall_time,
        quadrature=quadrature, converged=converged,
    )


def _run_ee(grid, config: StudyConfig, refs, variant: str,
            solver=None) -> StudyRecord:
    p = config.problem
    method = "ee" if variant == "plain" else "ee-re"
    if variant == "richardson" and 2.0 * p.a / (2.0 * grid.h) < 3.0:
        warnings.warn(
            f"h={grid.h}: coarse level resolves under 3 elements across the "
            f"crack; Richardson asymptotics unreliable", stacklevel=2)
    t0 = time.perf_counter()
    try:
        result = solve_ee(grid, p, epsilon=config.ee_epsilon, variant=variant,
                          quadrature=config.quadrature,
                          residual=config.ee_residual, solver=solver)
    except SolverError:
        wall = time.perf_counter() - t0
        return _make_record(method, grid, math.nan, None, refs, 0, math.nan,
                            wall, config.quadrature, False, p.a)
    wall = time.perf_counter() - t0
    return _make_record(method, grid, result.epsilon, result.energy, refs,
                        1, math.nan, wall, config.quadrature, True, p.a)


def _run_pf(grid, config: StudyConfig, refs, solver=None) -> StudyRecord:
    """Sweep epsilon, interpolate the optimum, re-run at it and record.

    A single-value epsilon list skips the sweep and records one run at that
    length parameter.
    """
    p = config.problem
    t0 = time.perf_counter()
    single = (config.pf_epsilon_list is not None
              and len(config.pf_epsilon_list) == 1)
    try:
        if single:
            eps_h = config.pf_epsilon_list[0]
        else:
            sweep = epsilon_sweep(
                grid, p, epsilons=config.pf_epsilon_list, eta=config.pf_eta,
                tol=config.pf_tol, max_iters=config.pf_max_iters,
                pin_crack_nodes=config.pf_pin_crack_nodes,
                quadrature=config.quadrature, solver=solver)
            eps_h, _ = optimal_epsilon_pf(sweep)
        pf = PFParams.create(eps_h, p.D, eta=config.pf_eta, tol=config.pf_tol,
                             max_iters=config.pf_max_iters,
                             pin_crack_nodes=config.pf_pin_crack_nodes)
        state = alternate_minimize(grid, p, pf, quadrature=config.quadrature,
                                   solver=solver)
    except (SweepError, SolverError) as exc:
        wall = time.perf_counter() - t0
        warnings.warn(f"pf run failed at h={grid.h}: {exc}", stacklevel=2)
        return _make_record("pf", grid, math.nan, None, refs, 0, math.nan,
                            wall, config.quadrature, False, p.a)
    wall = time.perf_counter() - t0
    if not single:
        # Keep the better of the re-run and the best discrete sweep point;
        # both are legitimate values of inf over the swept family.
        best = min((r for r in sweep if r.converged), key=lambda r: r.potential)
        if best.potential < state.energy.potential:
            return _make_record("pf", grid, best.epsilon, best.energy, refs,
                                best.iterations, best.crack_retention, wall,
                                config.quadrature, best.converged, p.a)
    return _make_record("pf", grid, eps_h, state.energy, refs,
                        state.iterations, state.crack_retention, wall,
                        config.quadrature, state.converged, p.a)


def run_study(config: StudyConfig) -> list[StudyRecord]:
    """Run every configured (method, mesh) combination.

    Output ordering is deterministic: methods in (ee, ee-re, pf) order, then
    h descending. Per-run failures become flagged records, not exceptions.
    """
    p = config.problem
    refs = reference_energies(p)
    hs = sorted(set(config.h_over_D), reverse=True)
    records: list[StudyRecord] = []
    grids = {}
    solvers = {}
    for h_over_D in hs:
        grids[h_over_D] = build_grid(p.D, h_over_D)
        solvers[h_over_D] = EquilibriumSolver(grids[h_over_D])
    for method in METHOD_ORDER:
        if method not in config.methods:
            continue
        for h_over_D in hs:
            grid = grids[h_over_D]
            solver = solvers[h_over_D]
            if method == "ee":
                records.append(_run_ee(grid, config, refs, "plain", solver))
            elif method == "ee-re":
                records.append(_run_ee(grid, config, refs, "richardson", solver))
            else:
                records.append(_run_pf(grid, config, refs, solver))
    return records


# ---------------------------------------------------------------------------
# Power-law fits
# ---------------------------------------------------------------------------

def fit_power_law(records: list[StudyRecord], Pi0: float) -> PowerLawFit:
    """Regress log|potential - Pi0| on log h.

    Uses the absolute error so sequences approaching the limit from below
    (Richardson-extrapolated) fit the same model; records whose error falls
    under 1e-14 |Pi0| are dropped as numerically converged.
    """
    hs, errs = [], []
    for r in records:
        if not math.isfinite(r.potential):
            continue
        err = abs(r.potential - Pi0)
        if err <= 1e-14 * abs(Pi0):
            continue
        hs.append(r.h)
        errs.append(err)
    if len(hs) < 3:
        raise ValueError(f"need at least 3 usable records, got {len(hs)}")
    x = np.log(np.asarray(hs))
    y = np.log(np.asarray(errs))
    A = np.column_stack([x, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    alpha, logC = float(sol[0]), float(sol[1])
    resid = y - A @ sol
    return PowerLawFit(C=math.exp(logC), alpha=alpha,
                       residual=float(np.sqrt(np.mean(resid ** 2))),
                       n_points=len(hs))


# ---------------------------------------------------------------------------
# Timing
# ---------------------------------------------------------------------------

def _median_time(fn, repeats: int = 3) -> float:
    """Median wall time over ``repeats`` calls after one discarded warm-up."""
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def timing_comparison(config: StudyConfig) -> list[TimingRecord]:
    """Wall-time comparison of one EE solve vs one PF run per mesh.

    Quadrature is forced to the fast mode. The PF time covers the full
    alternating iteration at a single, pre-determined epsilon (from the
    config's epsilon list if it holds one value, otherwise from an untimed
    sweep, falling back to the erosion optimum if the sweep does not
    bracket); the sweep itself is never part of the timed region.
    """
    config = replace(config, quadrature="fast")
    p = config.problem
    records = []
    for h_over_D in sorted(set(config.h_over_D), reverse=True):
        grid = build_grid(p.D, h_over_D)
        solver = EquilibriumSolver(grid)
        if config.pf_epsilon_list is not None and len(config.pf_epsilon_list) == 1:
            eps_pf = config.pf_epsilon_list[0]
        else:
            try:
                sweep = epsilon_sweep(
                    grid, p, epsilons=config.pf_epsilon_list, eta=config.pf_eta,
                    tol=config.pf_tol, max_iters=config.pf_max_iters,
                    pin_crack_nodes=config.pf_pin_crack_nodes,
                    quadrature="fast", solver=solver)
                eps_pf, _ = optimal_epsilon_pf(sweep)
            except (SweepError, SolverError):
                eps_pf = optimal_epsilon(p.a, grid.h)[0]

        ee_time = _median_time(lambda: solve_ee(
            grid, p, epsilon=config.ee_epsilon, variant="plain",
            quadrature="fast", residual=config.ee_residual, solver=solver))

        pf = PFParams.create(eps_pf, p.D, eta=config.pf_eta, tol=config.pf_tol,
                             max_iters=config.pf_max_iters,
                             pin_crack_nodes=config.pf_pin_crack_nodes)
        loads = pf_loads(grid, p, "fast")
        iters = [0]

        def pf_run():
            state = alternate_minimize(grid, p, pf, loads=loads,
                                       quadrature="fast", solver=solver)
            iters[0] = state.iterations

        pf_time = _median_time(pf_run)
        records.append(TimingRecord(
            h=grid.h, epsilon_pf=eps_pf, ee_time_s=ee_time, pf_time_s=pf_time,
            ratio=pf_time / ee_time, pf_iterations=iters[0]))
    return records


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def emit_csv(records: list[StudyRecord], path: str | Path) -> Path:
    """Write study records with the fixed column set; stable ordering."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(_fmt(getattr(r, col)) for col in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")
    return path


FIT_CSV_COLUMNS = ("method", "C", "alpha", "residual", "n_points")


def emit_fits_csv(fits: dict[str, PowerLawFit], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(FIT_CSV_COLUMNS)]
    for method in METHOD_ORDER:
        if method in fits:
            f = fits[method]
            lines.append(",".join(
                [method, repr(f.C), repr(f.alpha), repr(f.residual),
                 str(f.n_points)]))
    path.write_text("\n".join(lines) + "\n")
    return path


TIMING_CSV_COLUMNS = ("h", "epsilon_pf", "ee_time_s", "pf_time_s", "ratio",
                      "pf_iterations")


def emit_timing_csv(records: list[TimingRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(TIMING_CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(_fmt(getattr(r, col))
                              for col in TIMING_CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")
    return path
