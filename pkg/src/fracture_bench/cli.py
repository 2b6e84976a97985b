"""Command-line front end: self-checks, single runs, sweeps, studies, timing."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import analytic, eigenerosion
from .config import ConfigError, StudyConfig, check_criticality, load_config, table1_config
from .fem import SolverError
from .grid import build_grid
from .harness import (
    METHOD_ORDER,
    emit_csv,
    emit_fits_csv,
    emit_timing_csv,
    fit_power_law,
    run_study,
    timing_comparison,
)
from .phasefield import SweepError, epsilon_sweep, optimal_epsilon_pf

EXIT_OK = 0
EXIT_RUN_FAILURE = 2
EXIT_CONFIG_ERROR = 3


def _load(args) -> StudyConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return table1_config()


# ---------------------------------------------------------------------------
# check: analytic and closed-form self-tests
# ---------------------------------------------------------------------------

def _cmd_check(args) -> int:
    config = _load(args)
    p = config.problem
    failures = 0

    def report(name, ok, detail=""):
        nonlocal failures
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))
        if not ok:
            failures += 1

    crit = check_criticality(p, tol=config.criticality_tol)
    report("criticality condition", crit.passed,
           f"mismatch {crit.mismatch:.3e}, tol {crit.tol:g}")

    refs = analytic.reference_energies(p)
    report("reference energies finite",
           math.isfinite(refs.Pi_total_exact) and refs.Pi_elastic_exact < 0,
           f"Pi_total_exact {refs.Pi_total_exact:.6e}")

    # Closed-form erosion identities
    ok = True
    for h_over_D in config.h_over_D:
        h = p.D * h_over_D
        eps_opt, _ = eigenerosion.optimal_epsilon(p.a, h)
        direct = eigenerosion.inelastic_energy(p.a, h, eps_opt, p.material.Gc)
        closed = eigenerosion.optimal_inelastic_energy(p.a, h, p.material.Gc)
        if abs(direct - closed) > 1e-12 * closed:
            ok = False
    report("erosion energy closed forms", ok)

    # Patch test on a coarse mesh
    grid = build_grid(p.D, 0.05)
    uncracked = replace(p, a=0.0)
    try:
        result = eigenerosion.solve_ee(grid, uncracked, quadrature=config.quadrature)
        expected = -refs.W0 * p.D * p.D
        rel = abs(result.energy.potential - expected) / abs(expected)
        report("uncracked patch test", rel < 1e-10, f"rel err {rel:.2e}")
    except SolverError as exc:
        report("uncracked patch test", False, str(exc))

    print(f"{'all checks passed' if failures == 0 else f'{failures} check(s) failed'}")
    return EXIT_OK if failures == 0 else EXIT_RUN_FAILURE


# ---------------------------------------------------------------------------
# run: one method on one mesh
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    config = _load(args)
    if args.method not in METHOD_ORDER:
        raise ConfigError(f"unknown method {args.method!r}")
    if args.epsilon and args.epsilon != "auto":
        eps = float(args.epsilon)
        if args.method == "pf":
            config = replace(config, pf_epsilon_list=(eps,))
        else:
            config = replace(config, ee_epsilon=eps)
    config = replace(config, h_over_D=(args.h_over_d,), methods=(args.method,))
    records = run_study(config)
    out = emit_csv(records, Path(config.output_dir) /
                   f"run_{args.method}_h{args.h_over_d:g}.csv")
    r = records[0]
    print(f"method={r.method} h={r.h:g} epsilon={r.epsilon:g} "
          f"potential={r.potential:.8e} error={r.error:.3e} "
          f"converged={r.converged}")
    print(f"wrote {out}")
    return EXIT_OK if r.converged else EXIT_RUN_FAILURE


# ---------------------------------------------------------------------------
# sweep: phase-field epsilon sweep on one mesh
# ---------------------------------------------------------------------------

def _cmd_sweep(args) -> int:
    config = _load(args)
    if args.method != "pf":
        raise ConfigError("sweep supports only --method pf")
    p = config.problem
    grid = build_grid(p.D, args.h_over_d)
    records = epsilon_sweep(
        grid, p, epsilons=config.pf_epsilon_list, eta=config.pf_eta,
        tol=config.pf_tol, max_iters=config.pf_max_iters,
        pin_crack_nodes=config.pf_pin_crack_nodes,
        quadrature=config.quadrature)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"sweep_pf_h{args.h_over_d:g}.csv"
    lines = ["epsilon,potential,iterations,converged,crack_retention"]
    for r in records:
        pot = "" if not math.isfinite(r.potential) else repr(r.potential)
        ret = "" if math.isnan(r.crack_retention) else repr(r.crack_retention)
        lines.append(f"{r.epsilon!r},{pot},{r.iterations},"
                     f"{'true' if r.converged else 'false'},{ret}")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")
    for r in records:
        print(f"  eps={r.epsilon:.5g} potential={r.potential:.8e} "
              f"converged={r.converged} retention={r.crack_retention:.4f}")
    try:
        eps_h, pot = optimal_epsilon_pf(records)
        print(f"interpolated optimum: eps_h={eps_h:.6g} potential={pot:.8e}")
    except SweepError as exc:
        print(f"no interior optimum: {exc}")
        return EXIT_RUN_FAILURE
    return EXIT_OK


# ---------------------------------------------------------------------------
# convergence: the full study
# ---------------------------------------------------------------------------

def _cmd_convergence(args) -> int:
    config = load_config(args.config)
    records = run_study(config)
    refs = analytic.reference_energies(config.problem)
    out_dir = Path(config.output_dir)
    out = emit_csv(records, out_dir / "study_records.csv")
    print(f"wrote {out}")
    fits = {}
    for method in config.methods:
        method_records = [r for r in records if r.method == method]
        try:
            fits[method] = fit_power_law(method_records, refs.Pi_total_exact)
        except ValueError as exc:
            print(f"fit skipped for {method}: {exc}")
    if fits:
        out = emit_fits_csv(fits, out_dir / "study_fits.csv")
        print(f"wrote {out}")
    for method, fit in fits.items():
        print(f"{method}: |error| ~ {fit.C:.4e} * h^{fit.alpha:.3f} "
              f"(rms log-residual {fit.residual:.2e}, {fit.n_points} points)")
    failed = [r for r in records if not r.converged]
    for r in failed:
        print(f"failed run: method={r.method} h={r.h:g}")
    return EXIT_RUN_FAILURE if failed else EXIT_OK


# ---------------------------------------------------------------------------
# timing
# ---------------------------------------------------------------------------

def _cmd_timing(args) -> int:
    config = load_config(args.config)
    records = timing_comparison(config)
    out = emit_timing_csv(records, Path(config.output_dir) / "timing.csv")
    print(f"wrote {out}")
    for r in records:
        print(f"h={r.h:g}: ee {r.ee_time_s:.3f}s  pf {r.pf_time_s:.3f}s "
              f"(x{r.ratio:.1f}, {r.pf_iterations} iterations at "
              f"eps={r.epsilon_pf:.4g})")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracture-bench",
        description="Eigenerosion vs phase-field energy benchmark on the "
                    "center-crack panel.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="analytic and closed-form self-tests")
    p_check.add_argument("--config", help="config file (defaults to the "
                                          "reference parameter set)")
    p_check.set_defaults(func=_cmd_check)

    p_run = sub.add_parser("run", help="single run of one method on one mesh")
    p_run.add_argument("--method", required=True, choices=METHOD_ORDER)
    p_run.add_argument("--h-over-d", type=float, required=True)
    p_run.add_argument("--epsilon", default="auto",
                       help="length parameter or 'auto'")
    p_run.add_argument("--config")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="phase-field epsilon sweep")
    p_sweep.add_argument("--method", default="pf")
    p_sweep.add_argument("--h-over-d", type=float, required=True)
    p_sweep.add_argument("--config")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_conv = sub.add_parser("convergence", help="full mesh-convergence study")
    p_conv.add_argument("--config", required=True)
    p_conv.set_defaults(func=_cmd_convergence)

    p_time = sub.add_parser("timing", help="EE vs PF cost comparison")
    p_time.add_argument("--config", required=True)
    p_time.set_defaults(func=_cmd_timing)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (SolverError, SweepError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
