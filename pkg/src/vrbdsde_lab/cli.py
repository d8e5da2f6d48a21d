"""Command-line entry point.

    vrlab <experiment> --config scenario.toml --out results/ [--strict] [--seed N]

Writes ``nodes.csv``, ``summary.txt`` and ``verdict.txt`` (plus ``stability.csv``
for stability runs).  Exit codes: 0 every assertion passed, 2 an assertion
failed (reports are still written), 3 precondition or config error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import config as cfgmod
from .analysis import Problem, apriori_bounds, compare, stability_experiment
from .coefficients import (
    contraction_constant,
    default_probes,
    lipschitz,
    stability_constant,
    validate_assumptions,
)
from .errors import (
    AssumptionViolated,
    BracketExhausted,
    ClampedIndex,
    ConfigError,
    ContractionViolated,
    GridTooLarge,
    LabError,
    NoConvergence,
)
from .representation import default_tol, freeze, index_process, verify_representation
from .reports import csv_text, summary_text, table_text, verdict_text, write_outputs
from .scene import TimeGrid, build_lattice
from .skorohod import solve_skorohod
from .vrbdsde import _boundary, solve

EXIT_PASS, EXIT_ASSERT, EXIT_PRECONDITION = 0, 2, 3


class RunResult:
    def __init__(self, code: int, files: dict, message: str = ""):
        self.code = code
        self.files = files
        self.message = message


def _common_summary(cfg, model, f, g, opts) -> dict:
    T = cfg.grid.T
    tol_l = opts.tol_l if opts.tol_l is not None else default_tol(opts.bracket)
    return {
        "experiment": cfg.experiment,
        "mode": "strict" if opts.strict else "exploration",
        "seed": cfg.seed,
        "grid.T": T,
        "grid.N": cfg.grid.N,
        "grid.dt": model.dt,
        "lattice.path_states": model.path_state_count,
        "constants.L_y": lipschitz(f, g),
        "constants.k": f.lower_slope,
        "constants.K": f.upper_slope,
        "constants.contraction": contraction_constant(f, g, T),
        "constants.stability": stability_constant(f, g, T),
        "tolerances.tol_l": tol_l,
        "tolerances.tol_fp": "default" if opts.tol_fp is None else opts.tol_fp,
        "output.granularity": cfg.output.granularity,
    }


def _solution_columns(sol) -> dict:
    gap = [x - y for x, y in zip(sol.X, sol.Y)]
    return {"X": sol.X, "Y": sol.Y, "Z": sol.Z, "A": sol.A, "L": sol.L.L, "X_minus_Y": gap}


def _probes(cfg, model):
    v = cfg.validate
    return default_probes(model, (v.l_min, v.l_max), v.n_l, tuple(v.ys))


def _check_assumptions(cfg, model, f, g, X, strict: bool):
    v = cfg.validate
    return validate_assumptions(
        model, f, g, X, _probes(cfg, model), gamma=v.gamma, strict=strict, family=v.family, levels=tuple(v.levels)
    )


def run_config(cfg) -> RunResult:
    """Execute one experiment; exceptions for misuse propagate to :func:`main`."""
    try:
        model = build_lattice(TimeGrid(cfg.grid.T, cfg.grid.N))
    except GridTooLarge as exc:
        raise ConfigError("grid.N", str(exc)) from None
    model.require_path_budget()
    f = cfgmod.build_drift(cfg.drift)
    g = cfgmod.build_diffusion(cfg.diffusion)
    Xspec = cfgmod.build_boundary(cfg.boundary)
    opts = cfgmod.build_solver(cfg.solver)
    X = _boundary(model, Xspec, opts.dense)
    summary = _common_summary(cfg, model, f, g, opts)
    gran = cfg.output.granularity
    files: dict = {}

    # structural assumptions are a precondition in strict mode, a report otherwise
    rep = _check_assumptions(cfg, model, f, g, X, strict=opts.strict)
    summary.update({f"assumptions.{k}": v for k, v in rep.to_summary().items()})
    summary["assumptions.ok"] = rep.ok

    exp = cfg.experiment
    if exp == "validate":
        ok = rep.ok
        files["nodes.csv"] = csv_text(model, {"X": X}, gran)

    elif exp == "represent":
        coeffs = freeze(model, f, g)
        res = index_process(model, coeffs, X, opts.bracket, opts.tol_l, strict=opts.strict)
        check = verify_representation(model, coeffs, X, res)
        summary.update(
            {
                "represent.max_residual": check.max_residual,
                "represent.tolerance": check.tolerance,
                "represent.excluded_states": check.excluded,
                "represent.ok": check.ok,
                "clamp_count": res.clamp_count,
            }
        )
        ok = check.ok and res.clamp_count == 0
        files["nodes.csv"] = csv_text(model, {"X": X, "L": res.L, "clamped": [c.astype(float) for c in res.clamped]}, gran)

    elif exp == "skorohod":
        # y frozen at zero: the Skorohod problem behind the a priori index bound
        sk = solve_skorohod(model, freeze(model, f, g), X, opts.skorohod())
        d = sk.diagnostics
        tol_l = sk.L.tol_l
        eps_v = f.upper_slope * tol_l * cfg.grid.T + 1e-12
        checks = {
            "y_below_boundary": d["max_y_minus_x"] <= eps_v,
            "y0_equals_x0": d["y0_gap"] <= eps_v,
            "terminal_condition": d["terminal_gap"] <= eps_v,
            "flat_off": sk.flat_off_residual <= max(1e-10, eps_v),
        }
        summary.update({f"skorohod.{k}": v for k, v in d.items()})
        summary["skorohod.flat_off_residual"] = sk.flat_off_residual
        summary.update({f"check.{k}": v for k, v in checks.items()})
        summary["clamp_count"] = d["clamp_count"]
        ok = all(checks.values())
        files["nodes.csv"] = csv_text(model, {"X": sk.X, "Y": sk.Y, "Z": sk.Z, "A": sk.A, "L": sk.L.L}, gran)

    elif exp == "solve":
        sol = solve(model, f, g, X, opts)
        summary.update(_solution_summary(sol))
        ok = sol.ok and sol.certified
        files["nodes.csv"] = csv_text(model, _solution_columns(sol), gran)

    elif exp == "compare":
        c = cfg.compare
        f2 = cfgmod.build_drift(c.drift) if c.drift is not None else f
        X2 = cfgmod.build_boundary(c.boundary) if c.boundary is not None else Xspec
        if opts.strict:
            _check_assumptions(cfg, model, f2, g, _boundary(model, X2, opts.dense), strict=True)
        report = compare(
            model, Problem(f, g, Xspec, "1"), Problem(f2, g, X2, "2"),
            epsilon=c.epsilon, opts=opts, probes=_probes(cfg, model), tol=c.tol,
        )
        summary.update({f"compare.{k}": v for k, v in report.to_summary().items()})
        summary["clamp_count"] = report.sol1.skorohod.L.clamp_count + report.sol2.skorohod.L.clamp_count
        ok = report.ok
        s1, s2 = report.sol1, report.sol2
        files["nodes.csv"] = csv_text(
            model, {
                "X1": s1.X, "X2": s2.X, "Y1": s1.Y, "Y2": s2.Y, "A1": s1.A, "A2": s2.A,
                "A2_minus_A1": [b - a for a, b in zip(s1.A, s2.A)],
            }, gran
        )

    elif exp == "stability":
        st = cfg.stability
        perts = [(f"shift_{repr(float(s))}", Xspec.shifted(s)) for s in st.shifts]
        for i, b in enumerate(st.boundaries):
            perts.append((f"boundary_{i}_{b.preset}", cfgmod.build_boundary(b)))
        if opts.strict:
            for _, Xn in perts:
                _check_assumptions(cfg, model, f, g, _boundary(model, Xn, opts.dense), strict=True)
        reports = stability_experiment(
            model, f, g, Xspec, perts, opts=opts, family=st.family, levels=tuple(st.levels), tol=st.tol
        )
        header = ["label", "m_gap", "xi_gap", "y_gap", "a_gap", "bound_rhs", "bound_ok", "a_bound", "a_bound_ok", "a_bound_lattice"]
        rows = [
            [r.label, r.m_gap, r.xi_gap, r.y_gap, r.a_gap, r.bound_rhs, r.bound_ok, r.a_bound, r.a_bound_ok, r.a_bound_lattice]
            for r in reports
        ]
        files["stability.csv"] = table_text(header, rows)
        for r in reports:
            summary.update(r.to_summary())
        summary["stability.family"] = st.family
        ok = all(r.bound_ok for r in reports)
        base = solve(model, f, g, X, opts)
        summary["clamp_count"] = base.skorohod.L.clamp_count
        files["nodes.csv"] = csv_text(model, _solution_columns(base), gran)

    elif exp == "bounds":
        b = cfg.bounds
        X_alt = Xspec.shifted(b.shift) if b.shift is not None else None
        report = apriori_bounds(
            model, f, g, Xspec, b.y, b.y_prime, X_alt=X_alt, gamma=cfg.validate.gamma,
            opts=opts, family=b.family, levels=tuple(b.levels),
        )
        summary.update(report.to_summary())
        summary["bounds.failing"] = ",".join(report.failing()) or "none"
        ok = report.ok
        a0 = solve_skorohod(model, freeze(model, f, g), X, opts.skorohod()).A
        summary["clamp_count"] = 0
        files["nodes.csv"] = csv_text(model, {"X": X, "A0": a0}, gran)
    else:  # pragma: no cover - rejected by config validation
        raise ConfigError("experiment", f"unknown experiment {exp!r}")

    code = EXIT_PASS if ok else EXIT_ASSERT
    summary["verdict"] = "PASS" if ok else "FAIL"
    summary["exit_code"] = code
    files["summary.txt"] = summary_text(summary)
    files["verdict.txt"] = verdict_text(code)
    return RunResult(code, files)


def _solution_summary(sol) -> dict:
    out = {
        "solve.iterations": sol.iterations,
        "solve.certified": sol.certified,
        "solve.contraction_constant": sol.contraction_constant,
        "solve.tol_fp": sol.tol_fp,
        "solve.y0_policy": sol.y0_policy,
        "solve.final_residual": sol.residual_history[-1],
        "solve.max_ratio": max(sol.ratios) if sol.ratios else 0.0,
        "solve.flat_off_residual": sol.skorohod.flat_off_residual,
        "clamp_count": sol.skorohod.L.clamp_count,
    }
    for k, v in sol.checks.items():
        out[f"check.{k}"] = v
    for k, v in sol.skorohod.diagnostics.items():
        out[f"diagnostic.{k}"] = v
    out["solve.residual_history"] = " ".join(repr(float(h)) for h in sol.residual_history)
    return out


def _error_result(cfg, code: int, message: str) -> RunResult:
    summary = {"error": message.replace("\n", " "), "exit_code": code, "verdict": "FAIL"}
    if cfg is not None:
        summary["experiment"] = cfg.experiment
        summary["seed"] = cfg.seed
        summary["mode"] = "strict" if cfg.solver.strict else "exploration"
    return RunResult(code, {"summary.txt": summary_text(summary), "verdict.txt": verdict_text(code)}, message)


def execute(cfg) -> RunResult:
    try:
        return run_config(cfg)
    except NoConvergence as exc:
        return _error_result(cfg, EXIT_ASSERT, str(exc))
    except (ConfigError, ContractionViolated, AssumptionViolated, GridTooLarge) as exc:
        return _error_result(cfg, EXIT_PRECONDITION, str(exc))
    except (ClampedIndex, BracketExhausted) as exc:
        return _error_result(cfg, EXIT_PRECONDITION, f"config key 'solver.bracket': {exc}")
    except LabError as exc:
        return _error_result(cfg, EXIT_PRECONDITION, str(exc))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vrlab", description=__doc__.splitlines()[0])
    p.add_argument("experiment", choices=cfgmod.EXPERIMENTS)
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--strict", action="store_true", help="force strict mode (preconditions raise)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed (echoed only)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    try:
        cfg = cfgmod.load(args.config)
        if cfg.experiment != args.experiment:
            # the subcommand wins; the summary records what actually ran
            cfg = replace(cfg, experiment=args.experiment)
        if args.strict:
            cfg = replace(cfg, solver=replace(cfg.solver, strict=True))
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        result = execute(cfg)
    except ConfigError as exc:
        result = _error_result(cfg, EXIT_PRECONDITION, str(exc))
    write_outputs(args.out, result.files)
    if result.message:
        print(f"vrlab: {result.message}", file=sys.stderr)
    print(result.files["verdict.txt"].strip())
    return result.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
