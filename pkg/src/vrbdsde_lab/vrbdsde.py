"""Picard iteration of y -> Phi(y) for the full reflected doubly stochastic equation."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .coefficients import BoundarySpec, DiffusionSpec, DriftSpec, contraction_constant
from .errors import ContractionViolated, NoConvergence
from .representation import freeze
from .scene import LatticeModel, sup_norm
from .skorohod import SkorohodOptions, SkorohodSolution, solve_skorohod

Y0_POLICIES = ("boundary", "zero")


@dataclass(frozen=True)
class SolverOptions:
    tol_fp: float | None = None
    tol_l: float | None = None
    max_iter: int = 200
    strict: bool = True
    y0_policy: str = "boundary"
    bracket: tuple = (-1.0, 1.0)
    dense: bool = False
    flat_off_tol: float | None = None

    def skorohod(self) -> SkorohodOptions:
        return SkorohodOptions(self.bracket, self.tol_l, self.strict, self.dense)


@dataclass
class Solution:
    Y: list
    Z: list
    A: list
    X: list
    skorohod: SkorohodSolution
    iterations: int
    residual_history: list
    contraction_constant: float
    certified: bool
    y0_policy: str
    tol_fp: float
    checks: dict = field(default_factory=dict)

    @property
    def L(self):
        return self.skorohod.L

    @property
    def ratios(self) -> list:
        h = self.residual_history
        return [b / a for a, b in zip(h, h[1:]) if a > 0]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _boundary(model: LatticeModel, X, dense: bool) -> list:
    if isinstance(X, BoundarySpec):
        return X.process(model, dense=dense)
    return [np.array(model.full(x, i)) if dense else np.asarray(x, dtype=float) for i, x in enumerate(X)]


def phi_map(
    model: LatticeModel, f: DriftSpec, g: DiffusionSpec, X, y: list, opts: SolverOptions | None = None
) -> SkorohodSolution:
    """Freeze y into (f, g) state by state and solve the Skorohod problem."""
    opts = opts or SolverOptions()
    Xp = _boundary(model, X, opts.dense)
    return solve_skorohod(model, freeze(model, f, g, y), Xp, opts.skorohod())


def initial_guess(model: LatticeModel, Xp: list, policy: str) -> list:
    if policy == "boundary":
        return [np.asarray(x, dtype=float) for x in Xp]
    if policy == "zero":
        return [np.zeros((1, 1)) for _ in range(model.steps + 1)]
    raise ValueError(f"unknown y0 policy {policy!r}; expected one of {Y0_POLICIES}")


def solve(model: LatticeModel, f: DriftSpec, g: DiffusionSpec, X, opts: SolverOptions | None = None) -> Solution:
    opts = opts or SolverOptions()
    T = model.grid.horizon
    c = contraction_constant(f, g, T)
    if c >= 1 and opts.strict:
        raise ContractionViolated(c)
    Xp = _boundary(model, X, opts.dense)
    x_norm = max(float(np.max(np.abs(x))) for x in Xp)
    tol_fp = opts.tol_fp if opts.tol_fp is not None else 1e-9 * (1 + x_norm)
    sk_opts = opts.skorohod()

    y = initial_guess(model, Xp, opts.y0_policy)
    history: list = []
    sol = None
    if opts.max_iter < 2:
        raise ValueError("max_iter must be at least 2 (one step plus a confirming step)")
    for m in range(1, opts.max_iter + 1):
        sol = solve_skorohod(model, freeze(model, f, g, y), Xp, sk_opts)
        gap = sup_norm(sol.Y, y)
        history.append(gap)
        y = sol.Y
        # the first application only reaches a candidate; a second one confirms it
        if gap < tol_fp and m >= 2:
            break
    else:
        raise NoConvergence(opts.max_iter, history[-1])

    eps_v = f.upper_slope * sol.L.tol_l * T + 1e-12
    flat_tol = opts.flat_off_tol if opts.flat_off_tol is not None else max(1e-10, eps_v)
    d = sol.diagnostics
    checks = {
        "y_below_boundary": d["max_y_minus_x"] <= eps_v,
        "terminal_condition": d["terminal_gap"] <= eps_v,
        "flat_off": sol.flat_off_residual <= flat_tol,
        "y0_equals_x0": d["y0_gap"] <= eps_v,
        "a_nondecreasing": d["max_a_decrease"] <= 0.0,
    }
    return Solution(sol.Y, sol.Z, sol.A, Xp, sol, m, history, c, c < 1, opts.y0_policy, tol_fp, checks)


def with_policy(opts: SolverOptions, policy: str) -> SolverOptions:
    return replace(opts, y0_policy=policy)
