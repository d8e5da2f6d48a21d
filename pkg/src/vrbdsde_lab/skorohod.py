"""Variant Skorohod problem: (Y, Z, A) from frozen coefficients and a boundary."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClampedIndex
from .representation import FrozenCoefficients, RepresentationResult, index_process
from .scene import LatticeModel, branches, expect_step, grow


@dataclass(frozen=True)
class SkorohodOptions:
    bracket: tuple = (-1.0, 1.0)
    tol_l: float | None = None
    strict: bool = False
    dense: bool = False


@dataclass
class SkorohodSolution:
    Y: list
    Z: list
    A: list
    X: list
    L: RepresentationResult
    flat_off_residual: float = 0.0
    # A_{0-} = -inf is carried as a flag: the t=0 mass of dA is never weighed
    a_starts_at_minus_infinity: bool = True
    diagnostics: dict = field(default_factory=dict)


def running_max(L: list) -> list:
    """A_i = max_{j<=i} L_j along every path; A_N repeats A_{N-1}."""
    A = [np.asarray(L[0], dtype=float)]
    for Ls in L[1:]:
        A.append(np.maximum(grow(A[-1]), Ls))
    A.append(grow(A[-1]))
    return A


def backward_y(model: LatticeModel, coeffs: FrozenCoefficients, X: list, A: list) -> tuple[list, list]:
    """Y_N = xi, Y_i = E[Y_{i+1} | i] + f(t_i, y_i, A_i) dt + g dB;  Z from the W-branch spread."""
    n = model.steps
    dt = model.dt
    Y = [None] * (n + 1)
    Z = [None] * n
    Y[n] = np.asarray(X[n], dtype=float)
    for i in range(n - 1, -1, -1):
        Y[i] = expect_step(Y[i + 1]) + coeffs.drift(i, A[i]) * dt + coeffs.gdb[i]
        # Z solves Y_{i+1} + g_{i+1} dB_i - E[.] = Z dW on both W branches
        nxt = Y[i + 1]
        if not coeffs.g.identically_zero:
            gnext = np.broadcast_to(coeffs.diff(i + 1), np.broadcast_shapes(coeffs.diff(i + 1).shape, coeffs.y[i + 1].shape))
            nxt = nxt + gnext * model.delta_b(i)
        up, down = branches(nxt)
        Z[i] = (up - down) / (2.0 * model.sqrt_dt)
    return Y, Z


def flat_off_residual(sol: SkorohodSolution) -> float:
    """E sum_{i>=1} |Y_i - X_i| (A_i - A_{i-1}); the t=0 jump is not weighed."""
    total = 0.0
    for i in range(1, len(sol.Y)):
        dA = sol.A[i] - grow(sol.A[i - 1])
        total += float(np.mean(np.abs(sol.Y[i] - sol.X[i]) * dA))
    return total


def _diagnostics(model: LatticeModel, sol: SkorohodSolution) -> dict:
    n = model.steps
    above = max(float(np.max(y - x)) for y, x in zip(sol.Y, sol.X))
    dec = max(float(np.max(grow(sol.A[i - 1]) - sol.A[i])) for i in range(1, n + 1))
    jump = max(float(np.max(np.abs(sol.Y[i + 1] - grow(sol.Y[i])))) for i in range(n))
    defect = 0.0
    for i in range(n + 1):
        defect = max(defect, model.project(sol.Y[i], i)[1])
    a_defect = max(model.project(sol.A[i], i)[1] for i in range(n + 1))
    return {
        "max_y_minus_x": above,
        "y0_gap": float(np.max(np.abs(sol.Y[0] - sol.X[0]))),
        "terminal_gap": float(np.max(np.abs(sol.Y[n] - sol.X[n]))),
        "max_a_decrease": dec,
        "max_y_jump": jump,
        "y_measurability_defect": defect,
        "a_measurability_defect": a_defect,
        "clamp_count": sol.L.clamp_count,
    }


def solve_skorohod(
    model: LatticeModel, coeffs: FrozenCoefficients, X: list, opts: SkorohodOptions | None = None
) -> SkorohodSolution:
    opts = opts or SkorohodOptions()
    if opts.dense:
        X = [np.array(model.full(x, i)) for i, x in enumerate(X)]
    rep = index_process(model, coeffs, X, opts.bracket, opts.tol_l)
    if opts.strict and rep.clamp_count:
        raise ClampedIndex(f"{rep.clamp_count} index values hit the search bracket; widen solver.bracket")
    A = running_max(rep.L)
    Y, Z = backward_y(model, coeffs, X, A)
    sol = SkorohodSolution(Y, Z, A, list(X), rep)
    sol.flat_off_residual = flat_off_residual(sol)
    sol.diagnostics = _diagnostics(model, sol)
    return sol
