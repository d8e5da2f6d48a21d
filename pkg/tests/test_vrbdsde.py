import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrbdsde_lab.coefficients import (
    BoundarySpec,
    affine_diffusion,
    constant_boundary,
    contraction_constant,
    convex_boundary,
    lattice_functional,
    linear_drift,
    ramp_boundary,
    zero_diffusion,
)
from vrbdsde_lab.errors import ContractionViolated, NoConvergence
from vrbdsde_lab.representation import freeze
from vrbdsde_lab.scenarios import get
from vrbdsde_lab.scene import TimeGrid, build_lattice, sup_norm
from vrbdsde_lab.skorohod import solve_skorohod
from vrbdsde_lab.vrbdsde import SolverOptions, phi_map, solve, with_policy


def zeros(m):
    return [np.zeros((1, 1)) for _ in range(m.steps + 1)]


def test_phi_of_zero_with_constant_boundary():
    m = build_lattice(TimeGrid(1.0, 4))
    sol = phi_map(m, linear_drift(), zero_diffusion(), constant_boundary(0.2), zeros(m))
    for y, x in zip(sol.Y, sol.X):
        assert np.all(np.abs(y - x) <= sol.L.tol_l)


def test_phi_with_y_independent_drift_ignores_y():
    m = build_lattice(TimeGrid(1.0, 4))
    y1 = zeros(m)
    y2 = [np.full((1, 1), 3.0) for _ in range(m.steps + 1)]
    a = phi_map(m, linear_drift(), affine_diffusion(0.2), lattice_functional("w2"), y1)
    b = phi_map(m, linear_drift(), affine_diffusion(0.2), lattice_functional("w2"), y2)
    assert sup_norm(a.Y, b.Y) == 0.0


def test_phi_reduces_to_the_ramp_oracle_at_zero():
    m = build_lattice(TimeGrid(1.0, 8))
    sol = phi_map(m, linear_drift(0.0, 1.0, 0.1), zero_diffusion(), ramp_boundary(), zeros(m))
    for i, (a, y) in enumerate(zip(sol.A, sol.Y)):
        assert np.all(np.abs(a - 1.0) <= 1e-10)
        assert np.all(np.abs(y - m.t(i)) <= 1e-10)


@pytest.mark.parametrize("name", ["ramp", "convex", "linear", "constant"])
def test_y_independent_coefficients_take_two_iterations(name):
    sc = get(name)
    m = sc.model()
    sol = solve(m, sc.f, sc.g, sc.X)
    assert sol.iterations == 2
    assert sol.residual_history[-1] == 0.0
    direct = solve_skorohod(m, freeze(m, sc.f, sc.g), sc.X.process(m))
    assert sup_norm(sol.Y, direct.Y) == 0.0
    assert sol.ok


def test_contraction_scenario_ratios():
    sc = get("contraction")
    m = sc.model()
    c = contraction_constant(sc.f, sc.g, sc.horizon)
    assert c == pytest.approx(0.2268, abs=5e-5)
    sol = solve(m, sc.f, sc.g, sc.X)
    assert sol.ok and sol.certified
    assert sol.iterations <= 15
    assert all(r <= c for r in sol.ratios)


def test_refuses_non_contractive_problem():
    m = build_lattice(TimeGrid(1.0, 4))
    f = linear_drift(0.0, 1.0, 1.0)
    g = affine_diffusion(0.0, 1.0)
    with pytest.raises(ContractionViolated) as err:
        solve(m, f, g, ramp_boundary())
    assert err.value.constant == pytest.approx(9.071, abs=5e-4)
    assert "drift.lipschitz_y" in str(err.value)


def test_iteration_budget():
    sc = get("contraction")
    m = sc.model()
    with pytest.raises(ValueError):
        solve(m, sc.f, sc.g, sc.X, SolverOptions(max_iter=1))
    with pytest.raises(NoConvergence):
        solve(m, sc.f, sc.g, sc.X, SolverOptions(max_iter=2, tol_fp=1e-15))


def test_fixed_point_residual():
    sc = get("multiplicative_noise")
    m = sc.model()
    sol = solve(m, sc.f, sc.g, sc.X)
    again = phi_map(m, sc.f, sc.g, sc.X, sol.Y)
    assert sup_norm(again.Y, sol.Y) <= sol.tol_fp


def test_two_starts_agree():
    sc = get("contraction")
    m = sc.model()
    opts = SolverOptions()
    a = solve(m, sc.f, sc.g, sc.X, with_policy(opts, "boundary"))
    b = solve(m, sc.f, sc.g, sc.X, with_policy(opts, "zero"))
    c = a.contraction_constant
    assert sup_norm(a.Y, b.Y) <= 2 * a.tol_fp / (1 - c)
    with pytest.raises(ValueError):
        solve(m, sc.f, sc.g, sc.X, with_policy(opts, "random"))


@settings(max_examples=10)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 0.2), st.floats(0, 0.2))
def test_converges_geometrically(a, b, cy, gy):
    m = build_lattice(TimeGrid(0.25, 4))
    f = linear_drift(0.0, 1.0, cy)
    g = affine_diffusion(0.05, gy)
    X = BoundarySpec(lambda t, w: a * w + b * w * w, True)
    sol = solve(m, f, g, X)
    assert sol.ok
    assert all(r <= sol.contraction_constant for r in sol.ratios if r > 0)


def test_zero_noise_solution_ignores_backward_path():
    m = build_lattice(TimeGrid(0.25, 5))
    f = linear_drift(0.0, 1.0, 0.2)
    sol = solve(m, f, zero_diffusion(), convex_boundary(), SolverOptions(dense=True))
    for series in (sol.Y, sol.Z, sol.A, sol.L.L):
        for s in series:
            assert np.max(np.abs(s - s[:, :1])) <= 1e-12
