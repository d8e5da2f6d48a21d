import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vrbdsde_lab.analysis import (
    Problem,
    _summary_value,
    apriori_bounds,
    compare,
    first_gap_times,
    m_gap,
    parse_summary_value,
    stability_experiment,
)
from vrbdsde_lab.coefficients import (
    affine_diffusion,
    constant_boundary,
    linear_drift,
    ramp_boundary,
    zero_diffusion,
)
from vrbdsde_lab.scenarios import get
from vrbdsde_lab.scene import TimeGrid, build_lattice


def lattice(T=0.25, N=5):
    return build_lattice(TimeGrid(T, N))


# comparison -------------------------------------------------------------------------

def test_identical_problems():
    m = lattice()
    f, g, X = linear_drift(0.0, 1.0, 0.1), affine_diffusion(0.1), ramp_boundary()
    rep = compare(m, Problem(f, g, X), Problem(f, g, X))
    assert rep.ok and rep.status == "ok"
    assert rep.a_order_violation == 0.0 and rep.y_order_violation == 0.0
    assert np.all(rep.mu == m.steps)


def test_larger_drift_gives_larger_index():
    m = lattice()
    g, X = zero_diffusion(), ramp_boundary()
    rep = compare(m, Problem(linear_drift(0.1), g, X), Problem(linear_drift(0.0), g, X))
    assert rep.hypotheses_ok and rep.a_order_ok
    assert rep.y_order_ok is None


def test_constant_shift_orders_y():
    m = lattice()
    f, g = linear_drift(), zero_diffusion()
    rep = compare(m, Problem(f, g, ramp_boundary()), Problem(f, g, ramp_boundary().shifted(0.1)))
    assert rep.hypotheses_ok
    assert rep.a_order_ok and rep.y_order_ok


def test_constant_shift_needs_zero_lipschitz_constant():
    # with L > 0 the weight exp((L + L^2/2)(t - s)) makes a constant gap fail
    m = lattice()
    f, g = linear_drift(0.0, 1.0, 0.1), affine_diffusion(0.1)
    rep = compare(m, Problem(f, g, ramp_boundary()), Problem(f, g, ramp_boundary().shifted(0.1)))
    assert [h.hypothesis for h in rep.failures] == ["difference_submartingale"]
    rate = 0.1 + 0.005
    assert rep.failures[0].excess == pytest.approx(0.1 * (math.exp(rate * 0.25) - 1), rel=1e-9)
    # and the conclusion does fail: the larger boundary lifts Y, which lifts A through f
    assert not rep.a_order_ok


def test_swapped_drifts_fail_the_hypothesis():
    m = lattice()
    g, X = zero_diffusion(), ramp_boundary()
    rep = compare(m, Problem(linear_drift(0.0), g, X), Problem(linear_drift(0.1), g, X))
    assert rep.status == "HypothesisFailed"
    assert [h.hypothesis for h in rep.failures] == ["drift_order"]
    assert rep.failures[0].excess == pytest.approx(0.1)
    # the ordering is still measured and does fail; the mirrored order holds
    assert not rep.a_order_ok
    mirrored = max(float(np.max(a1 - a2)) for a1, a2 in zip(rep.sol1.A, rep.sol2.A))
    assert mirrored <= 1e-8


def test_different_diffusions_are_flagged():
    m = lattice()
    f, X = linear_drift(), ramp_boundary()
    rep = compare(m, Problem(f, affine_diffusion(0.1), X), Problem(f, affine_diffusion(0.2), X))
    assert not rep.hypotheses["shared_diffusion"]
    assert rep.status == "HypothesisFailed"


def test_first_gap_times():
    m = lattice(N=3)
    A2 = [np.zeros((1, 1))] * 4
    # first W move up: A1 drops to -1 at time 1; second move up: recovers to -0.2 at time 2
    A1 = [
        np.zeros((1, 1)),
        np.array([[0.0], [-1.0]]),
        np.array([[0.0], [-1.0], [0.0], [-0.2]]),
        np.array([[0.0], [-1.0], [0.0], [-0.2]] * 2),
    ]
    mu, tau = first_gap_times(m, A1, A2, 0.5)
    # -0.2 > 0 - 0.25 ends the excursion, -1 does not
    assert mu[:, 0].tolist() == [3, 1, 3, 1] * 2
    assert tau[:, 0].tolist() == [3, 3, 3, 2] * 2


# stability --------------------------------------------------------------------------

def test_constant_shifts_are_exact():
    sc = get("additive_noise")
    m = sc.model()
    reps = stability_experiment(m, sc.f, sc.g, sc.X, [(f"n{n}", sc.X.shifted(1 / n)) for n in (1, 2, 4, 8)])
    for n, r in zip((1, 2, 4, 8), reps):
        assert r.m_gap <= 1e-13  # the shift cancels up to rounding
        assert r.xi_gap == pytest.approx(1 / n, abs=1e-15)
        assert r.y_gap == pytest.approx(1 / n, abs=1e-10)
        assert r.bound_ok and r.a_bound_ok
    ys = [r.y_gap for r in reps]
    as_ = [r.a_gap for r in reps]
    assert ys == sorted(ys, reverse=True) and as_ == sorted(as_, reverse=True)


def test_identical_perturbation_has_zero_gaps():
    sc = get("additive_noise")
    m = sc.model()
    (r,) = stability_experiment(m, sc.f, sc.g, sc.X, [("same", sc.X)])
    assert (r.m_gap, r.xi_gap, r.y_gap, r.a_gap) == (0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_slope_perturbation_respects_bound(n):
    sc = get("additive_noise")
    m = sc.model()
    (r,) = stability_experiment(m, sc.f, sc.g, sc.X, [("slope", ramp_boundary(2.0 + 1 / n, 1.0))])
    assert r.m_gap == pytest.approx(1 / n, rel=1e-9)
    assert r.bound_ok


def test_m_gap_hitting_family_is_no_smaller():
    sc = get("brownian_square")
    m = sc.model()
    Xa = sc.X.process(m)
    Xb = [x + 0.3 * m.t(i) ** 2 for i, x in enumerate(Xa)]
    assert m_gap(m, Xb, Xa, "grid+hitting", (0.1, 0.3)) >= m_gap(m, Xb, Xa) - 1e-15


# a priori bounds ----------------------------------------------------------------------

def test_index_sup_bound_for_ramp():
    m = lattice(T=1.0, N=8)
    rep = apriori_bounds(m, linear_drift(), zero_diffusion(), ramp_boundary())
    (chk,) = rep.checks
    assert rep.gamma_hat == pytest.approx(2.0)
    assert chk.bound == pytest.approx(3 * math.sqrt(3) * 2.0)
    assert chk.measured == pytest.approx(1.0, abs=1e-10)
    assert rep.ok


def test_index_sup_bound_for_constant_boundary():
    m = lattice(T=1.0, N=4)
    rep = apriori_bounds(m, linear_drift(), zero_diffusion(), constant_boundary(1.0))
    assert rep.gamma_hat == 0.0 and rep.ok


def test_index_lipschitz_example():
    m = lattice(T=0.25, N=6)
    rep = apriori_bounds(m, linear_drift(0.0, 1.0, 0.1), zero_diffusion(), ramp_boundary(), 0.0, 0.1)
    chk = {c.name: c for c in rep.checks}["index_lipschitz"]
    assert chk.bound == pytest.approx(math.sqrt(2) * 0.1 * 1.5 * 0.1)
    assert chk.measured == pytest.approx(0.01, abs=1e-9)
    assert chk.ok


def test_index_lipschitz_with_y_dependent_noise_needs_lattice_bound():
    sc = get("contraction")
    m = sc.model()
    rep = apriori_bounds(m, sc.f, sc.g, sc.X, 0.0, 0.1)
    checks = {c.name: c for c in rep.checks}
    # a one-step stopping time sees L_g / sqrt(dt) per unit of y gap
    assert not checks["index_lipschitz"].ok
    assert checks["index_lipschitz_lattice"].ok
    assert rep.failing() == ["index_lipschitz"]


# summaries --------------------------------------------------------------------------

@given(st.one_of(st.booleans(), st.none(), st.integers(), st.floats(allow_nan=False), st.text("abc_.")))
def test_summary_values_round_trip(v):
    back = parse_summary_value(_summary_value(v))
    if isinstance(v, str) and v in ("True", "False", "None"):
        return
    if isinstance(v, str):
        try:
            float(v)
            return
        except ValueError:
            pass
    assert back == v and type(back) is type(v)
