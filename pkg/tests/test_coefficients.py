import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vrbdsde_lab.coefficients import (
    DriftSpec,
    affine_diffusion,
    constant_boundary,
    contraction_constant,
    default_probes,
    gamma_ratio,
    lattice_functional,
    linear_drift,
    ramp_boundary,
    stability_constant,
    stopped_moments,
    validate_assumptions,
    zero_diffusion,
)
from vrbdsde_lab.errors import AssumptionViolated
from vrbdsde_lab.scene import TimeGrid, build_lattice, expect_step


def drift(L=0.0, k=1.0, K=1.0):
    return linear_drift(0.0, 1.0, 0.0, k=k, K=K, lipschitz_y=L)


# constants -----------------------------------------------------------------------

def test_contraction_constant_examples():
    g0 = zero_diffusion()
    assert contraction_constant(drift(0.0), g0, 0.25) == 0.0
    assert contraction_constant(drift(0.1), g0, 0.25) == pytest.approx(0.2268, abs=5e-5)
    assert contraction_constant(drift(1.0), g0, 1.0) == pytest.approx(9.071, abs=5e-4)


def test_stability_constant_examples():
    g0 = zero_diffusion()
    assert stability_constant(drift(0.0), g0, 0.25) == 0.0
    # the closed form evaluates to 0.30694 here
    expected = math.sqrt(6) * 0.025 * (1 + math.sqrt(3) * 1.5) + 0.1 * math.sqrt(0.75)
    assert stability_constant(drift(0.1), g0, 0.25) == pytest.approx(expected, rel=1e-15)
    assert stability_constant(drift(0.1), g0, 0.25) == pytest.approx(0.30694, abs=5e-6)
    assert stability_constant(drift(0.05, k=1.0, K=2.0), g0, 0.25) == pytest.approx(0.2330, abs=5e-5)


def test_lipschitz_takes_the_larger_coefficient():
    f = drift(0.05)
    g = affine_diffusion(0.0, 0.1)
    assert contraction_constant(f, g, 0.25) == contraction_constant(drift(0.1), zero_diffusion(), 0.25)


pos = st.floats(min_value=0.01, max_value=3.0)


@given(pos, pos, pos, pos, st.floats(min_value=1.0, max_value=2.0))
def test_constants_are_monotone(T, L, k, ratio, bump):
    ratio = 1.0 + ratio
    K = k * ratio
    g0 = zero_diffusion()
    for const in (contraction_constant, stability_constant):
        base = const(drift(L, k, K), g0, T)
        assert const(drift(L, k, K), g0, T * bump) >= base
        assert const(drift(L * bump, k, K), g0, T) >= base
        assert const(drift(L, k, K * bump), g0, T) >= base
        assert const(drift(L, k / bump, K), g0, T) >= base


# validation ------------------------------------------------------------------------

def model(T=1.0, N=4):
    return build_lattice(TimeGrid(T, N))


def test_validate_constant_boundary_is_clean():
    m = model()
    X = constant_boundary(0.3).process(m)
    rep = validate_assumptions(m, linear_drift(), zero_diffusion(), X, default_probes(m))
    assert rep.ok
    assert rep.gamma_ratio_part == 0.0
    assert rep.gamma_estimate == 0.0


def test_validate_rejects_increasing_drift():
    m = model()
    f = DriftSpec(lambda t, y, l: l, 0.0, 1.0, 1.0, name="increasing")
    with pytest.raises(AssumptionViolated) as err:
        validate_assumptions(m, f, zero_diffusion(), constant_boundary().process(m), default_probes(m))
    assert err.value.check == "monotonicity"
    (t1, y1, l1), (t2, y2, l2) = err.value.witness
    assert l1 < l2 and f(t1, y1, l1) <= f(t2, y2, l2)


def test_validate_rejects_cubic_near_zero():
    m = model()
    f = DriftSpec(lambda t, y, l: -(l**3), 0.0, 1.0, 3.0, name="cubic")
    probes = default_probes(m, (-1.0, 1.0), 21)
    with pytest.raises(AssumptionViolated) as err:
        validate_assumptions(m, f, zero_diffusion(), constant_boundary().process(m), probes)
    assert err.value.check == "slope_band"
    # exploration mode records the witness instead of raising
    rep = validate_assumptions(m, f, zero_diffusion(), constant_boundary().process(m), probes, strict=False)
    assert rep.monotonicity_ok and not rep.slope_band_ok
    assert "slope_band" in rep.witnesses


def test_validate_rejects_understated_lipschitz():
    m = model()
    f = linear_drift(0.0, 1.0, 0.5, lipschitz_y=0.1)
    with pytest.raises(AssumptionViolated) as err:
        validate_assumptions(m, f, zero_diffusion(), constant_boundary().process(m), default_probes(m))
    assert err.value.check == "lipschitz_f"


def test_gamma_override():
    m = model()
    X = ramp_boundary().process(m)
    probes = default_probes(m)
    rep = validate_assumptions(m, linear_drift(), zero_diffusion(), X, probes, gamma=5.0)
    assert rep.gamma_estimate == 5.0
    with pytest.raises(AssumptionViolated):
        validate_assumptions(m, linear_drift(), zero_diffusion(), X, probes, gamma=1.0)


def test_empty_probe_grid():
    m = model()
    with pytest.raises(ValueError):
        validate_assumptions(m, linear_drift(), zero_diffusion(), constant_boundary().process(m), [])


@given(
    st.floats(min_value=-1, max_value=1),
    st.floats(min_value=0.1, max_value=3),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_linear_drifts_are_accepted(amp, b, c_frac, k_frac, K_extra):
    m = model(N=3)
    L = 0.5
    c = (2 * c_frac - 1) * L
    k = b * (0.2 + 0.8 * k_frac)
    K = b * (1 + K_extra)
    f = DriftSpec(lambda t, y, l: amp * math.sin(3 * t) - b * l + c * y, L, k, K, name="linear_t")
    rep = validate_assumptions(m, f, affine_diffusion(0.1, 0.0), constant_boundary().process(m), default_probes(m))
    assert rep.ok


# Gamma estimate ----------------------------------------------------------------------

def test_gamma_ratio_for_ramp_is_max_slope():
    m = model()
    assert gamma_ratio(m, ramp_boundary().process(m), zero_diffusion()) == pytest.approx(2.0, abs=1e-12)


def test_gamma_ratio_with_noise_term():
    # E[W_tj^2 - W_ti^2] = t_j - t_i, and the g part 0.1 sqrt(span)/span peaks at span = dt
    m = model(T=1.0, N=4)
    X = lattice_functional("w2").process(m)
    assert gamma_ratio(m, X, affine_diffusion(0.1, 0.0)) == pytest.approx(1.0 + 0.1 / math.sqrt(0.25), abs=1e-12)


def test_stopped_moments_deterministic_and_hitting():
    m = model(T=1.0, N=4)
    X = lattice_functional("w2").process(m)
    (v,), span, _ = stopped_moments(m, [X], 1, end=3)
    cond = expect_step(expect_step(X[3]))
    assert np.allclose(v, cond)
    assert np.allclose(span, 0.5)
    # level 0 is hit at the next step on every path
    (v0,), span0, _ = stopped_moments(m, [X], 1, ref=X, level=0.0)
    assert np.allclose(v0, expect_step(X[2])) and np.allclose(span0, 0.25)
    # an unreachable level never stops before N
    (vn,), spann, _ = stopped_moments(m, [X], 1, ref=X, level=1e9)
    assert np.allclose(vn, expect_step(expect_step(expect_step(X[4])))) and np.allclose(spann, 0.75)
