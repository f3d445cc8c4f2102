import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lattice_homog.analysis import (
    ErrorAccumulator,
    ErrorReport,
    averaging_operator_bound,
    averaging_profile,
    corrector_constant,
    error_metrics,
    gronwall_bound,
    gronwall_bound_check,
    l2_norm,
    pair_norm,
    residual_sup,
    slope_fit,
    weight_squared,
    weighted_norm,
)
from lattice_homog.coefficients import DistributionSpec, constant_field, corrector_walks, sample_iid
from lattice_homog.homogenization import Gaussian, gaussian_initial_data, initial_state, profiles_from_initial_data
from lattice_homog.integrators import IntegratorSpec, integrate
from lattice_homog.lattice import window_indices


@pytest.mark.parametrize("eps", [0.3, 0.1, 0.02])
def test_gaussian_lattice_norm_matches_theta_identity(eps):
    # Poisson summation: sum_j exp(-2 (eps j)^2) = sqrt(pi/2)/eps up to exp(-pi^2/(2 eps^2))
    J = int(8 / eps)
    f = np.exp(-((eps * window_indices(J)) ** 2))
    assert l2_norm(f) ** 2 == pytest.approx(math.sqrt(math.pi / 2) / eps, rel=1e-12)
    assert l2_norm(f, compensated=True) ** 2 == pytest.approx(math.sqrt(math.pi / 2) / eps, rel=1e-14)


def test_pair_norm():
    assert pair_norm([3.0], [4.0]) == 5.0


def test_gaussian_weighted_norms_closed_form():
    g = Gaussian()
    q = (math.pi / 2) ** 0.25
    assert weighted_norm(g, 0) == pytest.approx(q, rel=1e-10)
    # ||G'||^2 = int 4 X^2 exp(-2X^2) = sqrt(pi/2)
    assert weighted_norm(g, 1) == pytest.approx(2 * q, rel=1e-10)
    sr = math.sqrt(math.sqrt(math.pi / 2) + 0.5)
    assert weighted_norm(g, 0, "sr") == pytest.approx(sr, rel=1e-8)
    assert weighted_norm(g, 0, "LIL") > weighted_norm(g, 0, "none")


def test_weight_validation():
    with pytest.raises(ValueError):
        weight_squared([1.0], "cubic")
    with pytest.raises(ValueError):
        weighted_norm(Gaussian(), 5)


@given(st.floats(0.01, 0.99))
def test_averaging_profile_is_one_without_weight(eps):
    s = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(averaging_profile("none", eps, s), 1.0, rtol=1e-13)


@given(st.floats(0.01, 0.99))
def test_sqrt_weight_averaging_bound(eps):
    b = averaging_operator_bound("sr", eps, n=4001)
    assert 1.0 <= b <= 1.5


def test_averaging_bound_accepts_unit_weight_name():
    assert averaging_operator_bound("1", 0.3, n=101) == pytest.approx(1.0)


@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(0.1, 1))
def test_slope_fit_recovers_power_law(p, c, lo):
    x = np.geomspace(lo, lo * 8, 6)
    f = slope_fit(x, c * x**p)
    assert f.slope == pytest.approx(p, abs=1e-9)
    assert f.r_squared == pytest.approx(1.0, abs=1e-9)


def test_slope_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        slope_fit([1, 2], [1, 2])
    with pytest.raises(ValueError):
        slope_fit([1, 2, 3], [1, 0, 2])


def test_report_json_roundtrip():
    rep = ErrorReport(0.1, 0.2, 0.03, 1e-4, 0.5, 0.05, 1.0, 100, 0.01, 1e-3, 2e-3)
    back = ErrorReport.from_dict(json.loads(rep.to_json()))
    assert back == rep
    with pytest.raises(ValueError):
        ErrorReport(-1.0, 0, 0, 0, 0, 0.1, 1.0, 1)


def test_empty_run_is_rejected():
    cf = constant_field(10)
    pr = profiles_from_initial_data(gaussian_initial_data(0.1), cf)
    with pytest.raises(ValueError):
        error_metrics([], pr, cf, 0.1, 1.0)
    with pytest.raises(ValueError):
        ErrorAccumulator(pr, cf, 0.1, 1.0).report()


def test_corrector_constant_vanishes_for_constant_chain():
    assert corrector_constant(corrector_walks(constant_field(50))) == 0.0


def _small_run(seed=0, eps=0.1, T0=1.0):
    law = DistributionSpec("uniform", 0.5, 1.5, seed=seed)
    cf = sample_iid(law, DistributionSpec.constant(1.0), int(20 / eps))
    data = gaussian_initial_data(eps)
    pr = profiles_from_initial_data(data, cf)
    states = integrate(initial_state(data, cf), cf, IntegratorSpec("rk4", 0.05, T0 / eps, 4))
    return cf, pr, states


def test_error_metrics_on_real_run():
    cf, pr, states = _small_run()
    rep = error_metrics(states, pr, cf, 0.1, 1.0)
    assert rep.times_sampled == len(states)
    assert 0 < rep.rho < 1
    assert rep.initial_error_eta_xi <= rep.sup_error_eta_xi
    # rho is the sup of a ratio, so it is at most sup error / min norm
    norms = [l2_norm(s.r) for s in states]
    assert rep.rho <= rep.sup_abs_error_r / min(norms) + 1e-15


def test_gronwall_bound_holds_on_real_run():
    cf, pr, states = _small_run(seed=3)
    rep = error_metrics(states, pr, cf, 0.1, 1.0)
    ok, margin = gronwall_bound_check(rep.initial_error_eta_xi, rep.gamma_eps, 0.1, rep.sup_error_eta_xi,
                                      cf.equivalence_constants(), 1.0, cf.b_m)
    assert ok and margin > 1


def test_gronwall_check_flags_violation():
    bound = gronwall_bound(0.1, 1e-3, 0.1, (0.5, 2.0))
    assert bound == pytest.approx(2 * 0.1 + 1e-3 * 1 / (0.5 * 0.1))
    assert not gronwall_bound_check(0.1, 1e-3, 0.1, 1.01 * bound, (0.5, 2.0))[0]


def test_residual_sup_matches_accumulator_order():
    cf = constant_field(200)
    pr = profiles_from_initial_data(gaussian_initial_data(0.1), cf)
    g = residual_sup(pr, corrector_walks(cf), cf, 0.1, 1.0, n_times=41)
    assert 0 < g < 0.1**1.5 * 10
