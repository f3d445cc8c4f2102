import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lattice_homog.coefficients import DistributionSpec, constant_field, corrector_walks, sample_iid
from lattice_homog.homogenization import (
    Ansatz,
    Combination,
    Gaussian,
    InitialData,
    SampledProfile,
    WaveProfiles,
    Zero,
    combine,
    definitional_residual,
    effective_solution,
    gaussian_initial_data,
    initial_state,
    profiles_from_initial_data,
    residual_closed_form,
)
from lattice_homog.verify import random_residual_configuration, residual_mismatch


@given(st.floats(0.2, 3), st.floats(-2, 2), st.floats(0.3, 2), st.integers(0, 3))
def test_gaussian_derivatives_match_finite_differences(amp, center, width, order):
    g = Gaussian(amp, center, width)
    x = np.linspace(-3, 3, 13)
    h = 1e-4
    fd = (g.derivative(x + h, order) - g.derivative(x - h, order)) / (2 * h)
    np.testing.assert_allclose(fd, g.derivative(x, order + 1), atol=1e-6 * amp / width ** (order + 2))


def test_gaussian_recurrence_matches_single_orders():
    g = Gaussian(1.3, 0.2, 0.8)
    x = np.linspace(-4, 4, 101)
    stack = g.derivatives(x, 4)
    for n in range(5):
        d = g.derivative(x, n)
        np.testing.assert_allclose(stack[n], d, rtol=0, atol=1e-14 * np.max(np.abs(d)))


def test_combine_simplifies():
    g = Gaussian()
    assert isinstance(combine([(0.5, g), (0.5, g)]), Gaussian)
    assert isinstance(g - g, Zero)
    mix = 2.0 * g + Gaussian(center=1.0)
    assert isinstance(mix, Combination)
    np.testing.assert_allclose(mix(np.array([0.0])), 2.0 + math.exp(-1.0))


def test_sampled_profile_follows_samples():
    x = np.linspace(-6, 6, 2001)
    sp = SampledProfile(x, np.exp(-x**2))
    np.testing.assert_allclose(sp(np.array([0.0, 0.5])), [1.0, math.exp(-0.25)], atol=1e-7)
    assert sp(np.array([7.0]))[0] == 0.0


def test_gaussian_data_gives_pure_right_mover():
    cf = constant_field(10)
    pr = profiles_from_initial_data(gaussian_initial_data(0.1), cf)
    assert isinstance(pr.B, Zero)
    np.testing.assert_allclose(pr.A(np.linspace(-2, 2, 5)), np.exp(-np.linspace(-2, 2, 5) ** 2))


def test_initial_data_validation():
    with pytest.raises(ValueError):
        InitialData(Gaussian(), Gaussian(), 0.5)
    with pytest.raises(ValueError):
        WaveProfiles(Gaussian(), Zero(), 2.0, 1.0, 1.0)


def test_effective_solution_reproduces_data_at_time_zero():
    law = DistributionSpec("uniform", 0.5, 1.5, seed=0)
    cf = sample_iid(law, law, 10)
    data = InitialData(Gaussian(1.0, 0.3), Gaussian(0.5, -0.2, 1.2), 0.1)
    pr = profiles_from_initial_data(data, cf)
    X = np.linspace(-3, 3, 31)
    Q, P = effective_solution(pr, X, 0.0)
    np.testing.assert_allclose(Q, data.Phi(X), atol=1e-15)
    np.testing.assert_allclose(P, data.Psi(X), atol=1e-15)


def test_effective_solution_solves_wave_system():
    cf = constant_field(5, m=2.0, k=0.5)
    data = InitialData(Gaussian(), Gaussian(0.7, 0.4), 0.1)
    pr = profiles_from_initial_data(data, cf)
    X, tau, h = np.linspace(-2, 2, 9), 0.3, 1e-5
    dQ = (effective_solution(pr, X, tau + h)[0] - effective_solution(pr, X, tau - h)[0]) / (2 * h)
    dPdX = (effective_solution(pr, X + h, tau)[1] - effective_solution(pr, X - h, tau)[1]) / (2 * h)
    # Q_tau = ktilde P_X for the effective system
    np.testing.assert_allclose(dQ, cf.ktilde * dPdX, atol=1e-8)


def test_initial_state_samples_data():
    cf = constant_field(20, k=2.0)
    s = initial_state(gaussian_initial_data(0.1), cf)
    assert s.r[20] == 0.5 and s.p[20] == -1.0


def test_ansatz_leading_terms_at_time_zero():
    law = DistributionSpec("uniform", 0.5, 1.5, seed=5)
    cf = sample_iid(law, law, 80)
    data = gaussian_initial_data(0.1)
    z = Ansatz(profiles_from_initial_data(data, cf), corrector_walks(cf), cf, 0.1)
    s0 = initial_state(data, cf)
    np.testing.assert_allclose(z.leading_r(0.0), s0.r, atol=1e-15)
    np.testing.assert_allclose(z.leading_p(0.0), s0.p, atol=1e-15)


def test_ansatz_time_derivatives_match_finite_differences():
    law = DistributionSpec("uniform", 0.5, 1.5, seed=6)
    cf = sample_iid(law, law, 60)
    data = InitialData(Gaussian(), Gaussian(0.4, 0.5), 0.15)
    z = Ansatz(profiles_from_initial_data(data, cf), corrector_walks(cf), cf, 0.15)
    t, h = 2.0, 1e-5
    np.testing.assert_allclose((z.r(t + h) - z.r(t - h)) / (2 * h), z.dr_dt(t), atol=1e-8)
    np.testing.assert_allclose((z.p(t + h) - z.p(t - h)) / (2 * h), z.dp_dt(t), atol=1e-8)


@given(st.integers(0, 2**32 - 1))
def test_closed_form_residual_matches_definition(seed):
    rng = np.random.default_rng(seed)
    assert residual_mismatch(*random_residual_configuration(rng)) <= 1e-10


def test_constant_residual_scales_like_three_halves():
    gammas, eps = [], [0.1, 0.05, 0.025]
    for e in eps:
        cf = constant_field(int(10 / e))
        pr = profiles_from_initial_data(gaussian_initial_data(e), cf)
        w = corrector_walks(cf)
        g = max(math.hypot(*map(np.linalg.norm, residual_closed_form(pr, w, cf, e, t)))
                for t in np.linspace(0, 1 / e, 50))
        gammas.append(g)
    rates = np.log2(np.array(gammas[:-1]) / np.array(gammas[1:]))
    np.testing.assert_allclose(rates, 1.5, atol=0.05)


def test_definitional_residual_uses_lattice_operators():
    cf = constant_field(40)
    pr = profiles_from_initial_data(gaussian_initial_data(0.2), cf)
    r1, r2 = definitional_residual(pr, corrector_walks(cf), cf, 0.2, 1.0)
    assert r1.shape == r2.shape == (81,)
