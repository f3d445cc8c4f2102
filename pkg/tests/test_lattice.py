import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lattice_homog.coefficients import DistributionSpec, constant_field, sample_iid
from lattice_homog.lattice import (
    CoefficientField,
    LatticeState,
    difference,
    energy,
    lattice_energy,
    plane_wave,
    residuals,
    rhs,
    shift,
    window_indices,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
odd_seq = st.integers(1, 30).flatmap(lambda J: arrays(float, 2 * J + 1, elements=finite))


def test_shift_moves_unit_spike_left():
    assert shift([0, 0, 1, 0, 0], +1).tolist() == [0, 1, 0, 0, 0]
    assert shift([0, 0, 1, 0, 0], -1).tolist() == [0, 0, 0, 1, 0]


def test_shift_zero_fills_edges():
    assert shift([1, 2, 3], +1).tolist() == [2, 3, 0]
    assert shift([1, 2, 3], -1).tolist() == [0, 1, 2]
    assert shift([1, 2, 3], +1, "periodic").tolist() == [2, 3, 1]


@given(odd_seq)
def test_shifts_invert_on_interior(f):
    back = shift(shift(f, +1), -1)
    np.testing.assert_array_equal(back[1:], f[1:])


@given(st.floats(-5, 5), st.integers(1, 20))
def test_constant_is_shift_invariant_inside(c, J):
    f = np.full(2 * J + 1, c)
    np.testing.assert_array_equal(shift(f, 1)[:-1], f[:-1])
    np.testing.assert_array_equal(difference(f, 1)[:-1], 0.0)


def test_difference_of_identity_and_square():
    j = window_indices(10).astype(float)
    np.testing.assert_array_equal(difference(j, 1)[:-1], 1.0)
    np.testing.assert_array_equal(difference(j, -1)[1:], 1.0)
    np.testing.assert_array_equal(difference(difference(j**2, 1), -1)[1:-1], 2.0)


def test_bad_shift_arguments():
    with pytest.raises(ValueError):
        shift([1.0], 2)
    with pytest.raises(ValueError):
        shift([1.0], 1, "mirror")


def test_state_rejects_mismatch_and_nan():
    with pytest.raises(ValueError):
        LatticeState(np.zeros(3), np.zeros(5))
    with pytest.raises(ValueError):
        LatticeState(np.array([0, np.nan, 0]), np.zeros(3))


def test_coefficient_field_checks_bounds():
    with pytest.raises(ValueError):
        CoefficientField(m=np.array([0.4, 1, 1]), k=np.ones(3), a_m=0.5, b_m=1.5, a_k=1, b_k=1, mbar=1, ktilde=1)
    with pytest.raises(ValueError):
        CoefficientField(m=np.ones(3), k=np.ones(3), a_m=0.5, b_m=1.5, a_k=1, b_k=1, mbar=2.0, ktilde=1)
    with pytest.raises(ValueError):
        CoefficientField(m=np.ones(4), k=np.ones(4), a_m=1, b_m=1, a_k=1, b_k=1, mbar=1, ktilde=1)


def test_rhs_on_spike():
    cf = constant_field(2)
    dr, dp = rhs(LatticeState(np.array([0, 0, 1.0, 0, 0]), np.zeros(5)), cf)
    np.testing.assert_array_equal(dr, 0.0)
    np.testing.assert_array_equal(dp, [0, 0, 1, -1, 0])


@given(st.integers(0, 10_000), st.integers(2, 40))
def test_zero_fill_rhs_conserves_energy_exactly(seed, J):
    # dH/dt = sum(k r dr + m p dp) telescopes to zero with the zero fill
    law = DistributionSpec("uniform", 0.5, 1.5, seed=seed)
    cf = sample_iid(law, law, J)
    rng = np.random.default_rng(seed)
    s = LatticeState(rng.standard_normal(2 * J + 1), rng.standard_normal(2 * J + 1))
    dr, dp = rhs(s, cf)
    dH = np.sum(cf.k * s.r * dr + cf.m * s.p * dp)
    assert abs(dH) <= 1e-12 * (1 + np.sum(np.abs(cf.k * s.r * dr)))


def test_energy_forms_agree():
    cf = constant_field(3, m=2.0, k=0.5)
    s = LatticeState(np.arange(7.0), np.ones(7))
    assert lattice_energy(s, cf) == pytest.approx(0.5 * np.sum(0.5 * s.r**2 + 2.0 * s.p**2))
    assert energy(cf.k * s.r, s.p, cf) == lattice_energy(s, cf)


def test_exact_solution_has_zero_residual():
    J, mode = 15, 4
    cf = constant_field(J)

    def deriv(t):
        s = plane_wave(J, mode, t)
        return rhs(s, cf, "periodic")

    res1, res2 = residuals(lambda t: plane_wave(J, mode, t).r, lambda t: plane_wave(J, mode, t).p,
                           lambda t: deriv(t)[0], lambda t: deriv(t)[1], cf, 0.7, "periodic")
    assert np.max(np.abs(res1)) == 0 and np.max(np.abs(res2)) == 0


def test_plane_wave_time_derivative_matches_rhs():
    J, mode, t, h = 12, 3, 0.4, 1e-5
    cf = constant_field(J)
    num_r = (plane_wave(J, mode, t + h).r - plane_wave(J, mode, t - h).r) / (2 * h)
    dr, _ = rhs(plane_wave(J, mode, t), cf, "periodic")
    np.testing.assert_allclose(num_r, dr, atol=1e-9)


def test_equivalence_constants():
    cf = constant_field(2, m=2.0, k=4.0)
    assert cf.equivalence_constants() == (0.25, 2.0)
    assert math.isclose(cf.composite_sigma_m, 0.0)
