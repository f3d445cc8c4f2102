import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lattice_homog.coefficients import DistributionSpec, constant_field, sample_iid
from lattice_homog.integrators import (
    YOSHIDA6_A,
    IntegrationError,
    IntegratorSpec,
    default_dt,
    integrate,
    stability_bound,
    step_rk4,
    step_yoshida6,
    yoshida_stage_weights,
)
from lattice_homog.lattice import LatticeState, lattice_energy, plane_wave
from lattice_homog.verify import integrator_order, plane_wave_error


def test_yoshida_weights_cancel_odd_error_terms():
    mpmath.mp.dps = 40
    w1, w2, w3 = (mpmath.mpf(str(w)) for w in ("-1.1776799841788710069", "0.23557321335935813368",
                                               "0.78451361047755726382"))
    w0 = 1 - 2 * (w1 + w2 + w3)
    stages = [w3, w2, w1, w0, w1, w2, w3]
    assert abs(sum(stages) - 1) < mpmath.mpf("1e-35")
    assert abs(sum(w**3 for w in stages)) < mpmath.mpf("1e-18")
    assert abs(sum(w**5 for w in stages)) < mpmath.mpf("1e-18")
    assert sum(yoshida_stage_weights()) == pytest.approx(1.0, abs=1e-15)


def test_rk4_order_on_plane_wave():
    assert integrator_order("rk4") == pytest.approx(4.0, abs=0.2)


def test_yoshida_order_on_plane_wave():
    assert integrator_order("yoshida6") == pytest.approx(6.0, abs=0.4)


def test_plane_wave_error_shrinks_with_step():
    assert plane_wave_error("rk4", 0.05) < plane_wave_error("rk4", 0.1) / 10


def test_spec_validation():
    with pytest.raises(ValueError):
        IntegratorSpec("euler")
    with pytest.raises(ValueError):
        IntegratorSpec("rk4", dt=0.0)
    with pytest.raises(ValueError):
        IntegratorSpec("rk4", observe_every=0)


def test_step_above_stability_bound_is_rejected():
    cf = constant_field(5)
    spec = IntegratorSpec("rk4", dt=1.1 * stability_bound(cf, "rk4"), t_end=1.0)
    with pytest.raises(ValueError, match="stability"):
        integrate(LatticeState.zeros(5), cf, spec)


def test_blowup_raises_with_time():
    cf = constant_field(5)
    big = 1e308 * (-1.0) ** np.arange(11)
    s = LatticeState(big, big)
    with pytest.raises(IntegrationError) as err, np.errstate(all="ignore"):
        step_rk4(s, cf, 0.1)
    assert err.value.t == pytest.approx(0.1)


def test_observation_schedule_hits_final_time():
    cf = constant_field(4)
    out = integrate(LatticeState.zeros(4), cf, IntegratorSpec("rk4", 0.3, 1.0, 2), lambda s: s.t)
    assert out[0] == 0.0 and out[-1] == pytest.approx(1.0)
    assert len(out) == 3  # 4 steps: t0, step 2, step 4


@pytest.mark.parametrize("method, tol", [("rk4", 1e-4), ("yoshida6", 1e-9)])
def test_backward_run_retraces(method, tol):
    J = 40
    law = DistributionSpec("uniform", 0.5, 1.5, seed=4)
    cf = sample_iid(law, law, J)
    rng = np.random.default_rng(0)
    s0 = LatticeState(rng.standard_normal(2 * J + 1), rng.standard_normal(2 * J + 1))
    dt = default_dt(cf, method)
    fwd = integrate(s0, cf, IntegratorSpec(method, dt, 5.0))[-1]
    back = integrate(fwd, cf, IntegratorSpec(method, dt, 0.0))[-1]
    assert back.t == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(back.r, s0.r, atol=tol)


@given(st.integers(0, 500))
def test_yoshida_energy_stays_flat(seed):
    law = DistributionSpec("uniform", 0.5, 1.5, seed=seed)
    cf = sample_iid(law, law, 30)
    x = np.linspace(-3, 3, 61)
    s = LatticeState(np.exp(-x**2) / cf.k, -np.exp(-x**2))
    H0 = lattice_energy(s, cf)
    dt = default_dt(cf, "yoshida6")
    Hs = integrate(s, cf, IntegratorSpec("yoshida6", dt, 300 * dt, 10), lambda x: lattice_energy(x, cf))
    assert max(abs(h - H0) for h in Hs) <= 1e-9 * H0


def test_single_steps_agree_with_integrate():
    J = 6
    cf = constant_field(J)
    s = plane_wave(J, 2, 0.0)
    a = step_yoshida6(s, cf, 0.1)
    b = integrate(s, cf, IntegratorSpec("yoshida6", 0.1, 0.1))[-1]
    np.testing.assert_array_equal(a.r, b.r)
    c = step_rk4(s, cf, 0.1)
    assert math.isclose(c.t, 0.1)


def test_stability_bounds_order():
    cf = constant_field(3)
    assert stability_bound(cf, "rk4") == pytest.approx(math.sqrt(2))
    assert stability_bound(cf, "yoshida6") < stability_bound(cf, "rk4")
    assert default_dt(cf) == pytest.approx(0.1 * math.sqrt(2))
