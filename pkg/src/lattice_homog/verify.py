"""Small-scale invariant checks across every module, with named pass/fail results.

Mutation demo: ``verify_suite(weights=MUTATED_YOSHIDA)`` swaps in a Yoshida
weight truncated to three digits.  The composition stays symplectic but
drops to second order, and the energy-drift check fails.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import averaging_operator_bound, gronwall_bound_check, slope_fit
from .coarse_grain import interpolant_norm, lowpass_interpolate, sequence_fourier
from .coefficients import (
    DistributionSpec,
    constant_field,
    corrector_walks,
    lil_envelope_stats,
    martingale_max_moment,
    sample_iid,
)
from .homogenization import (
    Gaussian,
    InitialData,
    definitional_residual,
    gaussian_initial_data,
    initial_state,
    profiles_from_initial_data,
    residual_closed_form,
)
from .integrators import YOSHIDA6_A, IntegratorSpec, default_dt, integrate
from .lattice import CoefficientField, difference, lattice_energy, plane_wave, window_indices

MUTATED_YOSHIDA = (-1.17,) + YOSHIDA6_A[1:]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


# ---------------------------------------------------------------- measurements

def plane_wave_error(method: str, dt: float, t_end: float = 10.0, J: int = 20, mode: int = 3,
                     weights=YOSHIDA6_A) -> float:
    """|(r, p)(t_end) - exact| for the periodic plane wave with m = k = 1."""
    cf = constant_field(J)
    spec = IntegratorSpec(method, dt, t_end, 10**9)
    final = integrate(plane_wave(J, mode, 0.0), cf, spec, boundary="periodic", weights=weights)[-1]
    exact = plane_wave(J, mode, t_end)
    return math.hypot(np.linalg.norm(final.r - exact.r), np.linalg.norm(final.p - exact.p))


RK4_STEPS = (0.4, 0.2, 0.1, 0.05)
YOSHIDA_STEPS = (0.4, 0.3, 0.2, 0.15)


def integrator_order(method: str, steps=None, weights=YOSHIDA6_A) -> float:
    steps = steps or (RK4_STEPS if method == "rk4" else YOSHIDA_STEPS)
    errs = [plane_wave_error(method, dt, weights=weights) for dt in steps]
    return slope_fit(steps, errs).slope


def random_field(J: int, seed: int = 0, trial: int = 0) -> CoefficientField:
    law = DistributionSpec("uniform", 0.5, 1.5, seed=seed)
    return sample_iid(law, law, J, trial)


def energy_drift(weights=YOSHIDA6_A, n_steps: int = 10_000, dt_factor: float = 1.0, J: int = 200,
                 epsilon: float = 0.1) -> float:
    """max_t |H(t) - H(0)| / H(0) for Yoshida steps of dt_factor x the default step."""
    cf = random_field(J)
    s0 = initial_state(gaussian_initial_data(epsilon), cf)
    H0 = lattice_energy(s0, cf)
    dt = dt_factor * default_dt(cf, "yoshida6")
    spec = IntegratorSpec("yoshida6", dt, dt * n_steps, 10)
    Hs = integrate(s0, cf, spec, lambda s: lattice_energy(s, cf), weights=weights)
    return float(np.max(np.abs(np.asarray(Hs) - H0)) / H0)


def random_residual_configuration(rng: np.random.Generator):
    """Random coefficients, epsilon, time and Gaussian data with B != 0."""
    eps = float(rng.uniform(0.05, 0.3))
    # wide enough that the zero fill never sees the profiles
    J = int(math.ceil(16.0 / eps))
    law_m = DistributionSpec("uniform", *sorted(rng.uniform(0.3, 2.0, 2)), seed=int(rng.integers(2**31)))
    law_k = DistributionSpec("uniform", *sorted(rng.uniform(0.3, 2.0, 2)), seed=int(rng.integers(2**31)))
    cf = sample_iid(law_m, law_k, J)
    Phi = Gaussian(float(rng.uniform(0.5, 2.0)), float(rng.uniform(-1, 1)), float(rng.uniform(0.7, 1.5)))
    Psi = Gaussian(float(rng.uniform(-2.0, 2.0)), float(rng.uniform(-1, 1)), float(rng.uniform(0.7, 1.5)))
    data = InitialData(Phi, Psi, eps)
    t = float(rng.uniform(0.0, 0.5 / eps))
    return cf, data, t


def residual_mismatch(cf: CoefficientField, data: InitialData, t: float) -> float:
    """Relative gap between the closed-form residual and the definitional one."""
    profiles = profiles_from_initial_data(data, cf)
    walks = corrector_walks(cf)
    a1, a2 = residual_closed_form(profiles, walks, cf, data.epsilon, t)
    b1, b2 = definitional_residual(profiles, walks, cf, data.epsilon, t)
    num = math.hypot(np.linalg.norm(a1 - b1), np.linalg.norm(a2 - b2))
    den = math.hypot(np.linalg.norm(b1), np.linalg.norm(b2))
    return num / den


# ---------------------------------------------------------------- the suite

def _check(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - start)


def _difference_stencil():
    j = window_indices(20).astype(float)
    second = difference(difference(j * j, 1), -1)[1:-1]
    return bool(np.allclose(second, 2.0, atol=0, rtol=0)), f"delta- delta+ j^2 range [{second.min()}, {second.max()}]"


def _energy_conservation():
    drift = energy_drift(dt_factor=1.0, n_steps=2000)
    return drift <= 1e-8, f"relative energy drift {drift:.2e} over 2000 steps"


def _yoshida_drift(weights):
    def run():
        drift = energy_drift(weights, n_steps=10_000, dt_factor=3.0)
        return drift <= 1e-8, f"relative drift {drift:.2e} over 1e4 steps at 0.3 x stability bound"
    return run


def _orders(weights):
    def run():
        p4 = integrator_order("rk4")
        p6 = integrator_order("yoshida6", weights=weights)
        return abs(p4 - 4) <= 0.2 and abs(p6 - 6) <= 0.4, f"rk4 order {p4:.3f}, yoshida6 order {p6:.3f}"
    return run


def _residual_crosscheck(n: int = 10, seed: int = 0):
    def run():
        rng = np.random.default_rng(seed)
        worst = max(residual_mismatch(*random_residual_configuration(rng)) for _ in range(n))
        return worst <= 1e-10, f"worst relative mismatch {worst:.2e} over {n} configurations"
    return run


def _martingale(seed: int):
    def run():
        res = martingale_max_moment(DistributionSpec("uniform", 0.5, 1.5), 1000, 10_000, seed=seed)
        return res["mean_max_sq"] <= res["tolerance_bound"], f"E[max W^2]/(4 N sigma^2) = {res['ratio']:.3f}"
    return run


def _lil_envelope(seed: int):
    def run():
        cf = random_field(10_000, seed)
        w = corrector_walks(cf)
        stats = lil_envelope_stats(w.chi_m, cf.walk_sigma_m)
        ok = stats["exceed_fraction"] <= 0.01 and math.isfinite(stats["C_omega"])
        return ok, f"C_omega {stats['C_omega']:.3f}, 2-sigma envelope exceeded at {stats['exceed_count_2sigma']} sites"
    return run


def _sampling_identity():
    rng = np.random.default_rng(1)
    f = rng.standard_normal(2001)
    back = lowpass_interpolate(f, window_indices(1000).astype(float))
    err = float(np.max(np.abs(back - f)))
    return err == 0.0, f"max |S L f - f| = {err:.1e}"


def _norm_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(5):
        f = rng.standard_normal(301) * np.exp(-0.02 * np.abs(window_indices(150)))
        worst = max(worst, abs(interpolant_norm(f) / np.linalg.norm(f) - 1.0))
    return worst <= 1e-6, f"worst | ||L f|| / ||f|| - 1 | = {worst:.1e}"


def _parseval():
    rng = np.random.default_rng(3)
    f = rng.standard_normal(41)
    kappa, w = np.polynomial.legendre.leggauss(200)
    F = sequence_fourier(f, math.pi * kappa)
    integral = math.pi * float(np.sum(w * np.abs(F) ** 2))
    target = float(f @ f) / (2 * math.pi)
    err = abs(integral / target - 1)
    return err <= 1e-8, f"relative Parseval gap {err:.1e}"


def _averaging_bound():
    worst = max(averaging_operator_bound("sr", e, n=20_001) for e in np.linspace(0.01, 0.99, 15))
    return worst <= 1.5, f"max ||b_eps||_inf = {worst:.4f}"


def _gronwall(seed: int):
    def run():
        from .analysis import ErrorAccumulator

        eps, T0 = 0.1, 1.0
        cf = random_field(200, seed)
        data = gaussian_initial_data(eps)
        profiles = profiles_from_initial_data(data, cf)
        acc = ErrorAccumulator(profiles, cf, eps, T0)
        dt = min(default_dt(cf), T0 / eps / 500)
        integrate(initial_state(data, cf), cf, IntegratorSpec("rk4", dt, T0 / eps), acc)
        rep = acc.report()
        ok, margin = gronwall_bound_check(rep.initial_error_eta_xi, rep.gamma_eps, eps, rep.sup_error_eta_xi,
                                          cf.equivalence_constants(), T0, cf.b_m)
        return ok, f"bound / measured = {margin:.2f}"
    return run


def _determinism(seed: int):
    def run():
        from .experiments import ExperimentConfig, run_single

        cfg = ExperimentConfig(experiment="fig2_boxplots", epsilons=(0.1,), seed=seed)
        a = run_single(cfg, 0.1, 0)
        b = run_single(cfg, 0.1, 0)
        return a.row() == b.row() and a.ok, f"rho = {a.report.rho if a.report else float('nan'):.6g} twice"
    return run


def verify_suite(seed: int = 0, weights=YOSHIDA6_A) -> list[CheckResult]:
    """Run every invariant check at small scale; see module docstring for the mutation demo."""
    checks = [
        ("difference stencil", _difference_stencil),
        ("zero-fill energy conservation", _energy_conservation),
        ("yoshida6 energy drift", _yoshida_drift(weights)),
        ("integrator orders (plane wave)", _orders(weights)),
        ("residual closed form vs definition", _residual_crosscheck(seed=seed)),
        ("martingale maximal inequality", _martingale(seed)),
        ("iterated-logarithm envelope", _lil_envelope(seed)),
        ("sampling inverts interpolation", _sampling_identity),
        ("interpolant norm identity", _norm_identity),
        ("sequence Fourier Parseval", _parseval),
        ("averaging operator bound", _averaging_bound),
        ("energy-method error bound", _gronwall(seed)),
        ("run determinism", _determinism(seed)),
    ]
    return [_check(name, fn) for name, fn in checks]
