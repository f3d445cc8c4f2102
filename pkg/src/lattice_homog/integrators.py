"""Fixed-step integrators for the lattice system."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .lattice import CoefficientField, LatticeState, difference, rhs_arrays

METHODS = ("rk4", "yoshida6")

# Yoshida's sixth-order "solution A": symmetric composition
#   S(w3) S(w2) S(w1) S(w0) S(w1) S(w2) S(w3)
# of the second-order leapfrog S, with w0 = 1 - 2 (w1 + w2 + w3).  The
# weights make sum(w^3) and sum(w^5) over the seven stages vanish together
# with the mixed fifth-order condition.
YOSHIDA6_A = (
    -1.1776799841788710069,
    0.23557321335935813368,
    0.78451361047755726382,
)

# |R(i y)| <= 1 for RK4 up to y = 2 sqrt(2); leapfrog needs h * omega < 2.
_RK4_LIMIT = 2.0 * math.sqrt(2.0)


def yoshida_stage_weights(w=YOSHIDA6_A) -> tuple[float, ...]:
    w1, w2, w3 = w
    w0 = 1.0 - 2.0 * (w1 + w2 + w3)
    return (w3, w2, w1, w0, w1, w2, w3)


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t:.6g})")
        self.t = t


def max_frequency(coeffs: CoefficientField) -> float:
    """Upper estimate 2 sqrt(b_k / a_m) of the lattice operator's spectrum."""
    return 2.0 * math.sqrt(coeffs.b_k / coeffs.a_m)


def stability_bound(coeffs: CoefficientField, method: str, weights=YOSHIDA6_A) -> float:
    omega = max_frequency(coeffs)
    if method == "rk4":
        return _RK4_LIMIT / omega
    if method == "yoshida6":
        return 2.0 / (omega * max(abs(w) for w in yoshida_stage_weights(weights)))
    raise ValueError(f"unknown method {method!r}")


def default_dt(coeffs: CoefficientField, method: str = "rk4") -> float:
    return 0.1 * stability_bound(coeffs, method)


@dataclass(frozen=True)
class IntegratorSpec:
    method: str = "rk4"
    dt: float = 0.1
    t_end: float = 1.0
    observe_every: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.observe_every < 1:
            raise ValueError("observe_every must be a positive integer")

    def n_steps(self, t_start: float = 0.0) -> int:
        span = abs(self.t_end - t_start)
        return int(math.ceil(span / self.dt - 1e-9)) if span > 0 else 0

    def check_stability(self, coeffs: CoefficientField) -> None:
        bound = stability_bound(coeffs, self.method)
        if self.dt > bound:
            raise ValueError(
                f"dt = {self.dt:g} exceeds the {self.method} stability bound {bound:g}"
            )


def _rk4_arrays(r, p, m, k, dt, boundary):
    k1r, k1p = rhs_arrays(r, p, m, k, boundary)
    h = 0.5 * dt
    k2r, k2p = rhs_arrays(r + h * k1r, p + h * k1p, m, k, boundary)
    k3r, k3p = rhs_arrays(r + h * k2r, p + h * k2p, m, k, boundary)
    k4r, k4p = rhs_arrays(r + dt * k3r, p + dt * k3p, m, k, boundary)
    r = r + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return r, p


def _yoshida_arrays(r, p, m, k, dt, boundary, weights):
    # leapfrog: half r-update from p, full p-update from r, half r-update
    for w in yoshida_stage_weights(weights):
        h = w * dt
        r = r + 0.5 * h * difference(p, 1, boundary)
        p = p + h * difference(k * r, -1, boundary) / m
        r = r + 0.5 * h * difference(p, 1, boundary)
    return r, p


def _finite_or_raise(r, p, t):
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(p))):
        raise IntegrationError("non-finite lattice state; step is unstable", t)


def step_rk4(
    state: LatticeState, coeffs: CoefficientField, dt: float, boundary: str = "zero"
) -> LatticeState:
    r, p = _rk4_arrays(state.r, state.p, coeffs.m, coeffs.k, dt, boundary)
    _finite_or_raise(r, p, state.t + dt)
    return LatticeState(r, p, state.t + dt)


def step_yoshida6(
    state: LatticeState,
    coeffs: CoefficientField,
    dt: float,
    boundary: str = "zero",
    weights=YOSHIDA6_A,
) -> LatticeState:
    r, p = _yoshida_arrays(state.r, state.p, coeffs.m, coeffs.k, dt, boundary, weights)
    _finite_or_raise(r, p, state.t + dt)
    return LatticeState(r, p, state.t + dt)


def integrate(
    initial: LatticeState,
    coeffs: CoefficientField,
    spec: IntegratorSpec,
    observer: Callable[[LatticeState], Any] | None = None,
    boundary: str = "zero",
    weights=YOSHIDA6_A,
) -> list:
    """Advance ``initial`` to ``spec.t_end``, calling ``observer`` along the way.

    The step count is ceil(|t_end - t0| / dt) and the step is shrunk so the
    last step lands exactly on ``t_end``; ``t_end < t0`` runs backwards.
    Observations are taken at t = 0, every ``observe_every`` steps and at
    the final time.  Returns the observer's outputs in time order.
    """
    if observer is None:
        observer = lambda s: s  # noqa: E731
    spec.check_stability(coeffs)
    n = spec.n_steps(initial.t)
    records = [observer(initial)]
    if n == 0:
        return records
    h = (spec.t_end - initial.t) / n
    m, k = coeffs.m, coeffs.k
    r, p = initial.r.copy(), initial.p.copy()
    t0 = initial.t
    for i in range(1, n + 1):
        if spec.method == "rk4":
            r, p = _rk4_arrays(r, p, m, k, h, boundary)
        else:
            r, p = _yoshida_arrays(r, p, m, k, h, boundary, weights)
        if i % spec.observe_every == 0 or i == n:
            t = t0 + i * h
            _finite_or_raise(r, p, t)
            records.append(observer(LatticeState(r, p, t)))
    return records
