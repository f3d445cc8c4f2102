"""Norms, error metrics and convergence-rate fits."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.integrate import simpson

from .coefficients import CorrectorWalk, corrector_walks
from .homogenization import Ansatz, Profile, WaveProfiles
from .lattice import CoefficientField, LatticeState, window_indices

WEIGHTS = ("none", "sr", "LIL")


def l2_norm(seq, compensated: bool = False) -> float:
    f = np.asarray(seq, dtype=float)
    if compensated:
        return math.sqrt(math.fsum((f * f).tolist()))
    return float(np.sqrt(np.dot(f, f)))


def pair_norm(a, b) -> float:
    """Norm on l2 x l2."""
    return math.hypot(l2_norm(a), l2_norm(b))


def weight_squared(x, weight: str):
    x = np.abs(np.asarray(x, dtype=float))
    if weight == "none":
        return np.ones_like(x)
    if weight == "sr":
        return 1.0 + x
    if weight == "LIL":
        return 1.0 + x * np.log(np.log(x + math.e))
    raise ValueError(f"unknown weight {weight!r}; expected one of {WEIGHTS}")


def weighted_norm(F: Profile, s: int, weight: str = "none", half_width=None, n: int = 200_001) -> float:
    """sum_{i<=s} || w F^(i) ||_{L2} by composite Simpson on [-L, L]."""
    if not 0 <= s <= 4:
        raise ValueError("s must be an integer in 0..4")
    L = F.support_radius(1e-16) + 5.0 if half_width is None else half_width
    x = np.linspace(-L, L, n)
    w2 = weight_squared(x, weight)
    total = 0.0
    for i in range(s + 1):
        d = F.derivative(x, i)
        total += math.sqrt(max(simpson(w2 * d * d, x=x), 0.0))
    return total


def averaging_profile(weight: str, epsilon: float, s):
    """b_eps(s) = (1/(eps w(s)^2)) int_{s-eps}^{s} w(X)^2 dX."""
    s = np.asarray(s, dtype=float)
    nodes, wts = np.polynomial.legendre.leggauss(16)
    out = np.zeros_like(s)
    lo, hi = s - epsilon, s
    # |X| has a kink at 0: integrate the two pieces separately
    for a, b in ((lo, np.minimum(hi, 0.0)), (np.maximum(lo, 0.0), hi)):
        span = np.clip(b - a, 0.0, None)
        mid = 0.5 * (a + b)
        X = mid[..., None] + 0.5 * span[..., None] * nodes
        out += 0.5 * span * np.sum(wts * weight_squared(X, weight), axis=-1)
    return out / (epsilon * weight_squared(s, weight))


def averaging_operator_bound(weight: str, epsilon: float, half_width: float = 50.0, n: int = 200_001) -> float:
    """Grid maximum of b_eps over [-L, L] (the weights are monotone in |X| beyond)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    name = {"1": "none", 1: "none"}.get(weight, weight)
    s = np.linspace(-half_width, half_width, n)
    s = np.union1d(s, [0.0, epsilon])
    return float(np.max(averaging_profile(name, epsilon, s)))


@dataclass
class ErrorReport:
    sup_abs_error_r: float
    sup_abs_error_p: float
    rho: float
    gamma_eps: float
    C_omega_estimate: float
    epsilon: float
    T0: float
    times_sampled: int
    rho_p: float = 0.0
    initial_error_eta_xi: float = 0.0
    sup_error_eta_xi: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and f.name != "epsilon" and v < 0:
                raise ValueError(f"{f.name} must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: (int(v) if k == "times_sampled" else float(v)) for k, v in d.items() if k in names})


def corrector_constant(walks: CorrectorWalk) -> float:
    """max_{j != 0} (|chi_k| + |chi_m|) / sqrt(|j| loglog(|j| + e))."""
    J = (walks.chi_k.size - 1) // 2
    aj = np.abs(window_indices(J)).astype(float)
    nz = aj > 0
    total = np.abs(walks.chi_k) + np.abs(walks.chi_m)
    return float(np.max(total[nz] / np.sqrt(aj[nz] * np.log(np.log(aj[nz] + math.e)))))


class ErrorAccumulator:
    """Streaming observer: folds lattice states into the sup-in-time metrics.

    Compares r with the leading-order profile [A(x-) + B(x+)]/k and p with
    [-A(x-) + B(x+)]/sqrt(ktilde mbar); also tracks the corrected-ansatz
    error (eta, xi) = (k (r - r~), p - p~) and the residual sup Gamma_eps.
    """

    def __init__(self, profiles: WaveProfiles, coeffs: CoefficientField, epsilon: float, T0: float,
                 walks: CorrectorWalk | None = None, track_residual: bool = True):
        self.walks = corrector_walks(coeffs) if walks is None else walks
        self.ansatz = Ansatz(profiles, self.walks, coeffs, epsilon)
        self.coeffs = coeffs
        self.epsilon = epsilon
        self.T0 = T0
        self.track_residual = track_residual
        self.sup_r = self.sup_p = self.rho = self.rho_p = 0.0
        self.gamma = self.sup_eta_xi = 0.0
        self.initial_eta_xi = None
        self.n = 0

    def __call__(self, state: LatticeState):
        z = self.ansatz
        t = state.t
        err_r = l2_norm(state.r - z.leading_r(t))
        err_p = l2_norm(state.p - z.leading_p(t))
        nr, np_ = l2_norm(state.r), l2_norm(state.p)
        self.sup_r = max(self.sup_r, err_r)
        self.sup_p = max(self.sup_p, err_p)
        if nr > 0:
            self.rho = max(self.rho, err_r / nr)
        if np_ > 0:
            self.rho_p = max(self.rho_p, err_p / np_)
        eta = self.coeffs.k * (state.r - z.r(t))
        xi = state.p - z.p(t)
        exi = pair_norm(eta, xi)
        if self.initial_eta_xi is None:
            self.initial_eta_xi = exi
        self.sup_eta_xi = max(self.sup_eta_xi, exi)
        if self.track_residual:
            res1, res2 = z.residual_closed_form(t)
            self.gamma = max(self.gamma, pair_norm(res1, res2))
        self.n += 1
        return None

    def report(self) -> ErrorReport:
        if self.n == 0:
            raise ValueError("no lattice states were observed")
        return ErrorReport(
            sup_abs_error_r=self.sup_r,
            sup_abs_error_p=self.sup_p,
            rho=self.rho,
            gamma_eps=self.gamma,
            C_omega_estimate=corrector_constant(self.walks),
            epsilon=self.epsilon,
            T0=self.T0,
            times_sampled=self.n,
            rho_p=self.rho_p,
            initial_error_eta_xi=self.initial_eta_xi,
            sup_error_eta_xi=self.sup_eta_xi,
        )


def error_metrics(true_run, profiles: WaveProfiles, coeffs: CoefficientField, epsilon: float, T0: float,
                  walks: CorrectorWalk | None = None) -> ErrorReport:
    """ErrorReport from a list of lattice states covering [0, T0/eps]."""
    states = list(true_run)
    if not states:
        raise ValueError("empty record list")
    acc = ErrorAccumulator(profiles, coeffs, epsilon, T0, walks)
    for s in states:
        acc(s)
    return acc.report()


def residual_sup(profiles, walks, coeffs, epsilon, T0, n_times: int = 2001) -> float:
    """Gamma_eps = sup_{0<=t<=T0/eps} |(Res1, Res2)|, on a uniform time grid."""
    z = Ansatz(profiles, walks, coeffs, epsilon)
    best = 0.0
    for t in np.linspace(0.0, T0 / epsilon, n_times):
        best = max(best, pair_norm(*z.residual_closed_form(t)))
    return best


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


def slope_fit(xs, ys) -> SlopeFit:
    """Least-squares line through (log x, log y)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ValueError("slope_fit needs at least 3 paired points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("slope_fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    # flat data: the spread is round-off and any line through it is exact
    flat = ss_tot <= 1e-24 * max(1.0, float(np.sum(ly**2)))
    r2 = 1.0 if flat else 1.0 - ss_res / ss_tot
    return SlopeFit(float(slope), float(intercept), r2)


def gronwall_bound(eta0_xi0_norm: float, gamma_eps: float, epsilon: float, equivalence_constants,
                   T0: float = 1.0, b_m: float = 1.0) -> float:
    """Right-hand side of the energy estimate over 0 <= t <= T0/eps.

    With lower/2 |eta,xi|^2 <= H <= upper/2 |eta,xi|^2 and
    dH/dt <= max(1, b_m) Gamma |eta,xi|, integrating d sqrt(H)/dt gives
    |eta,xi|(t) <= sqrt(upper/lower) |eta0,xi0| + max(1, b_m) Gamma t / lower.
    """
    lower, upper = equivalence_constants
    return math.sqrt(upper / lower) * eta0_xi0_norm + max(1.0, b_m) * gamma_eps * T0 / (lower * epsilon)


def gronwall_bound_check(eta0_xi0_norm: float, gamma_eps: float, epsilon: float, measured_sup_error: float,
                         equivalence_constants, T0: float = 1.0, b_m: float = 1.0) -> tuple[bool, float]:
    """(passed, margin) with margin = bound / measured (inf when measured is 0)."""
    bound = gronwall_bound(eta0_xi0_norm, gamma_eps, epsilon, equivalence_constants, T0, b_m)
    # the bound is exact arithmetic on the inequality; allow round-off only
    passed = measured_sup_error <= bound * (1 + 1e-12) + 1e-14
    margin = math.inf if measured_sup_error == 0 else bound / measured_sup_error
    return passed, margin
