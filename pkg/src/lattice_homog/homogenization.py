"""Effective wave equation, d'Alembert profiles and the corrected long-wave ansatz."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite as _H

from .coefficients import CorrectorWalk
from .lattice import CoefficientField

MAX_ORDER = 4


class Profile:
    """Smooth function of one variable with derivatives up to ``MAX_ORDER``."""

    def derivative(self, x, order: int = 0):
        raise NotImplementedError

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivatives(self, x, max_order: int):
        """[F(x), F'(x), ..., F^(max_order)(x)]."""
        return [self.derivative(x, n) for n in range(max_order + 1)]

    def support_radius(self, tol: float = 1e-16) -> float:
        """Half-width outside of which the profile and its derivatives are below ``tol``."""
        return 50.0

    def __add__(self, other: "Profile") -> "Profile":
        return combine(((1.0, self), (1.0, other)))

    def __mul__(self, scale: float) -> "Profile":
        return combine(((float(scale), self),))

    __rmul__ = __mul__

    def __neg__(self) -> "Profile":
        return self * -1.0

    def __sub__(self, other: "Profile") -> "Profile":
        return self + (-other)


def _check_order(order: int) -> None:
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"derivative order must be in 0..{MAX_ORDER}")


@dataclass(frozen=True)
class Gaussian(Profile):
    """amplitude * exp(-((x - center) / width)^2)."""

    amplitude: float = 1.0
    center: float = 0.0
    width: float = 1.0

    def derivative(self, x, order: int = 0):
        _check_order(order)
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        # d^n/du^n exp(-u^2) = (-1)^n H_n(u) exp(-u^2), physicists' Hermite
        coef = np.zeros(order + 1)
        coef[order] = 1.0
        poly = _H.hermval(u, coef) if order else 1.0
        return self.amplitude * (-1) ** order * poly * np.exp(-u * u) / self.width**order

    def derivatives(self, x, max_order: int):
        _check_order(max_order)
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        g = self.amplitude * np.exp(-u * u)
        # physicists' Hermite recurrence H_{n+1} = 2u H_n - 2n H_{n-1}
        h_prev, h = np.ones_like(u), 2.0 * u
        out = [g]
        for n in range(1, max_order + 1):
            out.append((-1) ** n * h * g / self.width**n)
            h_prev, h = h, 2.0 * u * h - 2.0 * n * h_prev
        return out

    def support_radius(self, tol: float = 1e-16) -> float:
        # generous: Hermite prefactors grow like u^4 at order 4
        return abs(self.center) + self.width * (math.sqrt(-math.log(tol)) + 3.0)


@dataclass(frozen=True)
class Zero(Profile):
    def derivative(self, x, order: int = 0):
        _check_order(order)
        return np.zeros_like(np.asarray(x, dtype=float))

    def support_radius(self, tol: float = 1e-16) -> float:
        return 0.0


@dataclass(frozen=True)
class Combination(Profile):
    terms: tuple

    def derivatives(self, x, max_order: int):
        x = np.asarray(x, dtype=float)
        out = [np.zeros_like(x) for _ in range(max_order + 1)]
        for scale, prof in self.terms:
            for n, d in enumerate(prof.derivatives(x, max_order)):
                out[n] = out[n] + scale * d
        return out

    def derivative(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for scale, prof in self.terms:
            if scale:
                out = out + scale * prof.derivative(x, order)
        return out

    def support_radius(self, tol: float = 1e-16) -> float:
        return max((p.support_radius(tol) for _, p in self.terms), default=0.0)


def combine(terms) -> Profile:
    """Linear combination with nested combinations flattened and like terms merged."""
    merged: dict = {}
    order: list = []
    for scale, prof in terms:
        parts = prof.terms if isinstance(prof, Combination) else ((1.0, prof),)
        for inner, p in parts:
            if isinstance(p, Zero):
                continue
            key = p if _hashable(p) else id(p)
            if key not in merged:
                merged[key] = [0.0, p]
                order.append(key)
            merged[key][0] += scale * inner
    kept = tuple((merged[key][0], merged[key][1]) for key in order if merged[key][0] != 0.0)
    if not kept:
        return Zero()
    if len(kept) == 1 and kept[0][0] == 1.0:
        return kept[0][1]
    return Combination(kept)


def _hashable(obj) -> bool:
    try:
        hash(obj)
    except TypeError:
        return False
    return True


class SampledProfile(Profile):
    """Cubic-spline profile built from samples; third derivative is piecewise constant."""

    def __init__(self, x, y):
        from scipy.interpolate import CubicSpline

        self._spline = CubicSpline(np.asarray(x, float), np.asarray(y, float), extrapolate=False)
        self._radius = float(np.max(np.abs(x)))

    def derivative(self, x, order: int = 0):
        _check_order(order)
        x = np.asarray(x, dtype=float)
        if order > 3:
            return np.zeros_like(x)
        out = self._spline(x, order)
        return np.nan_to_num(out, nan=0.0)

    def support_radius(self, tol: float = 1e-16) -> float:
        return self._radius


@dataclass(frozen=True)
class InitialData:
    """Long-wave data r(j,0) = Phi(eps j)/k(j), p(j,0) = Psi(eps j)."""

    Phi: Profile
    Psi: Profile
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 1/2)")


def gaussian_initial_data(epsilon: float) -> InitialData:
    """Phi = exp(-X^2), Psi = -Phi: a purely right-moving pulse when ktilde*mbar = 1."""
    g = Gaussian()
    return InitialData(g, -g, epsilon)


@dataclass(frozen=True)
class WaveProfiles:
    A: Profile
    B: Profile
    c: float
    ktilde: float
    mbar: float

    def __post_init__(self):
        if not math.isclose(self.c, math.sqrt(self.ktilde / self.mbar), rel_tol=1e-15):
            raise ValueError("wave speed must equal sqrt(ktilde / mbar)")

    @property
    def impedance(self) -> float:
        """sqrt(ktilde * mbar)."""
        return math.sqrt(self.ktilde * self.mbar)

    def support_radius(self, tol: float = 1e-16) -> float:
        return max(self.A.support_radius(tol), self.B.support_radius(tol))


def wave_speed(coeffs: CoefficientField) -> float:
    return math.sqrt(coeffs.ktilde / coeffs.mbar)


def profiles_from_initial_data(data: InitialData, coeffs: CoefficientField) -> WaveProfiles:
    s = math.sqrt(coeffs.ktilde * coeffs.mbar)
    A = 0.5 * data.Phi - (0.5 * s) * data.Psi
    B = 0.5 * data.Phi + (0.5 * s) * data.Psi
    return WaveProfiles(A, B, wave_speed(coeffs), coeffs.ktilde, coeffs.mbar)


def effective_solution(profiles: WaveProfiles, X, tau):
    """d'Alembert solution (Q0, P0) of the effective first-order system."""
    X = np.asarray(X, dtype=float)
    xm = X - profiles.c * tau
    xp = X + profiles.c * tau
    a = profiles.A(xm)
    b = profiles.B(xp)
    return a + b, (b - a) / profiles.impedance


def initial_state(data: InitialData, coeffs: CoefficientField):
    from .lattice import LatticeState

    x = data.epsilon * coeffs.indices
    return LatticeState(data.Phi(x) / coeffs.k, data.Psi(x), 0.0)


class Ansatz:
    """First-order corrected long-wave approximation (r~, p~) on the window.

    r~ = [A(x-) + B(x+)]/k + eps chi_m/k [A'(x-) + B'(x+)]
    p~ = [-A(x-) + B(x+)]/s + eps chi_k/s [-A'(x-) + B'(x+)]

    with x-+ = eps (j -+ c t) and s = sqrt(ktilde mbar).
    """

    def __init__(self, profiles: WaveProfiles, walks: CorrectorWalk, coeffs: CoefficientField, epsilon: float):
        if not 0.0 < epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 1/2)")
        self.profiles = profiles
        self.walks = walks
        self.coeffs = coeffs
        self.epsilon = float(epsilon)
        # one extra site on each side feeds the shifted differences
        self._jext = np.arange(-coeffs.J - 1, coeffs.J + 2, dtype=float)
        self._cache_t = None
        self._cache = None

    def _frame(self, t):
        """A^(n)(x-) and B^(n)(x+), n = 0..2, on the extended index range."""
        if self._cache_t != t:
            eps, c = self.epsilon, self.profiles.c
            xm = eps * (self._jext - c * t)
            xp = eps * (self._jext + c * t)
            A = self.profiles.A.derivatives(xm, 2)
            B = self.profiles.B.derivatives(xp, 2)
            self._cache = (A, B)
            self._cache_t = t
        return self._cache

    def _AB(self, t, order: int, shift: int = 0):
        A, B = self._frame(t)
        lo = 1 + shift
        hi = A[order].size - 1 + shift
        return A[order][lo:hi], B[order][lo:hi]

    def leading_r(self, t):
        a, b = self._AB(t, 0)
        return (a + b) / self.coeffs.k

    def leading_p(self, t):
        a, b = self._AB(t, 0)
        return (b - a) / self.profiles.impedance

    def r(self, t):
        eps, k = self.epsilon, self.coeffs.k
        a, b = self._AB(t, 0)
        a1, b1 = self._AB(t, 1)
        return (a + b) / k + eps * self.walks.chi_m / k * (a1 + b1)

    def p(self, t):
        eps, s = self.epsilon, self.profiles.impedance
        a, b = self._AB(t, 0)
        a1, b1 = self._AB(t, 1)
        return (b - a) / s + eps * self.walks.chi_k / s * (b1 - a1)

    def dr_dt(self, t):
        eps, c, k = self.epsilon, self.profiles.c, self.coeffs.k
        a1, b1 = self._AB(t, 1)
        a2, b2 = self._AB(t, 2)
        return eps * c / k * (b1 - a1) + eps**2 * c * self.walks.chi_m / k * (b2 - a2)

    def dp_dt(self, t):
        eps, c, s = self.epsilon, self.profiles.c, self.profiles.impedance
        a1, b1 = self._AB(t, 1)
        a2, b2 = self._AB(t, 2)
        return eps * c / s * (a1 + b1) + eps**2 * c * self.walks.chi_k / s * (a2 + b2)

    def residual_closed_form(self, t):
        """Expanded residuals evaluated term by term.

        Res1 = [-d+A + eps A']/s + [d+B - eps B']/s
               + eps^2 c chi_m/k (A'' - B'') + eps chi_k(j+1)/s d+(-A' + B')
        Res2 = [d-A - eps A']/m + [d-B - eps B']/m
               + eps chi_m(j-1)/m d-(A' + B') - eps^2 c chi_k/s (A'' + B'')

        d+ and d- act on the sampled profiles, A and A' at eps(j - c t),
        B and B' at eps(j + c t).
        """
        eps, c = self.epsilon, self.profiles.c
        s, k, m = self.profiles.impedance, self.coeffs.k, self.coeffs.m
        w = self.walks
        a0, b0 = self._AB(t, 0)
        a1, b1 = self._AB(t, 1)
        a2, b2 = self._AB(t, 2)
        a0n, b0n = self._AB(t, 0, +1)
        a1n, b1n = self._AB(t, 1, +1)
        a0p, b0p = self._AB(t, 0, -1)
        a1p, b1p = self._AB(t, 1, -1)

        res1 = (
            (-(a0n - a0) + eps * a1) / s
            + ((b0n - b0) - eps * b1) / s
            + eps**2 * c * w.chi_m / k * (a2 - b2)
            + eps * w.chi_k_next / s * (-(a1n - a1) + (b1n - b1))
        )
        res2 = (
            ((a0 - a0p) - eps * a1) / m
            + ((b0 - b0p) - eps * b1) / m
            + eps * w.chi_m_prev / m * ((a1 - a1p) + (b1 - b1p))
            - eps**2 * c * w.chi_k / s * (a2 + b2)
        )
        return res1, res2


def ansatz(profiles, walks, coeffs, epsilon, j, t):
    """Point evaluation of (r~, p~) at lattice sites ``j`` (scalar or array)."""
    z = Ansatz(profiles, walks, coeffs, epsilon)
    idx = np.asarray(j) + coeffs.J
    return z.r(t)[idx], z.p(t)[idx]


def ansatz_time_derivatives(profiles, walks, coeffs, epsilon, j, t):
    z = Ansatz(profiles, walks, coeffs, epsilon)
    idx = np.asarray(j) + coeffs.J
    return z.dr_dt(t)[idx], z.dp_dt(t)[idx]


def residual_closed_form(profiles, walks, coeffs, epsilon, t):
    return Ansatz(profiles, walks, coeffs, epsilon).residual_closed_form(t)


def definitional_residual(profiles, walks, coeffs, epsilon, t, boundary: str = "zero"):
    """Residuals of the ansatz computed straight from the lattice operators."""
    from .lattice import residuals

    z = Ansatz(profiles, walks, coeffs, epsilon)
    return residuals(z.r, z.p, z.dr_dt, z.dp_dt, coeffs, t, boundary)
