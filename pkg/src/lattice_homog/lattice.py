"""Linear FPUT lattice on a finite window [-J, J].

Sequences are 1-d float arrays of length 2J+1; position ``J`` holds site
``j = 0``.  Values beyond the window are treated as zero unless
``boundary="periodic"`` is requested (used only by plane-wave oracles).

The evolution is the first-order system

    dr/dt = delta+ p,        dp/dt = (1/m) delta- (k r).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

BOUNDARIES = ("zero", "periodic")


def window_indices(J: int) -> np.ndarray:
    return np.arange(-J, J + 1)


def _check_boundary(boundary: str) -> None:
    if boundary not in BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}; expected one of {BOUNDARIES}")


@dataclass(frozen=True)
class CoefficientField:
    """Masses ``m`` and spring constants ``k`` on the window, with statistics.

    ``mbar`` is E[m] and ``ktilde`` is 1/E[1/k] (exact distribution values for
    random fields, period averages for deterministic patterns).  ``sigma_m``
    is the standard deviation of m and ``sigma_k`` that of 1/k.
    """

    m: np.ndarray
    k: np.ndarray
    a_m: float
    b_m: float
    a_k: float
    b_k: float
    mbar: float
    ktilde: float
    sigma_m: float = 0.0
    sigma_k: float = 0.0
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        k = np.asarray(self.k, dtype=float)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "k", k)
        if m.ndim != 1 or m.shape != k.shape or m.size % 2 == 0:
            raise ValueError("m and k must be 1-d arrays of equal odd length 2J+1")
        if not (0 < self.a_m <= self.b_m and 0 < self.a_k <= self.b_k):
            raise ValueError("coefficient bounds must be positive and ordered")
        tol = 1e-12
        if m.min() < self.a_m * (1 - tol) or m.max() > self.b_m * (1 + tol):
            raise ValueError("masses outside [a_m, b_m]")
        if k.min() < self.a_k * (1 - tol) or k.max() > self.b_k * (1 + tol):
            raise ValueError("springs outside [a_k, b_k]")
        if not (self.a_m * (1 - tol) <= self.mbar <= self.b_m * (1 + tol)):
            raise ValueError("mbar outside [a_m, b_m]")
        if not (self.a_k * (1 - tol) <= self.ktilde <= self.b_k * (1 + tol)):
            raise ValueError("ktilde outside [a_k, b_k]")
        if self.sigma_m < 0 or self.sigma_k < 0:
            raise ValueError("standard deviations must be nonnegative")

    @property
    def J(self) -> int:
        return (self.m.size - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        return window_indices(self.J)

    @property
    def walk_sigma_m(self) -> float:
        """Standard deviation of the mass-corrector increment m/mbar - 1."""
        return self.sigma_m / self.mbar

    @property
    def walk_sigma_k(self) -> float:
        """Standard deviation of the spring-corrector increment ktilde/k - 1."""
        return self.ktilde * self.sigma_k

    @property
    def composite_sigma_m(self) -> float:
        return self.sigma_m / math.sqrt(self.mbar)

    @property
    def composite_sigma_k(self) -> float:
        return self.sigma_k * math.sqrt(self.ktilde)

    @property
    def empirical_mbar(self) -> float:
        return float(self.m.mean())

    @property
    def empirical_ktilde(self) -> float:
        return float(1.0 / np.mean(1.0 / self.k))

    def equivalence_constants(self) -> tuple[float, float]:
        """(lower, upper) with lower/2 |eta,xi|^2 <= H <= upper/2 |eta,xi|^2."""
        return min(1.0 / self.b_k, self.a_m), max(1.0 / self.a_k, self.b_m)


@dataclass(frozen=True)
class LatticeState:
    r: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if r.shape != p.shape or r.ndim != 1:
            raise ValueError("r and p must be 1-d arrays with identical index ranges")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(p))):
            raise ValueError("lattice state contains non-finite entries")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p", p)

    @property
    def J(self) -> int:
        return (self.r.size - 1) // 2

    @classmethod
    def zeros(cls, J: int, t: float = 0.0) -> "LatticeState":
        return cls(np.zeros(2 * J + 1), np.zeros(2 * J + 1), t)


def shift(seq, direction: int, boundary: str = "zero") -> np.ndarray:
    """``out[j] = seq[j + direction]`` with zero fill (or wrap) at the edges."""
    f = np.asarray(seq, dtype=float)
    if f.size == 0:
        raise ValueError("cannot shift an empty sequence")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    _check_boundary(boundary)
    if boundary == "periodic":
        return np.roll(f, -direction)
    out = np.zeros_like(f)
    if direction == 1:
        out[:-1] = f[1:]
    else:
        out[1:] = f[:-1]
    return out


def difference(seq, direction: int, boundary: str = "zero") -> np.ndarray:
    """Forward (+1) or backward (-1) difference."""
    f = np.asarray(seq, dtype=float)
    if direction == 1:
        return shift(f, 1, boundary) - f
    if direction == -1:
        return f - shift(f, -1, boundary)
    raise ValueError("direction must be +1 or -1")


def _check_shapes(r: np.ndarray, coeffs: CoefficientField) -> None:
    if r.shape != coeffs.m.shape:
        raise ValueError(
            f"state window (size {r.size}) does not match coefficient window (size {coeffs.m.size})"
        )


def rhs(state: LatticeState, coeffs: CoefficientField, boundary: str = "zero"):
    """Time derivatives (dr, dp) of the lattice system at ``state``."""
    _check_shapes(state.r, coeffs)
    return rhs_arrays(state.r, state.p, coeffs.m, coeffs.k, boundary)


def rhs_arrays(r, p, m, k, boundary: str = "zero"):
    dr = difference(p, 1, boundary)
    dp = difference(k * r, -1, boundary) / m
    return dr, dp


def energy(eta, xi, coeffs: CoefficientField) -> float:
    """H = 1/2 sum(eta^2/k + m xi^2) for error variables (eta, xi)."""
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    _check_shapes(eta, coeffs)
    _check_shapes(xi, coeffs)
    return 0.5 * float(np.sum(eta * eta / coeffs.k + coeffs.m * xi * xi))


def lattice_energy(state: LatticeState, coeffs: CoefficientField) -> float:
    """Conserved quadratic energy 1/2 sum(k r^2 + m p^2)."""
    return energy(coeffs.k * state.r, state.p, coeffs)


def residuals(
    candidate_r: Callable[[float], np.ndarray],
    candidate_p: Callable[[float], np.ndarray],
    candidate_dr_dt: Callable[[float], np.ndarray],
    candidate_dp_dt: Callable[[float], np.ndarray],
    coeffs: CoefficientField,
    t: float,
    boundary: str = "zero",
):
    """Defect of a candidate (r~, p~) substituted into the lattice equations.

    Res1 = delta+ p~ - d/dt r~ and Res2 = (1/m) delta-(k r~) - d/dt p~, with
    the time derivatives supplied analytically by the caller.
    """
    r = np.asarray(candidate_r(t), dtype=float)
    p = np.asarray(candidate_p(t), dtype=float)
    dr = np.asarray(candidate_dr_dt(t), dtype=float)
    dp = np.asarray(candidate_dp_dt(t), dtype=float)
    for a in (r, p, dr, dp):
        _check_shapes(a, coeffs)
    res1 = difference(p, 1, boundary) - dr
    res2 = difference(coeffs.k * r, -1, boundary) / coeffs.m - dp
    return res1, res2


def plane_wave(J: int, mode: int, t: float, amplitude: float = 1.0) -> LatticeState:
    """Exact periodic solution for m = k = 1 with wavenumber 2 pi mode / (2J+1).

    r = Re(R e^{i(kappa j - omega t)}) with omega = 2 sin(kappa/2) and
    p carrying the amplitude P = -i omega R / (e^{i kappa} - 1).
    """
    n = 2 * J + 1
    kappa = 2.0 * math.pi * mode / n
    if not 0 < mode < n:
        raise ValueError("mode must lie in 1 .. 2J")
    omega = 2.0 * math.sin(kappa / 2.0)
    R = complex(amplitude)
    P = -1j * omega * R / (np.exp(1j * kappa) - 1.0)
    phase = np.exp(1j * (kappa * window_indices(J) - omega * t))
    return LatticeState((R * phase).real, (P * phase).real, t)
