"""Low-pass interpolation of lattice sequences and coarse-grained fields.

``L[f](x) = sum_j f(j) sinc(x - j)`` (normalized sinc) is the band-limited
interpolant of a sequence and ``S[u](j) = u(j)`` samples a function.
L2 norms over the real line are computed with Gauss-Legendre panels of unit
width across the window plus a padding region; the slowly decaying tails of
the interpolant beyond that are added in closed form (see ``_tail_mass``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .homogenization import WaveProfiles, effective_solution
from .lattice import CoefficientField, LatticeState, window_indices

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(12)
_CHUNK = 2_000_000


def _indices_for(f, indices):
    f = np.asarray(f, dtype=float)
    if indices is None:
        indices = window_indices((f.size - 1) // 2)
    indices = np.asarray(indices)
    if indices.shape != f.shape:
        raise ValueError("sequence and index arrays differ in shape")
    return f, indices


def _truncate(f, indices, tol=1e-14):
    scale = np.max(np.abs(f)) if f.size else 0.0
    if scale == 0.0:
        return f[:0], indices[:0]
    keep = np.abs(f) >= tol * scale
    return f[keep], indices[keep]


def sequence_fourier(f, kappa, indices=None):
    """F[f](kappa) = (1/2pi) sum_j exp(-i j kappa) f(j)."""
    f, idx = _indices_for(f, indices)
    kappa = np.asarray(kappa, dtype=float)
    phase = np.exp(-1j * np.multiply.outer(kappa, idx))
    return phase @ f / (2.0 * math.pi)


def lowpass_interpolate(f, x, indices=None, tol: float = 1e-14):
    """Cardinal series sum_j f(j) sinc(x - j) by direct summation."""
    f, idx = _indices_for(f, indices)
    lookup = dict(zip(idx.tolist(), f.tolist()))
    f, idx = _truncate(f, idx, tol)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.zeros_like(flat)
    if f.size:
        step = max(1, _CHUNK // f.size)
        for s in range(0, flat.size, step):
            xs = flat[s : s + step]
            out[s : s + step] = np.sinc(xs[:, None] - idx[None, :]) @ f
    # np.sinc leaves ~1e-17 at nonzero integers; the series is exact there
    at_int = np.flatnonzero(flat == np.round(flat))
    out[at_int] = [lookup.get(int(v), 0.0) for v in flat[at_int]]
    return out.reshape(x.shape)


def _alternating_kernel(f, idx, x):
    """G(x) = sum_j (-1)^j f(j) / (x - j), so that L[f](x) = sin(pi x) G(x) / pi."""
    sf = np.where(idx % 2 == 0, f, -f)
    out = np.zeros_like(x)
    step = max(1, _CHUNK // max(f.size, 1))
    for s in range(0, x.size, step):
        xs = x[s : s + step]
        out[s : s + step] = (1.0 / (xs[:, None] - idx[None, :])) @ sf
    return out


def lowpass_interpolate_fast(f, x, indices=None, tol: float = 1e-14):
    """Same series via the alternating-kernel identity; ``x`` must avoid integers."""
    f, idx = _indices_for(f, indices)
    f, idx = _truncate(f, idx, tol)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if not f.size:
        return np.zeros_like(x)
    if np.any(np.abs(flat - np.round(flat)) < 1e-6):
        raise ValueError("fast path needs x away from the integers; use lowpass_interpolate")
    return (np.sin(math.pi * flat) * _alternating_kernel(f, idx, flat) / math.pi).reshape(x.shape)


@dataclass(frozen=True)
class InterpolatedField:
    """x -> sum_j base(j) sinc(x - j); equals base(j) at the integers."""

    base: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if np.shape(self.base) != np.shape(self.indices):
            raise ValueError("base and indices differ in shape")

    @classmethod
    def from_sequence(cls, f) -> "InterpolatedField":
        f = np.asarray(f, dtype=float)
        return cls(f, window_indices((f.size - 1) // 2))

    def __call__(self, x):
        return lowpass_interpolate(self.base, x, self.indices)

    def sample(self) -> np.ndarray:
        return self(self.indices.astype(float))


def sample(u: Callable, indices):
    """S[u](j) = u(j)."""
    return np.asarray(u(np.asarray(indices, dtype=float)), dtype=float)


def _panel_nodes(lo: int, hi: int):
    starts = np.arange(lo, hi, dtype=float)
    x = (starts[:, None] + 0.5 + 0.5 * _NODES[None, :]).ravel()
    w = np.tile(0.5 * _WEIGHTS, starts.size)
    return x, w


def _tail_mass(f, idx, edge: float, side: int, n_panels: int = 32) -> float:
    """int of L[f]^2 beyond ``edge`` (side +1: [edge, inf); -1: (-inf, edge]).

    Uses sin^2(pi x) = (1 - cos 2 pi x)/2 and drops the oscillatory half, whose
    integral is O(G^2' (edge)) ~ |edge|^-3; the smooth half is integrated after
    the substitution x = edge / s, s in (0, 1].
    """
    X = abs(edge)
    sf = np.where(idx % 2 == 0, f, -f)
    nodes, wts = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (a + b) + 0.5 * (b - a) * nodes
        x = side * X / s
        G = (1.0 / (x[:, None] - idx[None, :])) @ sf
        total += 0.5 * (b - a) * float(np.sum(wts * G * G * X / (s * s)))
    return total / (2.0 * math.pi**2)


def interpolant_distance(f, indices=None, g: Callable | None = None, pad: int = 400, tol: float = 1e-14) -> float:
    """|| L[f] - g ||_{L2(R)} for a sequence f and a decaying function g.

    ``g`` must be negligible outside [min j - pad, max j + pad].
    """
    f, idx = _indices_for(f, indices)
    f, idx = _truncate(f, idx, tol)
    if not f.size and g is None:
        return 0.0
    lo = int(idx.min()) - pad if f.size else -pad
    hi = int(idx.max()) + pad if f.size else pad
    x, w = _panel_nodes(lo, hi)
    Lf = np.sin(math.pi * x) * _alternating_kernel(f, idx, x) / math.pi if f.size else np.zeros_like(x)
    diff = Lf if g is None else Lf - np.asarray(g(x), dtype=float)
    inner = float(np.sum(w * diff * diff))
    tails = 0.0
    if f.size:
        tails = _tail_mass(f, idx, hi, +1) + _tail_mass(f, idx, lo, -1)
    return math.sqrt(inner + tails)


def interpolant_norm(f, indices=None, **kw) -> float:
    """|| L[f] ||_{L2(R)}, which equals ||f||_{l2} (orthonormality of the shifted sincs)."""
    return interpolant_distance(f, indices, None, **kw)


def interp_convergence_error(F: Callable, epsilon: float, support_radius: float | None = None, pad: int = 400) -> float:
    """|| L S[F(eps .)](./eps) - F ||_{L2} (change of variables X = eps x)."""
    if not 0.0 < epsilon <= 0.5:
        raise ValueError("epsilon must lie in (0, 1/2]")
    R = getattr(F, "support_radius", lambda tol=1e-16: 50.0)(1e-16) if support_radius is None else support_radius
    J = int(math.ceil(R / epsilon))
    idx = window_indices(J)
    f = np.asarray(F(epsilon * idx.astype(float)), dtype=float)
    if not np.any(f):
        return 0.0
    d = interpolant_distance(f, idx, lambda x: F(epsilon * x), pad=pad)
    return math.sqrt(epsilon) * d


def band_limited_projection(F: Callable, cutoff: float, x, half_width: float = 60.0, n: int = 2**16):
    """F with its spectrum cut to |k| < ``cutoff`` (the projection theta_cutoff applied in frequency).

    The spectrum comes from an FFT of F on [-half_width, half_width); the
    surviving modes are summed exactly at ``x``.
    """
    grid = np.linspace(-half_width, half_width, n, endpoint=False)
    h = grid[1] - grid[0]
    spec = np.fft.fft(np.asarray(F(grid), dtype=float))
    freq = 2.0 * math.pi * np.fft.fftfreq(n, d=h)
    keep = np.abs(freq) < cutoff
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * np.multiply.outer(x.ravel() - grid[0], freq[keep]))
    return (phase @ spec[keep]).real.reshape(x.shape) / n


@dataclass
class CoarseGrainedRun:
    """Q_eps(X, tau) = L[k r(., tau/eps)](X/eps) and P_eps likewise from p."""

    states: Sequence[LatticeState]
    coeffs: CoefficientField
    epsilon: float

    def __post_init__(self):
        if not self.states:
            raise ValueError("coarse graining needs at least one lattice state")
        self._taus = np.array([self.epsilon * s.t for s in self.states])

    @property
    def taus(self) -> np.ndarray:
        return self._taus

    def _state(self, tau: float) -> LatticeState:
        i = int(np.argmin(np.abs(self._taus - tau)))
        if abs(self._taus[i] - tau) > 1e-9 * max(1.0, abs(tau)):
            raise ValueError(f"tau = {tau} is not covered by the stored run")
        return self.states[i]

    def field(self, name: str, tau: float) -> InterpolatedField:
        s = self._state(tau)
        base = self.coeffs.k * s.r if name == "Q" else s.p
        return InterpolatedField(base, self.coeffs.indices)

    def Q(self, X, tau: float):
        return self.field("Q", tau)(np.asarray(X, float) / self.epsilon)

    def P(self, X, tau: float):
        return self.field("P", tau)(np.asarray(X, float) / self.epsilon)

    def distance_to_effective(self, profiles: WaveProfiles, tau: float) -> tuple[float, float]:
        """(||Q_eps - Q0||, ||P_eps - P0||) in L2(dX) at time tau."""
        s = self._state(tau)
        eps = self.epsilon
        idx = self.coeffs.indices
        root = math.sqrt(eps)

        def Q0(x):
            return effective_solution(profiles, eps * x, tau)[0]

        def P0(x):
            return effective_solution(profiles, eps * x, tau)[1]

        dq = interpolant_distance(self.coeffs.k * s.r, idx, Q0)
        dp = interpolant_distance(s.p, idx, P0)
        return root * dq, root * dp

    def sup_distance(self, profiles: WaveProfiles, taus=None) -> float:
        taus = self._taus if taus is None else taus
        return max(sum(self.distance_to_effective(profiles, tau)) for tau in taus)

    def change_of_variables_sides(self, profiles: WaveProfiles, tau: float) -> tuple[float, float]:
        """Both sides of ||P_eps - LS[P0(eps ., tau)](./eps)||_{L2} = sqrt(eps) ||p - S[P0(eps ., tau)]||_{l2}.

        The left side is evaluated by quadrature of the interpolant, the right
        side by a plain lattice sum.
        """
        s = self._state(tau)
        eps = self.epsilon
        idx = self.coeffs.indices
        sampled = effective_solution(profiles, eps * idx, tau)[1]
        lhs = math.sqrt(eps) * interpolant_distance(s.p - sampled, idx)
        rhs = math.sqrt(eps) * float(np.linalg.norm(s.p - sampled))
        return lhs, rhs


def coarse_grained_fields(run, coeffs: CoefficientField, epsilon: float) -> CoarseGrainedRun:
    return CoarseGrainedRun(list(run), coeffs, epsilon)
