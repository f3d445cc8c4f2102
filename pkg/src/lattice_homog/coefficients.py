"""Coefficient fields, corrector random walks and walk statistics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice import CoefficientField, window_indices

KINDS = ("uniform", "two_point", "constant")

# stream labels for the (field, side) split of a realization
_STREAM = {("m", "+"): 0, ("m", "-"): 1, ("k", "+"): 2, ("k", "-"): 3}


@dataclass(frozen=True)
class DistributionSpec:
    """Law of a single coefficient.

    uniform: U[a, b].  two_point: value ``a`` with probability ``prob``,
    otherwise ``b``.  constant: the value ``a``.
    """

    kind: str
    a: float
    b: float | None = None
    prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "constant":
            if self.a <= 0:
                raise ValueError("constant coefficient must be positive")
            return
        if self.b is None:
            raise ValueError(f"{self.kind} distribution needs two support parameters")
        if self.a <= 0 or self.b <= 0:
            raise ValueError("coefficient support must lie in (0, inf)")
        if self.kind == "uniform" and not self.a < self.b:
            raise ValueError("uniform support needs a < b")
        if self.kind == "two_point" and not 0.0 < self.prob < 1.0:
            raise ValueError("two_point probability must lie in (0, 1)")

    @classmethod
    def constant(cls, value: float) -> "DistributionSpec":
        return cls("constant", value)

    @property
    def bounds(self) -> tuple[float, float]:
        if self.kind == "constant":
            return self.a, self.a
        return min(self.a, self.b), max(self.a, self.b)

    def mean(self) -> float:
        if self.kind == "constant":
            return self.a
        if self.kind == "uniform":
            return 0.5 * (self.a + self.b)
        return self.prob * self.a + (1 - self.prob) * self.b

    def mean_inverse(self) -> float:
        if self.kind == "constant":
            return 1.0 / self.a
        if self.kind == "uniform":
            return math.log(self.b / self.a) / (self.b - self.a)
        return self.prob / self.a + (1 - self.prob) / self.b

    def std(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "uniform":
            return (self.b - self.a) / math.sqrt(12.0)
        return abs(self.a - self.b) * math.sqrt(self.prob * (1 - self.prob))

    def std_inverse(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "uniform":
            second = 1.0 / (self.a * self.b)
            return math.sqrt(max(second - self.mean_inverse() ** 2, 0.0))
        return abs(1 / self.a - 1 / self.b) * math.sqrt(self.prob * (1 - self.prob))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n, float(self.a))
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, n)
        return np.where(rng.random(n) < self.prob, float(self.a), float(self.b))


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``; order-independent across trials."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _two_sided_draw(spec: DistributionSpec, name: str, J: int, trial: int) -> np.ndarray:
    # j >= 0 and j < 0 come from separate streams so that a site's value does
    # not depend on the window size J.
    pos = spec.sample(stream(spec.seed, trial, _STREAM[(name, "+")]), J + 1)
    neg = spec.sample(stream(spec.seed, trial, _STREAM[(name, "-")]), J)
    return np.concatenate([neg[::-1], pos])


def sample_iid(
    spec_m: DistributionSpec, spec_k: DistributionSpec, J: int, trial: int = 0
) -> CoefficientField:
    if J < 1:
        raise ValueError("J must be a positive integer")
    m = _two_sided_draw(spec_m, "m", J, trial)
    k = _two_sided_draw(spec_k, "k", J, trial)
    a_m, b_m = spec_m.bounds
    a_k, b_k = spec_k.bounds
    return CoefficientField(
        m=m,
        k=k,
        a_m=a_m,
        b_m=b_m,
        a_k=a_k,
        b_k=b_k,
        mbar=spec_m.mean(),
        ktilde=1.0 / spec_k.mean_inverse(),
        sigma_m=spec_m.std(),
        sigma_k=spec_k.std_inverse(),
        label=f"iid(m={spec_m.kind}, k={spec_k.kind})",
        meta={"seed_m": spec_m.seed, "seed_k": spec_k.seed, "trial": trial},
    )


def constant_field(J: int, m: float = 1.0, k: float = 1.0) -> CoefficientField:
    return sample_iid(DistributionSpec.constant(m), DistributionSpec.constant(k), J)


def _deterministic_field(m: np.ndarray, k: np.ndarray, m_period, k_period, label: str):
    m_period = np.asarray(m_period, dtype=float)
    k_period = np.asarray(k_period, dtype=float)
    return CoefficientField(
        m=m,
        k=k,
        a_m=float(m_period.min()),
        b_m=float(m_period.max()),
        a_k=float(k_period.min()),
        b_k=float(k_period.max()),
        mbar=float(m_period.mean()),
        ktilde=float(1.0 / np.mean(1.0 / k_period)),
        sigma_m=float(m_period.std()),
        sigma_k=float(np.std(1.0 / k_period)),
        label=label,
    )


def pattern_periodic(values, J: int, k_values=(1.0,)) -> CoefficientField:
    """m(j) = values[j mod len(values)]; likewise k from ``k_values``."""
    values = np.asarray(values, dtype=float)
    k_values = np.asarray(k_values, dtype=float)
    if values.size == 0 or k_values.size == 0:
        raise ValueError("periodic pattern needs at least one value")
    if np.any(values <= 0) or np.any(k_values <= 0):
        raise ValueError("periodic coefficients must be positive")
    j = window_indices(J)
    m = values[np.mod(j, values.size)]
    k = k_values[np.mod(j, k_values.size)]
    return _deterministic_field(m, k, values, k_values, f"periodic{values.tolist()}")


def sqrt_growth_sequence(m1: float, m2: float, n: int) -> np.ndarray:
    """First ``n`` terms of m1, m2, m1, m1, m2, m2, m1, m1, m1, ..."""
    out = np.empty(n)
    pos, block = 0, 1
    while pos < n:
        for value in (m1, m2):
            end = min(pos + block, n)
            out[pos:end] = value
            pos = end
        block += 1
    return out


def pattern_sqrt_growth(m1: float, m2: float, J: int, k: float = 1.0) -> CoefficientField:
    """Block pattern whose mass corrector grows like sqrt(|j|).

    The sequence is laid out for j >= 0 and mirrored: m(-j) = m(j).
    """
    if m1 <= 0 or m2 <= 0 or k <= 0:
        raise ValueError("coefficients must be positive")
    seq = sqrt_growth_sequence(m1, m2, J + 1)
    m = np.concatenate([seq[1:][::-1], seq])
    kk = np.full(2 * J + 1, float(k))
    field = _deterministic_field(m, kk, [m1, m2], [k], f"sqrt_growth({m1}, {m2})")
    # the period-free pattern averages to the midpoint in the long run
    return CoefficientField(
        m=field.m,
        k=field.k,
        a_m=field.a_m,
        b_m=field.b_m,
        a_k=field.a_k,
        b_k=field.b_k,
        mbar=0.5 * (m1 + m2),
        ktilde=field.ktilde,
        sigma_m=0.5 * abs(m1 - m2),
        sigma_k=0.0,
        label=field.label,
    )


@dataclass(frozen=True)
class CorrectorWalk:
    """Corrector walks with chi(0) = 0.

    ``chi_k`` solves delta+ chi_k = ktilde/k - 1, ``chi_m`` solves
    delta- chi_m = m/mbar - 1.  ``chi_k_right_edge`` is chi_k(J+1) and
    ``chi_m_left_edge`` is chi_m(-J-1), both determined by the window data.
    """

    chi_k: np.ndarray
    chi_m: np.ndarray
    chi_k_right_edge: float = 0.0
    chi_m_left_edge: float = 0.0

    @property
    def chi_k_next(self) -> np.ndarray:
        """chi_k(j + 1) on the window."""
        return np.append(self.chi_k[1:], self.chi_k_right_edge)

    @property
    def chi_m_prev(self) -> np.ndarray:
        """chi_m(j - 1) on the window."""
        return np.insert(self.chi_m[:-1], 0, self.chi_m_left_edge)


def solve_forward_difference(g: np.ndarray) -> np.ndarray:
    """f with f(0) = 0 and f(j+1) - f(j) = g(j) across the window."""
    g = np.asarray(g, dtype=float)
    J = (g.size - 1) // 2
    f = np.zeros_like(g)
    f[J + 1 :] = np.cumsum(g[J:-1])
    # f(-j) = -sum_{i=1}^{j} g(-i)
    f[:J] = -np.cumsum(g[J - 1 :: -1][:J])[::-1]
    return f


def solve_backward_difference(h: np.ndarray) -> np.ndarray:
    """f with f(0) = 0 and f(j) - f(j-1) = h(j) across the window."""
    h = np.asarray(h, dtype=float)
    J = (h.size - 1) // 2
    f = np.zeros_like(h)
    f[J + 1 :] = np.cumsum(h[J + 1 :])
    # f(-j) = -sum_{i=0}^{j-1} h(-i)
    f[:J] = -np.cumsum(h[J:0:-1])[::-1]
    return f


def corrector_walks(coeffs: CoefficientField) -> CorrectorWalk:
    g = coeffs.ktilde / coeffs.k - 1.0
    h = coeffs.m / coeffs.mbar - 1.0
    chi_k = solve_forward_difference(g)
    chi_m = solve_backward_difference(h)
    return CorrectorWalk(
        chi_k=chi_k,
        chi_m=chi_m,
        chi_k_right_edge=float(chi_k[-1] + g[-1]),
        chi_m_left_edge=float(chi_m[0] - h[0]),
    )


def _loglog(x):
    return np.log(np.log(x))


def lil_envelope_stats(walk, sigma: float, indices=None) -> dict:
    """Finite-sample view of a walk against its iterated-logarithm envelope.

    Returns ``C_omega`` = max_{j != 0} |chi(j)| / sqrt(|j| loglog(|j| + e)),
    ``exceed_count_2sigma`` = #{|j| >= 3 : |chi(j)| > 2 sigma sqrt(2|j| loglog|j|)},
    and ``ratio_curve``: the per-dyadic-shell maximum of the C_omega ratio
    (shells [2^n, 2^(n+1)) in |j|), with the shell starts in ``shells``.
    """
    chi = np.asarray(walk, dtype=float)
    if chi.size < 100:
        raise ValueError("walk too short for envelope statistics (need >= 100 sites)")
    if indices is None:
        J = (chi.size - 1) // 2
        indices = window_indices(J)
    aj = np.abs(np.asarray(indices))
    nz = aj > 0
    ratio = np.zeros_like(chi)
    ratio[nz] = np.abs(chi[nz]) / np.sqrt(aj[nz] * _loglog(aj[nz] + math.e))
    big = aj >= 3
    envelope = 2.0 * sigma * np.sqrt(2.0 * aj[big] * _loglog(aj[big].astype(float)))
    exceed = int(np.count_nonzero(np.abs(chi[big]) > envelope))
    top = int(aj.max())
    shells, curve = [], []
    n = 0
    while 2**n <= top:
        sel = (aj >= 2**n) & (aj < 2 ** (n + 1))
        shells.append(2**n)
        curve.append(float(ratio[sel].max()))
        n += 1
    return {
        "C_omega": float(ratio.max()),
        "exceed_count_2sigma": exceed,
        "exceed_fraction": exceed / max(int(np.count_nonzero(big)), 1),
        "ratio_curve": np.asarray(curve),
        "shells": np.asarray(shells),
    }


def martingale_max_moment(
    spec: DistributionSpec, N: int, trials: int, seed: int = 0, chunk: int = 500
) -> dict:
    """Monte Carlo estimate of E[max_{0<=n<=N} W(n)^2] for W(n) = chi(j+n) - chi(j).

    Increments are y = X/E[X] - 1 with X ~ ``spec`` (the mass-corrector
    increment), whose variance ``sigma2`` sets the Doob bound 4 N sigma2.
    """
    mean = spec.mean()
    sigma2 = (spec.std() / mean) ** 2
    total = 0.0
    done = 0
    block = 0
    while done < trials:
        n = min(chunk, trials - done)
        rng = stream(seed, N, block)
        y = spec.sample(rng, n * N).reshape(n, N) / mean - 1.0
        w = np.cumsum(y, axis=1)
        # W(0) = 0 contributes nothing to the max of squares
        total += float(np.sum(np.max(w * w, axis=1)))
        done += n
        block += 1
    estimate = total / trials
    bound = 4.0 * N * sigma2
    return {
        "N": N,
        "trials": trials,
        "sigma2": sigma2,
        "mean_max_sq": estimate,
        "bound": bound,
        "ratio": estimate / bound if bound > 0 else 0.0,
        "tolerance_bound": bound * (1.0 + 3.0 / math.sqrt(trials)),
    }


def write_csv(coeffs: CoefficientField, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "m", "k"])
        for j, m, k in zip(coeffs.indices, coeffs.m, coeffs.k):
            writer.writerow([int(j), repr(float(m)), repr(float(k))])


def read_csv(path, mbar: float | None = None, ktilde: float | None = None) -> CoefficientField:
    """Load a field written by :func:`write_csv`.

    Statistics default to the window's empirical mean / harmonic mean.
    """
    rows = list(csv.DictReader(Path(path).open()))
    j = np.array([int(r["j"]) for r in rows])
    order = np.argsort(j)
    j = j[order]
    J = int(j.max())
    if not np.array_equal(j, window_indices(J)):
        raise ValueError("CSV must cover a symmetric window -J..J without gaps")
    m = np.array([float(r["m"]) for r in rows])[order]
    k = np.array([float(r["k"]) for r in rows])[order]
    return CoefficientField(
        m=m,
        k=k,
        a_m=float(m.min()),
        b_m=float(m.max()),
        a_k=float(k.min()),
        b_k=float(k.max()),
        mbar=float(m.mean()) if mbar is None else mbar,
        ktilde=float(1 / np.mean(1 / k)) if ktilde is None else ktilde,
        sigma_m=float(m.std()),
        sigma_k=float(np.std(1 / k)),
        label=f"csv:{Path(path).name}",
    )
