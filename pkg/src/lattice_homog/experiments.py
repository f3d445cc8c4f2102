"""Config-driven convergence experiments and their persisted records."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .analysis import ErrorAccumulator, ErrorReport, gronwall_bound, slope_fit
from .coefficients import (
    DistributionSpec,
    constant_field,
    pattern_periodic,
    pattern_sqrt_growth,
    sample_iid,
)
from .homogenization import gaussian_initial_data, initial_state, profiles_from_initial_data
from .integrators import IntegrationError, IntegratorSpec, default_dt, integrate
from .lattice import CoefficientField

log = logging.getLogger(__name__)

EXPERIMENTS = (
    "fig1_fixed_realization",
    "fig2_boxplots",
    "fig3_periodic",
    "fig4_sqrt_growth",
    "fig5_sigma_sweep",
    "verify_suite",
)

DEFAULT_EPSILONS = tuple(float(e) for e in np.geomspace(0.0125, 0.1, 10))
BASELINE = "baseline"


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float | None = None  # None: min(0.1 x stability bound, t_end / min_samples)
    min_samples: int = 2000


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "fig1_fixed_realization"
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    trials: int = 1
    T0: float = 1.0
    seed: int = 0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    masses: dict = field(default_factory=lambda: {"kind": "uniform", "a": 0.5, "b": 1.5})
    springs: dict = field(default_factory=lambda: {"kind": "constant", "a": 1.0})
    period: tuple[float, ...] = (0.5, 1.5)
    sqrt_growth: tuple[float, float] = (0.5, 1.5)
    widths: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    margin: float = 10.0
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not self.epsilons or any(not 0.0 < e < 0.5 for e in self.epsilons):
            raise ValueError("epsilons must be a nonempty list inside (0, 1/2)")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.T0 > 0:
            raise ValueError("T0 must be positive")
        if any(not 0.0 < w < 1.0 for w in self.widths):
            raise ValueError("fig5 widths must lie in (0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "integrator" in d:
            d["integrator"] = IntegratorConfig(**d["integrator"])
        for key in ("epsilons", "period", "sqrt_growth", "widths"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh) or {})

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("epsilons", "period", "sqrt_growth", "widths"):
            d[key] = list(d[key])
        return d

    def override(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def config_hash(self) -> str:
        d = self.to_dict()
        for key in ("output_dir", "workers"):
            d.pop(key)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


# ---------------------------------------------------------------- records

REPORT_FIELDS = [f.name for f in fields(ErrorReport)]
RECORD_FIELDS = (
    ["experiment", "variant", "epsilon", "trial", "seed", "J", "dt", "method", "status"]
    + [n for n in REPORT_FIELDS if n not in ("epsilon",)]
    + ["gronwall_bound", "gronwall_pass", "mbar", "ktilde", "sigma_m", "sigma_k"]
)


@dataclass
class ExperimentRecord:
    experiment: str
    variant: str
    epsilon: float
    trial: int
    seed: int
    J: int
    dt: float
    method: str
    status: str
    report: ErrorReport | None
    gronwall_bound: float = math.nan
    gronwall_pass: bool = False
    mbar: float = math.nan
    ktilde: float = math.nan
    sigma_m: float = math.nan
    sigma_k: float = math.nan
    duration: float = 0.0  # kept out of records.csv, see timings.csv

    @property
    def key(self) -> tuple:
        return (self.experiment, self.variant, self.epsilon, self.trial)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def row(self) -> dict:
        out = {n: getattr(self, n) for n in RECORD_FIELDS if n == "epsilon" or n not in REPORT_FIELDS}
        rep = self.report.to_dict() if self.report else {}
        for n in REPORT_FIELDS:
            if n != "epsilon":
                out[n] = rep.get(n, "")
        return {n: _fmt(out[n]) for n in RECORD_FIELDS}

    @classmethod
    def from_row(cls, row: dict) -> "ExperimentRecord":
        ok = row["status"] == "ok"
        rep = None
        if ok:
            rep = ErrorReport.from_dict({**{n: row[n] for n in REPORT_FIELDS if n != "epsilon"},
                                         "epsilon": row["epsilon"]})
        return cls(
            experiment=row["experiment"],
            variant=row["variant"],
            epsilon=float(row["epsilon"]),
            trial=int(row["trial"]),
            seed=int(row["seed"]),
            J=int(row["J"]),
            dt=float(row["dt"]),
            method=row["method"],
            status=row["status"],
            report=rep,
            gronwall_bound=float(row["gronwall_bound"] or "nan"),
            gronwall_pass=row["gronwall_pass"] == "True",
            mbar=float(row["mbar"] or "nan"),
            ktilde=float(row["ktilde"] or "nan"),
            sigma_m=float(row["sigma_m"] or "nan"),
            sigma_k=float(row["sigma_k"] or "nan"),
        )


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_records(path) -> list[ExperimentRecord]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return [ExperimentRecord.from_row(r) for r in csv.DictReader(fh)]


def write_records(records, path) -> None:
    """Rewrite ``path`` with records sorted by key (bitwise-stable output)."""
    records = sorted(records, key=lambda r: r.key)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RECORD_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow(r.row())


class _RecordSink:
    """Single serialized writer: appends one row per finished work item."""

    def __init__(self, out_dir: Path):
        self.records_path = out_dir / "records.csv"
        self.timings_path = out_dir / "timings.csv"
        fresh = not self.records_path.exists()
        self._fh = open(self.records_path, "a", newline="")
        self._w = csv.DictWriter(self._fh, fieldnames=RECORD_FIELDS, lineterminator="\n")
        if fresh:
            self._w.writeheader()
        self._timings = open(self.timings_path, "a")

    def add(self, rec: ExperimentRecord) -> None:
        self._w.writerow(rec.row())
        self._fh.flush()
        self._timings.write(f"{rec.experiment},{rec.variant},{rec.epsilon!r},{rec.trial},{rec.duration:.3f}\n")
        self._timings.flush()

    def close(self) -> None:
        self._fh.close()
        self._timings.close()


# ---------------------------------------------------------------- single run

def _mass_spec(config: ExperimentConfig, variant: str) -> DistributionSpec:
    if config.experiment == "fig5_sigma_sweep":
        if variant == BASELINE:
            return DistributionSpec.constant(1.0)
        h = float(variant.split("=")[1])
        return DistributionSpec("uniform", 1.0 - h, 1.0 + h, seed=config.seed)
    return DistributionSpec(seed=config.seed, **config.masses)


def _spring_spec(config: ExperimentConfig) -> DistributionSpec:
    if config.experiment == "fig5_sigma_sweep":
        return DistributionSpec.constant(1.0)
    return DistributionSpec(seed=config.seed, **config.springs)


def _coefficient_bounds(config: ExperimentConfig, variant: str) -> tuple[float, float]:
    """(a_m, b_k) known before sampling; used to size the window."""
    e = config.experiment
    if e == "fig3_periodic":
        return min(config.period), 1.0
    if e == "fig4_sqrt_growth":
        return min(config.sqrt_growth), 1.0
    return _mass_spec(config, variant).bounds[0], _spring_spec(config).bounds[1]


def window_size(config: ExperimentConfig, epsilon: float, variant: str = "") -> int:
    """J covering the data support, the fastest lattice signal over T0/eps, and a margin."""
    a_m, b_k = _coefficient_bounds(config, variant)
    support = gaussian_initial_data(epsilon).Phi.support_radius(1e-16)
    speed = math.sqrt(b_k / a_m)
    return int(math.ceil((support + speed * config.T0 + config.margin) / epsilon))


def build_coefficients(config: ExperimentConfig, epsilon: float, trial: int, variant: str = "") -> CoefficientField:
    J = window_size(config, epsilon, variant)
    e = config.experiment
    if e == "fig3_periodic":
        return pattern_periodic(config.period, J)
    if e == "fig4_sqrt_growth":
        return pattern_sqrt_growth(*config.sqrt_growth, J)
    m_spec, k_spec = _mass_spec(config, variant), _spring_spec(config)
    if m_spec.kind == "constant" and k_spec.kind == "constant":
        return constant_field(J, m_spec.a, k_spec.a)
    # fig1 keeps one realization for every epsilon
    return sample_iid(m_spec, k_spec, J, trial=0 if e == "fig1_fixed_realization" else trial)


def step_size(config: ExperimentConfig, coeffs: CoefficientField, t_end: float) -> float:
    ic = config.integrator
    dt = ic.dt if ic.dt is not None else default_dt(coeffs, ic.method)
    n = max(math.ceil(t_end / dt), ic.min_samples)
    return t_end / n


def run_single(config: ExperimentConfig, epsilon: float, trial: int, variant: str = "") -> ExperimentRecord:
    """One lattice integration and its error report; failures become a status string."""
    start = time.perf_counter()
    rec = ExperimentRecord(config.experiment, variant, float(epsilon), trial, config.seed,
                           0, math.nan, config.integrator.method, "ok", None)
    try:
        coeffs = build_coefficients(config, epsilon, trial, variant)
        rec.J = coeffs.J
        rec.mbar, rec.ktilde = coeffs.mbar, coeffs.ktilde
        rec.sigma_m, rec.sigma_k = coeffs.sigma_m, coeffs.sigma_k
        data = gaussian_initial_data(epsilon)
        profiles = profiles_from_initial_data(data, coeffs)
        t_end = config.T0 / epsilon
        rec.dt = step_size(config, coeffs, t_end)
        acc = ErrorAccumulator(profiles, coeffs, epsilon, config.T0)
        spec = IntegratorSpec(config.integrator.method, rec.dt, t_end, 1)
        integrate(initial_state(data, coeffs), coeffs, spec, acc)
        rep = acc.report()
        rec.report = rep
        rec.gronwall_bound = gronwall_bound(rep.initial_error_eta_xi, rep.gamma_eps, epsilon,
                                            coeffs.equivalence_constants(), config.T0, coeffs.b_m)
        rec.gronwall_pass = bool(rep.sup_error_eta_xi <= rec.gronwall_bound * (1 + 1e-12) + 1e-14)
    except (IntegrationError, ValueError, FloatingPointError) as exc:
        rec.status = f"failed: {exc}".replace("\n", " ")
        log.warning("trial %s eps=%g %s failed: %s", trial, epsilon, variant, exc)
    rec.duration = time.perf_counter() - start
    return rec


def work_items(config: ExperimentConfig) -> list[tuple[float, int, str]]:
    if config.experiment == "fig5_sigma_sweep":
        items = [(e, 0, BASELINE) for e in config.epsilons]
        items += [(e, t, f"width={w:.4f}") for w in config.widths for e in config.epsilons
                  for t in range(config.trials)]
        return items
    trials = 1 if config.experiment in ("fig1_fixed_realization", "fig3_periodic", "fig4_sqrt_growth") \
        else config.trials
    return [(e, t, "") for e in config.epsilons for t in range(trials)]


def _run_item(args):
    config, eps, trial, variant = args
    return run_single(config, eps, trial, variant)


def run_experiment(config: ExperimentConfig, output_dir=None) -> list[ExperimentRecord]:
    """Run every missing (epsilon, trial, variant) item and persist records.

    Records already present in ``records.csv`` with status ok are kept and
    skipped.  On return ``records.csv`` is rewritten in key order and
    ``summary.json`` is refreshed.
    """
    if config.experiment == "verify_suite":
        raise ValueError("verify_suite is run through verify.verify_suite")
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps({**config.to_dict(), "config_hash": config.config_hash()},
                                                sort_keys=True, indent=2) + "\n")
    previous = {r.key: r for r in read_records(out / "records.csv") if r.ok and r.experiment == config.experiment}
    todo = [(config, e, t, v) for e, t, v in work_items(config)
            if (config.experiment, v, float(e), t) not in previous]
    log.info("%s: %d items, %d already done", config.experiment, len(todo) + len(previous), len(previous))
    done = dict(previous)
    sink = _RecordSink(out)
    try:
        if config.workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                futures = [pool.submit(_run_item, item) for item in todo]
                for fut in as_completed(futures):
                    rec = fut.result()
                    sink.add(rec)
                    done[rec.key] = rec
        else:
            for item in todo:
                rec = _run_item(item)
                sink.add(rec)
                done[rec.key] = rec
                log.info("eps=%.5f trial=%d %s %s (%.2fs)", rec.epsilon, rec.trial, rec.variant,
                         rec.status, rec.duration)
    finally:
        sink.close()
    records = sorted(done.values(), key=lambda r: r.key)
    write_records(records, out / "records.csv")
    summary = summarize(records, config)
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return records


# ---------------------------------------------------------------- summaries

def loglog_scale(epsilon: float) -> float:
    """sqrt(log log (1/eps)), the envelope factor divided out in the fixed-realization plot."""
    return math.sqrt(math.log(math.log(1.0 / epsilon)))


def _quartiles(values) -> dict:
    q1, med, q3 = np.percentile(np.asarray(values, dtype=float), [25, 50, 75])
    return {"q1": float(q1), "median": float(med), "q3": float(q3), "iqr": float(q3 - q1), "n": len(values)}


def _fit(xs, ys):
    try:
        f = slope_fit(xs, ys)
    except ValueError:
        return None
    return {"slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared}


def summarize(records, config: ExperimentConfig | None = None) -> dict:
    """Per-(variant, epsilon) quartiles of the error metrics plus log-log slope fits."""
    ok = [r for r in records if r.ok]
    out = {"n_records": len(records), "n_failed": len(records) - len(ok),
           "gronwall_all_pass": all(r.gronwall_pass for r in ok), "variants": {}}
    if config is not None:
        out["experiment"] = config.experiment
        out["config_hash"] = config.config_hash()
    for variant in sorted({r.variant for r in ok}):
        rows = [r for r in ok if r.variant == variant]
        eps = sorted({r.epsilon for r in rows})
        per_eps = {}
        for e in eps:
            at = [r for r in rows if r.epsilon == e]
            per_eps[repr(e)] = {
                "rho": _quartiles([r.report.rho for r in at]),
                "abs_error": _quartiles([r.report.sup_abs_error_r for r in at]),
                "gamma_eps": _quartiles([r.report.gamma_eps for r in at]),
            }
        med = lambda name: [per_eps[repr(e)][name]["median"] for e in eps]  # noqa: E731
        out["variants"][variant] = {
            "per_epsilon": per_eps,
            "fits": {
                "rho": _fit(eps, med("rho")),
                "rho_over_loglog": _fit(eps, [v / loglog_scale(e) for v, e in zip(med("rho"), eps)]),
                "abs_error": _fit(eps, med("abs_error")),
                "gamma_eps": _fit(eps, med("gamma_eps")),
            },
        }
    return out


# ---------------------------------------------------------------- plots

def emit_plots(records, output_dir, config_hash: str = "") -> list[Path]:
    """Write one SVG per figure kind found in ``records``; returns the paths."""
    from . import svg

    ok = [r for r in records if r.ok]
    if not ok:
        raise ValueError("no successful records to plot")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    footer = f"config {config_hash}" if config_hash else ""
    paths = []
    for exp in sorted({r.experiment for r in ok}):
        rows = sorted((r for r in ok if r.experiment == exp), key=lambda r: r.key)
        if exp == "fig5_sigma_sweep":
            base = [r.report.sup_abs_error_r for r in rows if r.variant == BASELINE]
            for e in sorted({r.epsilon for r in rows}):
                groups = []
                for v in sorted({r.variant for r in rows if r.variant != BASELINE}):
                    at = [r for r in rows if r.variant == v and r.epsilon == e]
                    if at:
                        groups.append((f"{at[0].sigma_m:.3f}", [r.report.sup_abs_error_r for r in at]))
                ref = float(np.median(base)) if base else None
                paths.append(svg.boxplot(out / f"{exp}_eps{e:.4f}.svg", groups,
                                         f"absolute error vs mass deviation (eps = {e:.4g})",
                                         "sigma_m", "sup_t |r - r0|", reference=ref, footer=footer))
            continue
        eps = sorted({r.epsilon for r in rows})
        if exp == "fig2_boxplots":
            groups = [(f"{e:.4f}", [r.report.rho for r in rows if r.epsilon == e]) for e in eps]
            paths.append(svg.boxplot(out / f"{exp}.svg", groups, "relative error over realizations",
                                     "epsilon", "rho", footer=footer, log_y=True))
            med = [float(np.median(g[1])) for g in groups]
            paths.append(svg.loglog_scatter(out / f"{exp}_medians.svg", {"median rho": (eps, med)},
                                            "median relative error", "epsilon", "rho", footer=footer))
            continue
        first = {e: next(r for r in rows if r.epsilon == e) for e in eps}
        rho = [first[e].report.rho for e in eps]
        series = {"rho": (eps, rho)}
        if exp == "fig1_fixed_realization":
            series = {"rho / sqrt(loglog(1/eps))": (eps, [v / loglog_scale(e) for v, e in zip(rho, eps)])}
        if all(v > 0 for v in series[next(iter(series))][1]):
            paths.append(svg.loglog_scatter(out / f"{exp}.svg", series, f"{exp}: relative error",
                                            "epsilon", "relative error", footer=footer))
        gamma = [first[e].report.gamma_eps for e in eps]
        if all(g > 0 for g in gamma):
            paths.append(svg.loglog_scatter(out / f"{exp}_residual.svg", {"Gamma_eps": (eps, gamma)},
                                            f"{exp}: residual sup", "epsilon", "Gamma_eps", footer=footer))
    return paths


def plot_directory(input_dir) -> list[Path]:
    """Re-plot a finished output directory from its records.csv and config.json."""
    d = Path(input_dir)
    records = read_records(d / "records.csv")
    cfg = d / "config.json"
    chash = json.loads(cfg.read_text()).get("config_hash", "") if cfg.exists() else ""
    return emit_plots(records, d, chash)
