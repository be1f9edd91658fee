"""Monte Carlo orchestration and statistical verdicts for ``sqrt(N)(f_N - Omega_f)``."""
from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from .ensembles import get_ensemble, sample_matrix
from .functions import AlmostAnalytic, get_function
from .lab import (INTERLACING_TOL, RankOneProbe, SamplePair, TrialFailure, delta_N_direct,
                  hs_reconstruct, linear_stat, local_law_residuals, polynomial_stat,
                  spectra)
from .predictor import ZERO_VARIANCE_TOL, predict
from .spectral import Ratio

WORKERS_ENV = "MINORCLT_WORKERS"
MIN_VERDICT_TRIALS = 100
MIN_MOMENT_TRIALS = 2000
KNOWN_CHECKS = ("rank1", "ward", "interlacing", "hs")
MEAN_ABS_SLACK, MEAN_REL_SLACK = 0.02, 0.01
VAR_REL_SLACK = 0.15
ZERO_VAR_TOL = 1e-20
RANK1_TOL = 1e-10
IDENTITY_TOL = 1e-10
CHECK_POINTS = (2 + 1j, 0.5 + 0.1j)


class ConfigError(ValueError):
    pass


class AllTrialsFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: str
    function: str
    phi: float
    N_list: tuple
    trials: int
    seed: int
    eta0: float = 1e-3
    checks: tuple = ()
    eigen_path: bool = False  # force eigenvalues even for polynomial f

    def __post_init__(self):
        object.__setattr__(self, "N_list", tuple(int(n) for n in self.N_list))
        object.__setattr__(self, "checks", tuple(self.checks))
        if not self.N_list:
            raise ConfigError("N_list is empty")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if not 0 < self.eta0 <= 1e-2:
            raise ConfigError("eta0 must lie in (0, 1e-2]")
        for c in self.checks:
            if c not in KNOWN_CHECKS:
                raise ConfigError(f"unknown check {c!r}; known: {', '.join(KNOWN_CHECKS)}")
        Ratio(self.phi)
        for n in self.N_list:
            M = self.phi * n
            if n < 2 or abs(M - round(M)) > 1e-9 or round(M) < 2:
                raise ConfigError(f"M = phi*N = {M} must be an integer >= 2 (N={n})")
        try:
            get_ensemble(self.ensemble)
            get_function(self.function)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc

    def M(self, N):
        return int(round(self.phi * N))

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["N_list"] = list(self.N_list)
        d["checks"] = list(self.checks)
        return d


@dataclass
class NStats:
    N: int
    M: int
    trials_ok: int
    failed: int
    failed_seeds: list
    check_violations: dict
    mean: float
    mean_se: float
    omega: float
    variance: float  # sample variance of sqrt(N)(f_N - Omega)
    variance_se: float
    second_moment: float  # mean of N (f_N - Omega)^2
    v_f: float
    moments: dict  # standardized moments, keys "3".."6"
    normality: dict
    mean_ok: bool | None
    variance_ok: bool | None
    samples: list = field(repr=False, default_factory=list)


@dataclass
class MCReport:
    config: dict
    prediction: dict
    per_N: list

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(d["config"], d["prediction"], [NStats(**s) for s in d["per_N"]])

    @property
    def passed(self):
        return all(v is not False for s in self.per_N
                   for v in (s.mean_ok, s.variance_ok)) and not self.check_failures

    @property
    def check_failures(self):
        return sum(sum(s.check_violations.values()) for s in self.per_N)


# -- per trial ---------------------------------------------------------------

def _trial(cfg: ExperimentConfig, N: int, index: int, attempt: int = 0):
    ens = get_ensemble(cfg.ensemble)
    f = get_function(cfg.function)
    stream = (cfg.seed, N, index) if attempt == 0 else (cfg.seed, N, index, attempt)
    X = sample_matrix(ens, cfg.M(N), N, stream)
    sp = SamplePair.from_matrix(X)
    violations = dict.fromkeys(cfg.checks, 0)
    s = None
    if f.polynomial is not None and not cfg.eigen_path and not {"interlacing", "hs"} & set(cfg.checks):
        value = polynomial_stat(f.polynomial, sp)
    else:
        s = spectra(sp)
        value = linear_stat(f, s)
        if "interlacing" in cfg.checks:
            tol = INTERLACING_TOL * sp.scale
            bad = s.interlacing_violation() > tol or min(s.lam_tilde.min(initial=0), s.lam.min(initial=0)) < -tol
            violations["interlacing"] = int(bad)
    if "rank1" in cfg.checks:
        z = np.array(CHECK_POINTS)
        d1 = delta_N_direct(sp, z)
        d2 = RankOneProbe.from_sample(sp).delta(z)
        bad = np.any(np.abs(d1 - d2) > RANK1_TOL * np.abs(d1)) or np.any(np.abs(z.imag * d1) > 2)
        violations["rank1"] = int(bad)
    if "ward" in cfg.checks:
        rec = local_law_residuals(sp, CHECK_POINTS[0])
        violations["ward"] = int(rec.ward_residual > IDENTITY_TOL or rec.trace_swap_residual > IDENTITY_TOL)
    if "hs" in cfg.checks:
        hs = hs_reconstruct(AlmostAnalytic(f, cfg.phi), sp, cfg.eta0, spectrum=s)
        violations["hs"] = int(abs(hs.value - value) > 10 * cfg.eta0 + hs.quadrature_error)
    if not np.isfinite(value):
        raise TrialFailure("non-finite statistic")
    return value, violations


def _run_trial(cfg, N, index):
    """Run one trial; on failure replay once with a perturbed stream."""
    for attempt in (0, 1):
        try:
            value, viol = _trial(cfg, N, index, attempt)
            return index, value, viol, None
        except TrialFailure:
            continue
    return index, None, {}, [cfg.seed, N, index]


def _run_chunk(args):
    cfg, N, indices = args
    with threadpool_limits(1):
        return [_run_trial(cfg, N, i) for i in indices]


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def _collect(cfg, N, workers):
    idx = list(range(cfg.trials))
    if workers == 1:
        results = _run_chunk((cfg, N, idx))
    else:
        chunks = [idx[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            results = [r for part in pool.map(_run_chunk, [(cfg, N, c) for c in chunks]) for r in part]
    results.sort(key=lambda r: r[0])
    return results


# -- statistics --------------------------------------------------------------

def _standardized_moments(y, orders=(3, 4, 5, 6)):
    c = y - y.mean()
    sd = np.sqrt(np.mean(c**2))
    if sd == 0:
        return {str(k): None for k in orders}
    z = c / sd
    return {str(k): float(np.mean(z**k)) for k in orders}


def _normality(y):
    if y.size < 20 or np.ptp(y) == 0:
        return {}
    out = {"jarque_bera_p": float(stats.jarque_bera(y).pvalue)}
    out["dagostino_p"] = float(stats.normaltest(y).pvalue)
    if y.size <= 5000:
        out["shapiro_p"] = float(stats.shapiro(y).pvalue)
    return out


def summarize(values, N, omega, v_f):
    """Mean, variance and moment statistics for one N with verdicts.

    When the prediction is degenerate (V_f = 0) the fluctuations are pure
    rounding noise, so no shape statistics are reported.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    y = np.sqrt(N) * (v - omega)
    mean = float(v.mean())
    # undefined estimates are None so that reports survive a JSON round trip
    mean_se = float(v.std(ddof=1) / np.sqrt(n)) if n > 1 else None
    var = float(y.var(ddof=1)) if n > 1 else None
    c = y - y.mean()
    var_se = float(np.sqrt(max(np.mean(c**4) - np.mean(c**2) ** 2, 0.0) / n)) if n > 1 else None
    mean_ok = var_ok = None
    if n >= MIN_VERDICT_TRIALS:
        mean_ok = bool(abs(mean - omega) <= max(3 * mean_se, MEAN_REL_SLACK * abs(omega) + MEAN_ABS_SLACK))
        if v_f <= ZERO_VARIANCE_TOL:
            var_ok = bool(var <= ZERO_VAR_TOL)
        else:
            var_ok = bool(abs(var - v_f) <= max(3 * var_se, VAR_REL_SLACK * v_f))
    degenerate = v_f <= ZERO_VARIANCE_TOL
    moments = {k: None for k in ("3", "4", "5", "6")} if degenerate else _standardized_moments(y)
    return dict(mean=mean, mean_se=mean_se, variance=var, variance_se=var_se,
                second_moment=float(np.mean(y**2)), moments=moments,
                normality={} if degenerate else _normality(y), mean_ok=mean_ok, variance_ok=var_ok)


def run_experiment(cfg: ExperimentConfig, workers=None, omega=None) -> MCReport:
    """Run all trials for every N. Output depends only on the config.

    ``omega`` overrides the predicted mean (used for negative controls).
    """
    if workers is None:
        workers = worker_count()
    ens = get_ensemble(cfg.ensemble)
    pred = predict(get_function(cfg.function), cfg.phi, ens)
    om = pred.omega if omega is None else float(omega)
    per_N = []
    for N in cfg.N_list:
        results = _collect(cfg, N, workers)
        ok = [r for r in results if r[3] is None]
        failed = [r[3] for r in results if r[3] is not None]
        if not ok:
            raise AllTrialsFailed(f"all {cfg.trials} trials failed at N={N}")
        values = [r[1] for r in ok]
        viol = dict.fromkeys(cfg.checks, 0)
        for r in ok:
            for k, v in r[2].items():
                viol[k] += v
        s = summarize(values, N, om, pred.v_f)
        per_N.append(NStats(N=N, M=cfg.M(N), trials_ok=len(ok), failed=len(failed),
                            failed_seeds=failed, check_violations=viol, omega=om, v_f=pred.v_f,
                            samples=values, **s))
    return MCReport(cfg.to_dict(), pred.to_dict(), per_N)


# -- Gaussian moment suite ---------------------------------------------------

GAUSSIAN_MOMENTS = {3: 0.0, 4: 3.0, 6: 15.0}


@dataclass
class MomentVerdict:
    N: int
    order: int
    expected: float
    estimate: float | None
    ci: tuple | None
    status: str  # "pass", "fail" or "skip"
    reason: str = ""


def gaussian_moment_suite(report: MCReport, n_boot=2000, level=0.99, seed=0,
                          N=None) -> list[MomentVerdict]:
    """Bootstrap CIs of standardized moments against the Gaussian values.

    Runs on the largest N unless ``N`` is given.
    """
    stats_ = {s.N: s for s in report.per_N}
    s = stats_[max(stats_) if N is None else N]
    if s.v_f <= ZERO_VARIANCE_TOL or report.prediction.get("zero_variance"):
        return [MomentVerdict(s.N, k, e, None, None, "skip", "degenerate case: V_f = 0")
                for k, e in GAUSSIAN_MOMENTS.items()]
    if s.trials_ok < MIN_MOMENT_TRIALS:
        return [MomentVerdict(s.N, k, e, None, None, "skip",
                              f"need >= {MIN_MOMENT_TRIALS} trials, have {s.trials_ok}")
                for k, e in GAUSSIAN_MOMENTS.items()]
    y = np.sqrt(s.N) * (np.asarray(s.samples) - s.omega)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, s.N])))
    idx = rng.integers(0, y.size, size=(n_boot, y.size))
    boot = y[idx]
    c = boot - boot.mean(axis=1, keepdims=True)
    sd = np.sqrt(np.mean(c**2, axis=1, keepdims=True))
    zb = c / sd
    a = (1 - level) / 2
    point = _standardized_moments(y, tuple(GAUSSIAN_MOMENTS))
    out = []
    for k, e in GAUSSIAN_MOMENTS.items():
        dist = np.mean(zb**k, axis=1)
        lo, hi = np.quantile(dist, [a, 1 - a])
        out.append(MomentVerdict(s.N, k, e, point[str(k)], (float(lo), float(hi)),
                                 "pass" if lo <= e <= hi else "fail"))
    return out


# -- convergence sweep -------------------------------------------------------

@dataclass
class SweepResult:
    N: list
    mean_error: list
    mean_se: list
    variance_error: list
    variance_se: list
    mean_slope: float
    variance_slope: float
    mean_monotone: bool
    variance_monotone: bool
    final_mean_significant: bool  # |mean - Omega| > 3 SE at the largest N


def _slope(N, err):
    err = np.asarray(err, dtype=float)
    if np.any(err <= 0):
        return None
    return float(np.polyfit(np.log(N), np.log(err), 1)[0])


def convergence_sweep(cfg: ExperimentConfig, report: MCReport | None = None, omega=None,
                      workers=None) -> SweepResult:
    """Log-log slopes of the mean and variance errors over a geometric N list."""
    Ns = sorted(cfg.N_list)
    if len(Ns) < 3:
        raise ConfigError("a sweep needs at least three values of N")
    ratios = np.array(Ns[1:]) / np.array(Ns[:-1])
    if not np.allclose(ratios, ratios[0]):
        raise ConfigError("sweep N values must be geometric")
    if report is None:
        report = run_experiment(cfg, workers=workers, omega=omega)
    by_N = {s.N: s for s in report.per_N}
    rows = [by_N[n] for n in Ns]
    me = [abs(s.mean - s.omega) for s in rows]
    ve = [abs(s.variance - s.v_f) for s in rows]
    return SweepResult(
        N=Ns, mean_error=me, mean_se=[s.mean_se for s in rows],
        variance_error=ve, variance_se=[s.variance_se for s in rows],
        mean_slope=_slope(Ns, me), variance_slope=_slope(Ns, ve),
        mean_monotone=bool(np.all(np.diff(me) < 0)),
        variance_monotone=bool(np.all(np.diff(ve) < 0)),
        final_mean_significant=bool(me[-1] > 3 * rows[-1].mean_se),
    )
