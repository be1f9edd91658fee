import json

import numpy as np
import pytest

from minorclt.harness import (AllTrialsFailed, ConfigError, ExperimentConfig, MCReport,
                              convergence_sweep, gaussian_moment_suite, run_experiment, summarize,
                              worker_count)


def cfg(**kw):
    base = dict(ensemble="complex-gaussian", function="sq", phi=1.0, N_list=(16,), trials=200, seed=1)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        dict(N_list=()), dict(trials=0), dict(eta0=0.05), dict(eta0=0.0), dict(checks=("bogus",)),
        dict(phi=0.3, N_list=(15,)), dict(N_list=(1,)), dict(ensemble="nope"), dict(function="nope"),
    ])
    def test_rejected(self, kw):
        with pytest.raises(ConfigError):
            cfg(**kw)

    def test_regime_rejected(self):
        from minorclt.spectral import UnsupportedRegime
        with pytest.raises(UnsupportedRegime):
            cfg(phi=1.05, N_list=(20,))

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv("MINORCLT_WORKERS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("MINORCLT_WORKERS", "x")
        with pytest.raises(ConfigError):
            worker_count()


class TestDeterminism:
    def test_worker_count_invariance(self):
        c = cfg(function="bump", trials=40, N_list=(12, 24))
        a = run_experiment(c, workers=1)
        b = run_experiment(c, workers=2)
        assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)

    def test_seed_changes_samples(self):
        a = run_experiment(cfg(trials=20), workers=1)
        b = run_experiment(cfg(trials=20, seed=2), workers=1)
        assert a.per_N[0].samples != b.per_N[0].samples

    def test_polynomial_fast_path_matches_eigen_path(self):
        a = run_experiment(cfg(trials=30, N_list=(20,)), workers=1)
        b = run_experiment(cfg(trials=30, N_list=(20,), eigen_path=True), workers=1)
        np.testing.assert_allclose(a.per_N[0].samples, b.per_N[0].samples, rtol=1e-10)

    def test_round_trip(self):
        r = run_experiment(cfg(trials=120, checks=("rank1", "ward", "interlacing")), workers=1)
        d = json.loads(json.dumps(r.to_dict(), allow_nan=False))
        assert MCReport.from_dict(d).to_dict() == r.to_dict()


class TestOracles:
    def test_constant_function(self):
        r = run_experiment(cfg(function="one", trials=150), workers=1)
        s = r.per_N[0]
        assert all(v == pytest.approx(1.0, abs=1e-12) for v in s.samples)
        assert s.mean_ok and s.variance_ok

    @pytest.mark.parametrize("phi,N", [(1.0, 32), (4.0, 16), (0.25, 64)])
    def test_bernoulli_zero_variance(self, phi, N):
        r = run_experiment(cfg(ensemble="complex-bernoulli", function="id", phi=phi, N_list=(N,),
                               trials=120), workers=1)
        s = r.per_N[0]
        assert np.max(np.abs(np.array(s.samples) - np.sqrt(phi))) <= 1e-10
        assert r.prediction["zero_variance"]
        assert s.mean_ok and s.variance_ok
        assert all(v is None for v in s.moments.values())

    @pytest.mark.parametrize("ensemble,sigma4", [("complex-bernoulli", 1.0), ("real-gaussian", 3.0),
                                                 ("real-uniform", 1.8)])
    def test_exact_finite_N_mean_of_square(self, ensemble, sigma4):
        N = 16
        r = run_experiment(cfg(ensemble=ensemble, N_list=(N,), trials=3000), workers=1)
        s = r.per_N[0]
        exact = 1.0 + 2.0 + (sigma4 - 3.0) / N
        assert abs(s.mean - exact) <= 5 * s.mean_se

    def test_identity_variance_complex_gaussian(self):
        r = run_experiment(cfg(function="id", N_list=(128,), trials=4000), workers=1)
        s = r.per_N[0]
        assert r.prediction["v_f"] == pytest.approx(1.0)
        assert s.mean_ok and s.variance_ok
        assert abs(s.variance - 1.0) <= 4 * s.variance_se

    def test_checks_clean(self):
        r = run_experiment(cfg(function="bump", trials=20, checks=("rank1", "ward", "interlacing")),
                           workers=1)
        assert r.check_failures == 0
        assert r.passed is not False

    def test_negative_control(self):
        """A mean shifted by 0.1 must be rejected."""
        c = cfg(N_list=(64,), trials=2000)
        good = run_experiment(c, workers=1)
        bad = run_experiment(c, workers=1, omega=good.prediction["omega"] + 0.1)
        assert good.per_N[0].mean_ok
        assert bad.per_N[0].mean_ok is False
        assert not bad.passed


class TestSummary:
    def test_too_few_trials_gives_no_verdict(self):
        s = summarize(np.ones(5), 10, 1.0, 1.0)
        assert s["mean_ok"] is None and s["variance_ok"] is None

    def test_single_trial_is_json_safe(self):
        s = summarize(np.array([1.5]), 10, 1.0, 1.0)
        json.dumps(s, allow_nan=False)
        assert s["variance"] is None

    def test_estimator_meta(self):
        """Synthetic Gaussian samples with known mean and variance are accepted."""
        rng = np.random.default_rng(0)
        N, omega, v = 100, 3.0, 20.0
        vals = omega + rng.normal(0, np.sqrt(v / N), 20000)
        s = summarize(vals, N, omega, v)
        assert s["mean_ok"] and s["variance_ok"]
        assert abs(s["variance"] - v) <= 4 * s["variance_se"]
        assert abs(s["moments"]["4"] - 3) < 0.15
        wrong = summarize(vals, N, omega, 2 * v)
        assert wrong["variance_ok"] is False


class TestMomentSuite:
    def _report(self, values, v_f=1.0, N=100):
        s = summarize(np.asarray(values), N, 0.0, v_f)
        from minorclt.harness import NStats
        ns = NStats(N=N, M=N, trials_ok=len(values), failed=0, failed_seeds=[], check_violations={},
                    omega=0.0, v_f=v_f, samples=list(values), **s)
        return MCReport({}, {"zero_variance": v_f == 0}, [ns])

    def test_gaussian_data_passes(self):
        rng = np.random.default_rng(3)
        v = gaussian_moment_suite(self._report(rng.normal(0, 0.1, 4000)))
        assert [m.status for m in v] == ["pass"] * 3

    def test_skewed_data_fails(self):
        rng = np.random.default_rng(3)
        v = gaussian_moment_suite(self._report(rng.exponential(0.1, 4000)))
        assert {m.order: m.status for m in v}[3] == "fail"

    def test_degenerate_skipped(self):
        v = gaussian_moment_suite(self._report(np.zeros(4000), v_f=0.0))
        assert all(m.status == "skip" for m in v)

    def test_too_few_trials_skipped(self):
        v = gaussian_moment_suite(self._report(np.random.default_rng(0).normal(size=500)))
        assert all(m.status == "skip" for m in v)


class TestSweep:
    def test_requires_geometric_list(self):
        with pytest.raises(ConfigError):
            convergence_sweep(cfg(N_list=(8, 16)))
        with pytest.raises(ConfigError):
            convergence_sweep(cfg(N_list=(8, 16, 40)))

    def test_slopes_from_report(self):
        c = cfg(N_list=(8, 16, 32), trials=200)
        sw = convergence_sweep(c, report=run_experiment(c, workers=1))
        assert sw.N == [8, 16, 32]
        assert len(sw.mean_error) == 3


def test_all_trials_failed_is_reported(monkeypatch):
    from minorclt import harness
    monkeypatch.setattr(harness, "_run_trial", lambda cfg, N, i: (i, None, {}, [i]))
    with pytest.raises(AllTrialsFailed):
        run_experiment(cfg(trials=3), workers=1)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="fourth moment of real Gaussian f=x^2 at N=128 has not "
                                       "converged to 3 at desk scale")
def test_real_gaussian_square_kurtosis():
    r = run_experiment(cfg(ensemble="real-gaussian", N_list=(128,), trials=4000), workers=1)
    v = {m.order: m for m in gaussian_moment_suite(r)}
    assert v[3].status == "pass" and v[4].status == "pass"
