"""Monte Carlo mean, variance and shape of sqrt(N)(f_N - omega) for a smooth bump.

Mean and variance settle quickly. The third moment is the slowest to reach
its Gaussian value, and at these sizes its interval may still exclude 0.
"""
from minorclt import ExperimentConfig, gaussian_moment_suite, run_experiment

cfg = ExperimentConfig("complex-gaussian", "bump", 1.0, (32, 64, 128), trials=2000, seed=4)
report = run_experiment(cfg)
print(f"omega = {report.prediction['omega']:.5f}, V_f = {report.prediction['v_f']:.5f}")
for s in report.per_N:
    print(f"N={s.N:4d}  mean {s.mean:.5f} +- {s.mean_se:.5f}  "
          f"variance {s.variance:.4f} +- {s.variance_se:.4f}  "
          f"skew {s.moments['3']:+.3f}  kurtosis {s.moments['4']:.3f}")
for m in gaussian_moment_suite(report):
    print(f"moment {m.order}: estimate {m.estimate:.3f}, 99% CI ({m.ci[0]:.3f}, {m.ci[1]:.3f}) -> {m.status}")
