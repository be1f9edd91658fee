"""One large draw against the limiting eigenvalue density."""
import numpy as np

from minorclt import edges, get_ensemble, mp_density, sample_matrix

M, N = 1200, 400
X = sample_matrix(get_ensemble("real-gaussian"), M, N, seed=1)
ev = np.linalg.eigvalsh(X.T @ X)
e = edges(M / N)
print(f"support [{e.gamma_minus:.3f}, {e.gamma_plus:.3f}], sample range [{ev.min():.3f}, {ev.max():.3f}]")

bins = np.linspace(e.gamma_minus, e.gamma_plus, 13)
counts, _ = np.histogram(ev, bins)
mid = 0.5 * (bins[1:] + bins[:-1])
width = bins[1] - bins[0]
print(f"{'x':>7} {'empirical':>10} {'limit':>10}")
for x, c in zip(mid, counts):
    print(f"{x:7.3f} {c / (N * width):10.4f} {float(mp_density(x, M / N)):10.4f}")
