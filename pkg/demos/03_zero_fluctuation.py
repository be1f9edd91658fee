"""With unit-modulus entries Tr W~ - Tr W = |x|^2 is constant, so f(x) = x
gives sqrt(phi) exactly on every draw, and the predicted variance is zero."""
import numpy as np

from minorclt import get_ensemble, get_function, predict, sample_matrix
from minorclt.lab import SamplePair, linear_stat, spectra

ens = get_ensemble("complex-bernoulli")
ident = get_function("id")
for phi, N in ((1.0, 50), (4.0, 25)):
    vals = [linear_stat(ident, spectra(SamplePair.from_matrix(sample_matrix(ens, int(phi * N), N, k))))
            for k in range(20)]
    r = predict(ident, phi, ens)
    print(f"phi={phi}: spread of f_N over 20 draws {np.ptp(vals):.1e}, "
          f"mean {np.mean(vals):.12f}, predicted {r.omega:.12f}, V_f = {r.v_f:.1e}")

other = get_ensemble("complex-gaussian")
print(f"for comparison, complex Gaussian entries give V_f = {predict(ident, 1.0, other).v_f:.3f}")
