"""Recover f_N from resolvents by the almost-analytic contour formula."""
from minorclt import AlmostAnalytic, SamplePair, get_ensemble, get_function, sample_matrix
from minorclt.lab import hs_reconstruct, linear_stat, spectra

sp = SamplePair.from_matrix(sample_matrix(get_ensemble("complex-gaussian"), 32, 32, 9))
for label in ("bump", "expm"):
    af = AlmostAnalytic(get_function(label), 1.0)
    exact = linear_stat(af.base, spectra(sp))
    print(f"{label}: eigenvalue path {exact:.10f}")
    for eta0 in (4e-3, 2e-3, 1e-3, 5e-4):
        r = hs_reconstruct(af, sp, eta0)
        print(f"  eta0={eta0:.0e}: {r.value:.10f}  error {abs(r.value - exact):.1e}  "
              f"quadrature estimate {r.quadrature_error:.0e}")
