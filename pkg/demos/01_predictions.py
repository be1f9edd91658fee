"""Deterministic limit and fluctuation variance for every built-in function."""
from minorclt import builtin_ensembles, builtin_library, predict

for phi in (1.0, 4.0, 0.25):
    print(f"\nphi = {phi}")
    print(f"{'function':>10} {'ensemble':>18} {'omega':>10} {'V_f':>10}")
    for f in builtin_library():
        for ens in builtin_ensembles():
            r = predict(f, phi, ens)
            flag = "  (no fluctuations)" if r.zero_variance else ""
            print(f"{f.label:>10} {ens.label:>18} {r.omega:10.5f} {r.v_f:10.5f}{flag}")
