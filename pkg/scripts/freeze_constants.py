"""Compute reference constants with mpmath and freeze them to tests/frozen_constants.json.

Everything here works directly in the spectral variable x with tanh-sinh
quadrature at 30 digits, independent of the angle substitution, the DST and
the closed-form Stieltjes transforms used by the package. Run from the repo
root:

    python scripts/freeze_constants.py
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30

PHIS = ["1", "4", "0.25"]
SIGMAS = ["0.3", "0.8"]
POINTS = [(2, 1), (0.5, 0.1), (5, 0.01), (-1, 2)]


def bump_parts():
    c, r = mp.mpf(2), mp.mpf("1.5")

    def f(x):
        t = (x - c) / r
        return mp.e * mp.exp(-1 / (1 - t**2)) if abs(t) < 1 else mp.mpf(0)

    def df(x):
        t = (x - c) / r
        if abs(t) >= 1:
            return mp.mpf(0)
        return f(x) * (-2 * t / (1 - t**2) ** 2) / r

    return f, df


FUNCTIONS = {
    "one": (lambda x: mp.mpf(1), lambda x: mp.mpf(0)),
    "id": (lambda x: x, lambda x: mp.mpf(1)),
    "sq": (lambda x: x**2, lambda x: 2 * x),
    "expm": (lambda x: mp.exp(-x), lambda x: -mp.exp(-x)),
    "bump": bump_parts(),
    "cos": (mp.cos, lambda x: -mp.sin(x)),
}


def geometry(phi):
    sp = mp.sqrt(phi)
    c = sp + 1 / sp
    lo = mp.mpf(0) if phi == 1 else c - 2
    return sp, c, lo, c + 2


def knots(lo, hi, extra=()):
    pts = sorted({lo, hi, *[p for p in extra if lo < p < hi]})
    return pts


def omega(fname, phi):
    f, _ = FUNCTIONS[fname]
    sp, c, lo, hi = geometry(phi)
    d = sp - 1 / sp
    pts = knots(lo, hi, (mp.mpf("0.5"), mp.mpf("3.5")))
    if phi == 1:
        val = mp.quad(lambda x: f(x) / mp.sqrt(x * (4 - x)), pts) / (2 * mp.pi) + f(mp.mpf(0)) / 2
    else:
        val = mp.quad(lambda x: f(x) * (1 + d / x) / mp.sqrt((x - lo) * (hi - x)), pts) / (2 * mp.pi)
        if phi < 1:
            val += f(mp.mpf(0))
    return val


def semicircle_moments(fname, phi):
    _, df = FUNCTIONS[fname]
    _, c, lo, hi = geometry(phi)
    lo, hi = c - 2, c + 2
    pts = knots(lo, hi, (mp.mpf("0.5"), mp.mpf("3.5")))
    dens = lambda x: mp.sqrt(4 - (x - c) ** 2) / (2 * mp.pi)
    a1 = mp.quad(lambda x: df(x) * dens(x), pts)
    v1 = mp.quad(lambda x: (df(x) - a1) ** 2 * dens(x), pts)
    return v1, a1**2


def coefficients(fname, phi, mmax):
    """I_m = (1/pi) Im int f'(x) w(x)^m dx with the boundary value of w."""
    _, df = FUNCTIONS[fname]
    _, c, _, _ = geometry(phi)
    lo, hi = c - 2, c + 2
    pts = knots(lo, hi, (mp.mpf("0.5"), mp.mpf("3.5")))

    def w(x):
        return (-(x - c) + 1j * mp.sqrt(4 - (x - c) ** 2)) / 2

    return [mp.quad(lambda x: df(x) * mp.im(w(x) ** m), pts) / mp.pi for m in range(mmax + 1)]


def v_sigma2(coef, s):
    s2 = mp.mpf(s) ** 2
    return sum(s2 ** (k + 1) * coef[k + 2] ** 2 for k in range(len(coef) - 2))


def mp_stieltjes(z, phi):
    """int rho(x)/(x - z) dx (+ atom) by direct quadrature."""
    sp, c, lo, hi = geometry(phi)
    if phi == 1:
        val = mp.quad(lambda x: mp.sqrt((4 - x) / x) / (2 * mp.pi) / (x - z), [0, 2, 4])
    else:
        val = mp.quad(lambda x: sp / (2 * mp.pi * x) * mp.sqrt((x - lo) * (hi - x)) / (x - z),
                      [lo, (lo + hi) / 2, hi])
        if phi < 1:
            val += (1 - phi) / (0 - z)
    return val


def mp_w(z, phi):
    _, c, _, _ = geometry(phi)
    return mp.quad(lambda x: mp.sqrt(4 - (x - c) ** 2) / (2 * mp.pi) / (x - z), [c - 2, c, c + 2])


def cplx(v):
    return [float(mp.re(v)), float(mp.im(v))]


def main():
    out = {"omega": {}, "v_f1": {}, "v_f2": {}, "v_sigma2": {}, "stieltjes": {}, "w": {},
           "two_resolvent": {}}
    for p in PHIS:
        phi = mp.mpf(p)
        for name in FUNCTIONS:
            key = f"{name}@{p}"
            out["omega"][key] = float(omega(name, phi))
            v1, v2 = semicircle_moments(name, phi)
            out["v_f1"][key] = float(v1)
            out["v_f2"][key] = float(v2)
            mmax = 4 if name in ("one", "id", "sq") else 48
            coef = coefficients(name, phi, mmax)
            for s in SIGMAS:
                out["v_sigma2"][f"{key}@{s}"] = float(v_sigma2(coef, s))
            print("done", key, flush=True)
        for x, y in POINTS:
            z = mp.mpc(x, y)
            out["stieltjes"][f"{x}+{y}i@{p}"] = cplx(mp_stieltjes(z, phi))
            out["w"][f"{x}+{y}i@{p}"] = cplx(mp_w(z, phi))
    # two-resolvent limits at z = 2 + i, z' = 3 + 1.5i, phi = 1
    z, zp, phi = mp.mpc(2, 1), mp.mpc(3, 1.5), mp.mpf(1)
    m, mprime = mp_stieltjes(z, phi), mp_stieltjes(zp, phi)
    prod = z * zp * m * mprime * m * mprime  # m_{1/phi} = m_phi at phi = 1
    num = z * zp * m * mprime * m**2 * mprime**2
    for s in ("0", "0.6", "1"):
        s2 = mp.mpf(s) ** 2
        out["two_resolvent"][s] = {"tracial": cplx(num / (1 - prod)),
                                   "non_tracial": cplx(s2 * num / (1 - s2 * prod))}
    path = Path(__file__).resolve().parent.parent / "tests" / "frozen_constants.json"
    path.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    print("wrote", path)


if __name__ == "__main__":
    main()
