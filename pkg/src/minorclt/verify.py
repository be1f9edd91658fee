"""Sampling-free analytic checks of the spectral and predictor layers."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from . import predictor
from .functions import builtin_library, get_function
from .spectral import (certificate_grid, certificate_scan, edges, self_consistency_residual,
                       stieltjes_m, stieltjes_m_swap, w_semicircle)

RESIDUAL_TOL = 1e-12
MASS_TOL = 1e-8
OMEGA_ONE_TOL = 1e-8
OMEGA_ID_TOL = 1e-6
VARIANCE_ID_TOL = 1e-8
SERIES_TOL = 1e-6
GRIDS = {"standard": (101, 31), "fine": (201, 61)}


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool


@dataclass
class VerifyReport:
    grid: str
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"grid": self.grid, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["grid"], [CheckResult(**c) for c in d["checks"]])


def _check(out, name, value, tol):
    value = float(value)
    out.append(CheckResult(name, value, tol, bool(np.isfinite(value) and value < tol)))


def mp_mass(phi):
    """(int rho, int x rho) of the continuous part by adaptive quadrature with
    algebraic endpoint weights, independent of the angle substitution."""
    e = edges(phi)
    a, b = e.gamma_minus, e.gamma_plus
    sp = np.sqrt(phi)
    if a == 0.0:
        # rho = sqrt(phi)/(2 pi) x^{-1/2} (b - x)^{1/2}
        wvar = (-0.5, 0.5)
        g0 = lambda x: sp / (2 * np.pi)
        g1 = lambda x: sp / (2 * np.pi) * x
    else:
        wvar = (0.5, 0.5)
        g0 = lambda x: sp / (2 * np.pi * x)
        g1 = lambda x: sp / (2 * np.pi)
    opts = dict(weight="alg", wvar=wvar, epsabs=1e-14, epsrel=1e-14, limit=200)
    return integrate.quad(g0, a, b, **opts)[0], integrate.quad(g1, a, b, **opts)[0]


def run_verify(grid="standard", w_func=w_semicircle, phis=(1.0, 4.0)) -> VerifyReport:
    """Run every analytic check.

    ``w_func`` replaces the shifted-semicircle transform; a wrong one must
    make the suite fail.
    """
    if grid not in GRIDS:
        raise ValueError(f"grid must be one of {sorted(GRIDS)}")
    nx, neta = GRIDS[grid]
    out: list[CheckResult] = []
    for phi in phis:
        Z = certificate_grid(phi, nx=nx, neta=neta)
        _check(out, f"self-consistency phi={phi:g}", np.max(self_consistency_residual(Z, phi)), RESIDUAL_TOL)
        w = w_func(Z, phi)
        ident = np.max(np.abs(w + Z * stieltjes_m(Z, phi) * stieltjes_m_swap(Z, phi)))
        _check(out, f"w = -z m m~ phi={phi:g}", ident, RESIDUAL_TOL)
        e = edges(phi)
        xs = np.linspace(e.gamma_minus, e.gamma_plus, 2 * nx + 1)[1:-1]
        _check(out, f"|w| = 1 on support phi={phi:g}",
               np.max(np.abs(np.abs(w_func(xs + 0j, phi)) - 1.0)), RESIDUAL_TOL)
        scan = certificate_scan(phi, Z)
        _check(out, f"stability certificates phi={phi:g}", 0.0 if scan.all_passed else 1.0, 0.5)
        if phi >= 1:
            mass, first = mp_mass(phi)
            _check(out, f"mass phi={phi:g}", abs(mass - 1.0), MASS_TOL)
            _check(out, f"first moment phi={phi:g}", abs(first / np.sqrt(phi) - 1.0), MASS_TOL)

    one, ident_f, sq = get_function("one"), get_function("id"), get_function("sq")
    integral, atom, _ = predictor.omega_parts(one, 1.0)
    _check(out, "Omega(1) = 1/2 + 1/2 at phi=1", abs(integral - 0.5) + abs(atom - 0.5), OMEGA_ONE_TOL)
    for phi in (*phis, 0.25):
        _check(out, f"Omega(1) = 1 phi={phi:g}", abs(predictor.omega(one, phi) - 1.0), OMEGA_ONE_TOL)
    for phi in phis:
        _check(out, f"Omega(x) = sqrt(phi) phi={phi:g}",
               abs(predictor.omega(ident_f, phi) - np.sqrt(phi)), OMEGA_ID_TOL)
        v1 = predictor.v_f1(ident_f, phi)
        v2 = predictor.v_f2(ident_f, phi)
        vs = max(predictor.v_sigma2(ident_f, phi, s) for s in (0.5, 1.0))
        _check(out, f"(V1, V2, Vs)(x) = (0, 1, 0) phi={phi:g}",
               abs(v1) + abs(v2 - 1.0) + abs(vs), VARIANCE_ID_TOL)
        # shift invariance of the variances and exact scaling
        for f in builtin_library():
            base = predictor.v_f1(f, phi), predictor.v_f2(f, phi)
            sh = predictor.v_f1(f.shifted(1.5), phi), predictor.v_f2(f.shifted(1.5), phi)
            sc = predictor.v_f1(f.scaled(-2.5), phi), predictor.v_f2(f.scaled(-2.5), phi)
            dev = max(abs(sh[i] - base[i]) + abs(sc[i] - 6.25 * base[i]) for i in range(2))
            _check(out, f"shift/scale variances {f.label} phi={phi:g}", dev, 1e-10 * max(1.0, *base))
        bump = get_function("bump")
        for s in (0.3, 0.8):
            dev = abs(predictor.v_sigma2(bump, phi, s) - predictor.v_sigma2_double(bump, phi, s, n=nx * 4))
            _check(out, f"V_sigma2 series = double integral bump s={s} phi={phi:g}", dev, SERIES_TOL)
    _check(out, "Omega(x^2) = 3 at phi=1", abs(predictor.omega(sq, 1.0) - 3.0), OMEGA_ID_TOL)
    return VerifyReport(grid, out)
