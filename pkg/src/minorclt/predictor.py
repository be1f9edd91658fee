"""Deterministic limits for the minor difference ``f_N = Tr f(W~) - Tr f(W)``.

Every integral lives on the support [gamma_-, gamma_+] of the
Marchenko-Pastur law and is evaluated after the substitution
``x = c + 2 cos(theta)`` with ``c = sqrt(phi) + 1/sqrt(phi)``. In that
variable the arcsine weight of the mean becomes ``d theta`` and the
semicircle weight of the variances becomes ``(2/pi) sin^2 theta d theta``,
so a midpoint (Gauss-Chebyshev) rule converges spectrally for smooth f.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dst
from scipy.special import roots_legendre

from .functions import TestFunction
from .spectral import DomainError, Ratio, Regime, as_phi, edges, w_semicircle

QUAD_TOL = 1e-12
MAX_NODES = 1 << 17
SERIES_TOL = 1e-14
SERIES_CAP = 10_000


class QuadratureError(RuntimeError):
    pass


def _ratio(phi) -> Ratio:
    return phi if isinstance(phi, Ratio) else Ratio(phi)


def _theta_nodes(n):
    k = np.arange(1, n + 1)
    return (2 * k - 1) * np.pi / (2 * n)


def _midpoint(g, n0=64, tol=QUAD_TOL):
    """Integrate ``g(theta)`` over [0, pi] by doubling a midpoint rule.

    ``g`` maps the nodes, shape (n,), to values of shape (..., n); several
    integrands can be stacked. Returns (value, error estimate).
    """
    n = n0
    prev = None
    while n <= MAX_NODES:
        th = _theta_nodes(n)
        val = np.pi / n * np.sum(g(th), axis=-1)
        if prev is not None:
            err = np.max(np.abs(val - prev))
            scale = max(1.0, float(np.max(np.abs(val))))
            if err <= tol * scale:
                return val, float(err)
        prev = val
        n *= 2
    raise QuadratureError(f"midpoint rule did not converge with {MAX_NODES} nodes")


def _x_of_theta(phi, th):
    return edges(phi).center + 2.0 * np.cos(th)


def omega_parts(f: TestFunction, phi):
    """Split ``Omega_f`` into the integral over the support and the point mass at 0.

    For phi == 1 the hard edge contributes ``f(0)/2``. For phi < 1 the
    matrix ``W~`` has exactly one more zero eigenvalue than its minor, which
    contributes ``f(0)``. Returns (integral, atom, quadrature error).
    """
    r = _ratio(phi)
    p = r.phi
    if r.regime is Regime.SQUARE:
        val, err = _midpoint(lambda th: f.eval(_x_of_theta(p, th)))
        atom = 0.5 * float(f.eval(0.0))
    else:
        d = np.sqrt(p) - 1.0 / np.sqrt(p)

        def g(th):
            x = _x_of_theta(p, th)
            return f.eval(x) * (1.0 + d / x)

        val, err = _midpoint(g)
        atom = float(f.eval(0.0)) if p < 1 else 0.0
    return float(val) / (2 * np.pi), atom, err / (2 * np.pi)


def omega(f: TestFunction, phi, with_error=False):
    """Limit of ``f_N``: see :func:`omega_parts`."""
    integral, atom, err = omega_parts(f, phi)
    val = integral + atom
    return (val, err) if with_error else val


def _weighted_moments(f, p):
    """(int f' dmu, int (f' - mean)^2 dmu) for the semicircle weight ``mu``."""

    def g(th):
        x = _x_of_theta(p, th)
        fp = np.broadcast_to(f.deriv(x), th.shape)
        return np.stack([fp * np.sin(th) ** 2, fp**2 * np.sin(th) ** 2]) * (2 / np.pi)

    (a1, _), err1 = _midpoint(g)
    # second pass with the mean removed avoids cancellation in V_{f,1}
    def h(th):
        x = _x_of_theta(p, th)
        fp = np.broadcast_to(f.deriv(x), th.shape)
        return (fp - a1) ** 2 * np.sin(th) ** 2 * (2 / np.pi)

    v1, err2 = _midpoint(h)
    return float(a1), float(v1), err1, err2


def v_f1(f: TestFunction, phi, with_error=False):
    p = _ratio(phi).phi
    _, v1, _, err = _weighted_moments(f, p)
    return (v1, err) if with_error else v1


def v_f2(f: TestFunction, phi, with_error=False):
    p = _ratio(phi).phi
    a1, _, err, _ = _weighted_moments(f, p)
    v2 = a1 * a1
    return (v2, 2 * abs(a1) * err) if with_error else v2


def chebyshev_coefficients(f: TestFunction, phi, mmax, n=None):
    """``I_m = (1/pi) Im int f'(x) w_phi(x)^m dx`` for m = 0..mmax.

    With ``w = -exp(-i theta)`` on the support these are, up to sign, the
    sine coefficients of ``f'(c + 2cos theta) sin theta``, and
    ``sum_{m>=1} I_m^2 = int f'^2 dmu``. Computed with a type-II DST on
    midpoint nodes.
    """
    p = as_phi(phi)
    if n is None:
        n = max(512, 4 * (mmax + 1))
    th = _theta_nodes(n)
    x = _x_of_theta(p, th)
    g = np.broadcast_to(f.deriv(x), th.shape) * 2 * np.sin(th)
    # dst-II: y[j] = 2 sum_k g_k sin((j + 1) theta_k)
    y = dst(g, type=2)[: mmax] / (2 * n)
    m = np.arange(1, mmax + 1)
    out = np.zeros(mmax + 1)
    out[1:] = -((-1.0) ** m) * y
    return out


def v_sigma2(f: TestFunction, phi, sigma2, with_error=False):
    """Pseudo-covariance contribution ``V_{sigma_2}``.

    For ``|sigma2| = 1`` this is ``V_{f,1}`` by definition. For
    ``|sigma2| < 1`` it is ``sum_{k>=0} |sigma2|^{2k+2} I_{k+2}^2``, the
    geometric series of the double integral in :func:`v_sigma2_double`.
    Summation stops once ``|sigma2|^{2k+2}`` times the remaining mass
    ``int f'^2 dmu - sum_{m<=k+2} I_m^2`` is below 1e-14.
    """
    s = abs(complex(sigma2))
    if s > 1 + 1e-12:
        raise DomainError(f"|sigma2| = {s} > 1 is impossible for a normalised entry")
    p = _ratio(phi).phi
    if s >= 1.0 - 1e-15:
        return v_f1(f, p, with_error)
    if s == 0:
        return (0.0, 0.0) if with_error else 0.0
    a1, v1, _, _ = _weighted_moments(f, p)
    total_mass = v1 + a1 * a1
    floor = 1e-15 * max(total_mass, 1.0)
    s2 = s * s
    mmax = 128
    while True:
        coef = chebyshev_coefficients(f, p, mmax)
        partial = float(coef[1] ** 2)
        acc = 0.0
        for k in range(0, mmax - 1):
            weight = s2 ** (k + 1)
            acc += weight * coef[k + 2] ** 2
            partial += coef[k + 2] ** 2
            tail = max(total_mass - partial, 0.0)
            if weight * tail < SERIES_TOL or tail < floor:
                return (acc, weight * tail) if with_error else acc
        if mmax >= SERIES_CAP:
            raise QuadratureError("V_sigma2 series did not converge within the term cap")
        mmax = min(4 * mmax, SERIES_CAP)


def v_sigma2_double(f: TestFunction, phi, sigma2, n=400):
    """Double-integral form of ``V_{sigma_2}`` (independent cross-check).

    ``(1/2pi^2) Re iint f'(x) f'(y) [s^2 w(x)^2 conj(w(y))^2 / (1 - s^2 w(x) conj(w(y)))
    - s^2 w(x)^2 w(y)^2 / (1 - s^2 w(x) w(y))] dx dy`` with ``s = |sigma2|``,
    evaluated by tensor Gauss-Legendre in the angle, with ``w`` taken from the
    boundary values of the semicircle transform.
    """
    s2 = abs(complex(sigma2)) ** 2
    if s2 >= 1:
        raise DomainError("double-integral form needs |sigma2| < 1")
    p = as_phi(phi)
    e = edges(p)
    t, wt = roots_legendre(n)
    th = 0.5 * np.pi * (t + 1)
    wt = 0.5 * np.pi * wt
    x = e.center + 2 * np.cos(th)
    jac = 2 * np.sin(th) * wt
    w = w_semicircle(x + 0j, p)
    g = np.broadcast_to(f.deriv(x), x.shape) * jac
    W = w[:, None]
    Wb = np.conj(w)[None, :]
    Wp = w[None, :]
    K = s2 * W**2 * Wb**2 / (1 - s2 * W * Wb) - s2 * W**2 * Wp**2 / (1 - s2 * W * Wp)
    return float(np.real(g @ K @ g) / (2 * np.pi**2))


@dataclass
class PredictionReport:
    function: str
    phi: float
    regime: str
    ensemble: str
    sigma2: complex
    sigma4: float
    omega: float
    v_f1: float
    v_f2: float
    v_sigma2: float
    v_f: float
    zero_variance: bool
    quadrature_error_estimates: dict = field(default_factory=dict)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["sigma2"] = [self.sigma2.real, self.sigma2.imag]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["sigma2"] = complex(*d["sigma2"])
        return cls(**d)


ZERO_VARIANCE_TOL = 1e-10


def predict(f: TestFunction, phi, ensemble) -> PredictionReport:
    """Assemble ``V_f = V_{f,1} + (sigma4 - 1) V_{f,2} + |sigma2|^2 V_{sigma2}``."""
    r = _ratio(phi)
    om, e_om = omega(f, r, with_error=True)
    v1, e1 = v_f1(f, r, with_error=True)
    v2, e2 = v_f2(f, r, with_error=True)
    sigma2 = complex(ensemble.sigma2)
    vs, es = v_sigma2(f, r, sigma2, with_error=True)
    vf = v1 + (ensemble.sigma4 - 1.0) * v2 + abs(sigma2) ** 2 * vs
    return PredictionReport(
        function=f.label, phi=r.phi, regime=r.regime.value, ensemble=ensemble.label,
        sigma2=sigma2, sigma4=float(ensemble.sigma4),
        omega=om, v_f1=v1, v_f2=v2, v_sigma2=vs, v_f=vf,
        zero_variance=bool(vf <= ZERO_VARIANCE_TOL),
        quadrature_error_estimates={"omega": e_om, "v_f1": e1, "v_f2": e2, "v_sigma2": es},
    )
