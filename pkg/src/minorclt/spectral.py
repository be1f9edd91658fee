"""Marchenko-Pastur law, its Stieltjes transforms and the shifted semicircle.

All spectral quantities are for the N x N matrix X*X with X of size M x N
and entry variance (MN)^{-1/2}, so the aspect ratio ``phi = M / N`` enters
only through the edges ``sqrt(phi) + 1/sqrt(phi) -+ 2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

DEFAULT_D_STAR = 0.05
# ratios on the boundary |phi - 1| = d_star (up to rounding) are rejected
BOUNDARY_MARGIN = 1e-12


class DomainError(ValueError):
    """Argument outside the domain of a spectral function."""


class UnsupportedRegime(DomainError):
    """Aspect ratio close to, but not equal to, one.

    The CLT for the minor difference is only available for phi == 1 or
    |phi - 1| > d_star.
    """


class Regime(str, enum.Enum):
    SQUARE = "square"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class Ratio:
    """Aspect ratio ``phi = M/N`` together with its regime."""

    phi: float
    d_star: float = DEFAULT_D_STAR
    regime: Regime = field(init=False)

    def __post_init__(self):
        phi = float(self.phi)
        if not np.isfinite(phi) or phi <= 0:
            raise DomainError(f"phi must be positive, got {self.phi!r}")
        if self.d_star <= 0:
            raise DomainError("d_star must be positive")
        object.__setattr__(self, "phi", phi)
        if phi == 1.0:
            regime = Regime.SQUARE
        elif abs(phi - 1.0) - self.d_star > BOUNDARY_MARGIN:
            regime = Regime.RECTANGULAR
        else:
            raise UnsupportedRegime(
                f"phi={phi} is within d_star={self.d_star} of 1 but not equal to 1; "
                "the CLT hypothesis requires either phi = 1 or |phi - 1| > d_star"
            )
        object.__setattr__(self, "regime", regime)

    @property
    def inverse(self) -> "Ratio":
        return Ratio(1.0 / self.phi, self.d_star)

    @property
    def edges(self) -> "EdgePair":
        return edges(self.phi)


def as_phi(phi) -> float:
    """Accept a ``Ratio`` or a bare positive number."""
    if isinstance(phi, Ratio):
        return phi.phi
    phi = float(phi)
    if not np.isfinite(phi) or phi <= 0:
        raise DomainError(f"phi must be positive, got {phi!r}")
    return phi


@dataclass(frozen=True)
class EdgePair:
    gamma_minus: float
    gamma_plus: float

    @property
    def center(self) -> float:
        return 0.5 * (self.gamma_minus + self.gamma_plus)

    def kappa(self, x):
        """Distance of ``x`` to the closest spectral edge."""
        x = np.asarray(x, dtype=float)
        return np.minimum(np.abs(self.gamma_plus - x), np.abs(self.gamma_minus - x))


def edges(phi) -> EdgePair:
    phi = as_phi(phi)
    s = np.sqrt(phi)
    c = s + 1.0 / s
    lo = c - 2.0
    if phi == 1.0:
        lo = 0.0
    return EdgePair(max(lo, 0.0), c + 2.0)


@dataclass(frozen=True)
class SpectralPoint:
    z: complex
    kappa_x: float

    @classmethod
    def at(cls, z, phi) -> "SpectralPoint":
        z = complex(z)
        if z.imag == 0:
            raise DomainError("spectral points need Im z != 0")
        return cls(z, float(edges(phi).kappa(z.real)))


def mp_density(x, phi):
    """Absolutely continuous part of the Marchenko-Pastur law.

    The atom ``(1 - phi)_+`` at zero (present for phi < 1) is not included.
    For phi == 1 the density has a non-integrable-looking but integrable
    ``x^{-1/2}`` singularity; exactly at ``x = 0`` we return ``+inf``.
    """
    phi = as_phi(phi)
    e = edges(phi)
    x = np.asarray(x, dtype=float)
    bracket = np.clip((x - e.gamma_minus) * (e.gamma_plus - x), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sqrt(phi) / (2 * np.pi) * np.sqrt(bracket) / np.abs(x)
    out = np.where(bracket > 0, out, 0.0)
    if phi == 1.0:
        out = np.where(x == 0.0, np.inf, out)
    return out[()] if out.ndim == 0 else out


def _edge_sqrt(z, lo, hi):
    """sqrt((z - lo)(z - hi)) with the cut on [lo, hi] and ~ z at infinity."""
    return np.sqrt(z - lo) * np.sqrt(z - hi)


def _upper(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag == 0):
        raise DomainError("Stieltjes transform needs Im z != 0; use the boundary density")
    flip = z.imag < 0
    return np.where(flip, np.conj(z), z), flip


def _finish(val, flip):
    val = np.where(flip, np.conj(val), val)
    return val[()] if val.ndim == 0 else val


def stieltjes_m(z, phi):
    """Stieltjes transform of the Marchenko-Pastur law (atom included).

    Evaluated from the closed radical formula; the root with positive
    imaginary part is selected, with the conjugate root as fallback when
    rounding pushes the primary branch into the wrong half plane.
    """
    phi = as_phi(phi)
    if phi < 1:
        # keep the atom explicit: m_phi = phi m_{1/phi} - (1 - phi)/z
        z = np.asarray(z, dtype=complex)
        out = phi * stieltjes_m(z, 1.0 / phi) - (1.0 - phi) / z
        return out[()] if np.ndim(out) == 0 else out
    zu, flip = _upper(z)
    e = edges(phi)
    sp = np.sqrt(phi)
    d = sp - 1.0 / sp
    zt = zu / sp
    s = _edge_sqrt(zu, e.gamma_minus, e.gamma_plus)
    # other root (-(z - d) - s)/(2 zt) has no cancellation; m = 1/(zt * other)
    other = (-(zu - d) - s) / (2.0 * zt)
    m = 1.0 / (zt * other)
    bad = m.imag <= 0
    if np.any(bad):
        m = np.where(bad, other, m)
    return _finish(m, flip)


def stieltjes_m_swap(z, phi):
    """Stieltjes transform of the law with ratio 1/phi, derived from ``m_phi``."""
    phi = as_phi(phi)
    z = np.asarray(z, dtype=complex)
    m = stieltjes_m(z, phi)
    out = (m + (1.0 - phi) / z) / phi
    return out[()] if np.ndim(out) == 0 else out


def stieltjes_m_prime(z, phi):
    """Derivative of ``m_phi`` from differentiating the self-consistent equation."""
    phi = as_phi(phi)
    z = np.asarray(z, dtype=complex)
    m = stieltjes_m(z, phi)
    sp = np.sqrt(phi)
    out = (m**2 + m**3 / sp) / (1.0 - z / sp * m**2)
    return out[()] if np.ndim(out) == 0 else out


def self_consistency_residual(z, phi, m=None):
    """``|m + 1/(z + z phi^{-1/2} m - (phi^{1/2} - phi^{-1/2}))|``."""
    phi = as_phi(phi)
    z = np.asarray(z, dtype=complex)
    if m is None:
        m = stieltjes_m(z, phi)
    sp = np.sqrt(phi)
    return np.abs(m + 1.0 / (z + z * m / sp - (sp - 1.0 / sp)))


def w_semicircle(z, phi):
    """Stieltjes transform of the semicircle law centred at phi^{1/2} + phi^{-1/2}.

    Accepts ``Im z >= 0``. On the real axis the boundary value from the upper
    half plane is returned; it has modulus one on the support and is real
    with modulus below one outside of it.
    """
    phi = as_phi(phi)
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0):
        raise DomainError("w_semicircle is defined for Im z >= 0")
    # +0.0 imaginary part keeps sqrt on the upper side of the cut
    z = z.real + 1j * np.where(z.imag == 0, 0.0, z.imag)
    e = edges(phi)
    c = e.center
    s = _edge_sqrt(z, e.gamma_minus, e.gamma_plus)
    # the root with |w| >= 1 is free of cancellation; w is its reciprocal
    w = 2.0 / (-(z - c) - s)
    return w[()] if w.ndim == 0 else w


def w_residual(z, phi, w=None):
    """Residual of ``w + 1/(z - phi^{1/2} - phi^{-1/2} + w) = 0``."""
    phi = as_phi(phi)
    z = np.asarray(z, dtype=complex)
    if w is None:
        w = w_semicircle(z, phi)
    return np.abs(w + 1.0 / (z - edges(phi).center + w))


def w_identity_residual(z, phi, w=None):
    """``|w_phi(z) + z m_phi(z) m_{1/phi}(z)|``."""
    z = np.asarray(z, dtype=complex)
    if w is None:
        w = w_semicircle(z, phi)
    return np.abs(w + z * stieltjes_m(z, phi) * stieltjes_m_swap(z, phi))


# Stability bounds on m_phi. The constants are existential; the defaults are
# the empirical extremes on the standard grid for 1 <= phi <= 16, padded.
# For phi > 1 the lower bound and the lower comparability constant shrink
# like |z| near z = 0, so they are grid dependent there.
CERT_LOWER = 1e-4
CERT_DERIV_UPPER = 2.0
CERT_WINDOW = (0.01, 4.0)


@dataclass
class Certificate:
    z: complex
    phi: float
    kappa_x: float
    modulus: float  # |z phi^{-1/2} m^2|
    derivative: float  # |m'| |z| sqrt(kappa + eta) / sqrt(phi)
    comparability: float  # |1 - z phi^{-1/2} m^2| |z|^{1/2} / (phi^{1/4} sqrt(kappa + eta))
    modulus_ok: bool
    derivative_ok: bool
    comparability_ok: bool

    @property
    def passed(self) -> bool:
        return self.modulus_ok and self.derivative_ok and self.comparability_ok


def resolvent_bound_certificates(z, phi, lower=CERT_LOWER, deriv_upper=CERT_DERIV_UPPER,
                                 window=CERT_WINDOW) -> Certificate:
    """Evaluate the three stability ratios for ``m_phi`` at one point.

    Defined for phi >= 1 and ``|z - sqrt(phi)| <= 10`` with Im z > 0.
    The modulus check asks for ``lower <= |z m^2|/sqrt(phi) < 1``; the strict
    ``1 - c eta`` margin is a statement about a whole grid and is fitted by
    :func:`certificate_scan`.
    """
    phi = as_phi(phi)
    z = complex(z)
    if phi < 1:
        raise DomainError("stability bounds are stated for phi >= 1; use 1/phi")
    if z.imag <= 0:
        raise DomainError("need Im z > 0")
    if abs(z - np.sqrt(phi)) > 10:
        raise DomainError("need |z - sqrt(phi)| <= 10")
    r = _cert_ratios(np.array([z]), phi)
    mod, der, comp, kap = (float(a[0]) for a in r)
    return Certificate(
        z, phi, kap, mod, der, comp,
        modulus_ok=lower <= mod < 1.0,
        derivative_ok=der <= deriv_upper,
        comparability_ok=window[0] <= comp <= window[1],
    )


def _cert_ratios(z, phi):
    sp = np.sqrt(phi)
    eta = z.imag
    kap = edges(phi).kappa(z.real)
    m = stieltjes_m(z, phi)
    mp = stieltjes_m_prime(z, phi)
    q = z / sp * m**2
    root = np.sqrt(kap + eta)
    mod = np.abs(q)
    der = np.abs(mp) * np.abs(z) * root / sp
    comp = np.abs(1.0 - q) * np.sqrt(np.abs(z)) / (phi**0.25 * root)
    return mod, der, comp, kap


def certificate_grid(phi, nx=101, neta=31, eta_range=(1e-3, 10.0)):
    """Standard grid: linear x over [gamma_- - 3, gamma_+ + 3], log-spaced eta,
    restricted to the disc ``|z - sqrt(phi)| <= 10``."""
    phi = as_phi(phi)
    e = edges(phi)
    x = np.linspace(e.gamma_minus - 3, e.gamma_plus + 3, nx)
    eta = np.geomspace(*eta_range, neta)
    Z = (x[None, :] + 1j * eta[:, None]).ravel()
    return Z[np.abs(Z - np.sqrt(phi)) <= 10]


@dataclass
class CertificateScan:
    phi: float
    npoints: int
    c_lower: float  # min |z m^2|/sqrt(phi)
    c_tilde: float  # min (1 - |z m^2|/sqrt(phi)) / eta
    c_hat: float  # max derivative ratio
    r_lower: float
    r_upper: float
    all_passed: bool


def certificate_scan(phi, z=None, **cert_kw) -> CertificateScan:
    """Fit the empirical constants of the stability bounds over a grid."""
    phi = as_phi(phi)
    if z is None:
        z = certificate_grid(phi)
    z = np.asarray(z, dtype=complex)
    mod, der, comp, _ = _cert_ratios(z, phi)
    lower = cert_kw.get("lower", CERT_LOWER)
    upper = cert_kw.get("deriv_upper", CERT_DERIV_UPPER)
    lo, hi = cert_kw.get("window", CERT_WINDOW)
    c_tilde = float(np.min((1.0 - mod) / z.imag))
    ok = (
        np.all(mod >= lower) and c_tilde > 0 and np.all(der <= upper)
        and np.all(comp >= lo) and np.all(comp <= hi)
    )
    return CertificateScan(phi, z.size, float(mod.min()), c_tilde, float(der.max()),
                           float(comp.min()), float(comp.max()), bool(ok))


def denominator_margin(z, phi):
    """``(1 - |w_phi(z)|^2) / (2 eta)``: the two-resolvent denominator at
    ``z' = conj(z)`` divided by ``eta + eta'``."""
    z = np.asarray(z, dtype=complex)
    w = w_semicircle(z, phi)
    return (1.0 - np.abs(w) ** 2) / (2 * z.imag)
