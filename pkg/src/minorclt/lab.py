"""Per-sample computations for one draw of X~ and its minor X.

``W~ = X~* X~`` is N x N, ``W = X* X`` is (N-1) x (N-1) where X drops the
first column ``x`` of X~. Resolvents: ``R~ = (W~ - z)^{-1}``,
``R = (W - z)^{-1}``, ``G~ = (X~ X~* - z)^{-1}``, ``G = (X X* - z)^{-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.special import roots_legendre

from .functions import AlmostAnalytic, TestFunction
from .spectral import as_phi, edges, stieltjes_m, stieltjes_m_swap

INTERLACING_TOL = 1e-10


class TrialFailure(RuntimeError):
    """A numerical step failed on this draw; the harness records and skips it."""


@dataclass(frozen=True)
class SamplePair:
    Xtilde: np.ndarray
    X: np.ndarray
    x: np.ndarray

    @classmethod
    def from_matrix(cls, Xtilde) -> "SamplePair":
        Xtilde = np.asarray(Xtilde)
        if Xtilde.ndim != 2 or Xtilde.shape[1] < 1:
            raise ValueError("need a 2-d matrix with at least one column")
        return cls(Xtilde, Xtilde[:, 1:], Xtilde[:, 0].copy())

    @property
    def M(self):
        return self.Xtilde.shape[0]

    @property
    def N(self):
        return self.Xtilde.shape[1]

    @property
    def phi(self):
        return self.M / self.N

    @property
    def scale(self):
        """Tolerance scale: the upper spectral edge."""
        return edges(self.phi).gamma_plus


@dataclass(frozen=True)
class SpectrumPair:
    lam_tilde: np.ndarray
    lam: np.ndarray

    def interlacing_violation(self) -> float:
        """Largest violation of ``lam~[k] <= lam[k] <= lam~[k+1]`` (0 if none)."""
        if self.lam.size == 0:
            return 0.0
        lo = self.lam_tilde[:-1] - self.lam
        hi = self.lam - self.lam_tilde[1:]
        return float(max(lo.max(), hi.max(), 0.0))


def _gram(A):
    return A.conj().T @ A


def spectra(sp: SamplePair) -> SpectrumPair:
    try:
        lt = sla.eigvalsh(_gram(sp.Xtilde)) if sp.N > 0 else np.zeros(0)
        lm = sla.eigvalsh(_gram(sp.X)) if sp.N > 1 else np.zeros(0)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise TrialFailure(f"eigensolver failed: {exc}") from exc
    return SpectrumPair(np.sort(lt), np.sort(lm))


def linear_stat(f: TestFunction, s: SpectrumPair) -> float:
    a = np.broadcast_to(f.eval(s.lam_tilde), s.lam_tilde.shape)
    b = np.broadcast_to(f.eval(s.lam), s.lam.shape)
    return float(np.sum(a) - np.sum(b))


def polynomial_stat(coeffs, sp: SamplePair) -> float:
    """``Tr p(W~) - Tr p(W)`` for a polynomial without any eigensolve.

    Since W is the trailing principal block of W~, only the first row
    ``v = X~* x`` of W~ enters up to degree two:
    ``Tr W~ - Tr W = |x|^2`` and ``Tr W~^2 - Tr W^2 = 2|v|^2 - |v_0|^2``.
    Higher degrees fall back to matrix powers.
    """
    coeffs = tuple(coeffs)
    out = coeffs[0] if coeffs else 0.0
    if len(coeffs) > 1:
        out += coeffs[1] * float(np.vdot(sp.x, sp.x).real)
    if len(coeffs) > 2:
        v = sp.Xtilde.conj().T @ sp.x
        out += coeffs[2] * float(2 * np.vdot(v, v).real - abs(v[0]) ** 2)
    if len(coeffs) > 3:
        Wt = _gram(sp.Xtilde)
        W = Wt[1:, 1:]
        Pt, P = Wt @ Wt, W @ W
        for c in coeffs[3:]:
            Pt, P = Pt @ Wt, P @ W
            out += c * float(np.trace(Pt).real - np.trace(P).real)
    return float(out)


# -- resolvent traces --------------------------------------------------------

def _check_upper(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("need Im z > 0")
    return z


def _trace_inverse(A, z):
    """Tr (A - z)^{-1} by an LU factorisation, with one refinement step."""
    n = A.shape[0]
    if n == 0:
        return 0j
    B = A - z * np.eye(n)
    eye = np.eye(n, dtype=complex)
    try:
        lu = sla.lu_factor(B, check_finite=True)
        Y = sla.lu_solve(lu, eye)
        resid = eye - B @ Y
        if np.max(np.abs(resid)) > 1e-10:
            Y = Y + sla.lu_solve(lu, resid)
            if np.max(np.abs(eye - B @ Y)) > 1e-8:
                raise TrialFailure("ill-conditioned resolvent solve")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise TrialFailure(f"resolvent solve failed: {exc}") from exc
    return complex(np.trace(Y))


def delta_N_direct(sp: SamplePair, z):
    """``Tr R~(z) - Tr R(z)`` from two independent linear solves."""
    z = _check_upper(z)
    Wt, W = _gram(sp.Xtilde), _gram(sp.X)
    out = np.array([_trace_inverse(Wt, zz) - _trace_inverse(W, zz) for zz in z.ravel()])
    out = out.reshape(z.shape)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class RankOneProbe:
    """Eigendecomposition of ``X X*`` and the coordinates of ``x`` in its basis.

    ``Delta_N(z) = -<x, G^2 x>/(1 + <x, G x>) - 1/z`` then costs O(M) per point.
    """

    mu: np.ndarray
    U: np.ndarray
    weights: np.ndarray  # |U* x|^2

    @classmethod
    def from_sample(cls, sp: SamplePair) -> "RankOneProbe":
        try:
            mu, U = sla.eigh(sp.X @ sp.X.conj().T)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise TrialFailure(f"eigensolver failed: {exc}") from exc
        y = U.conj().T @ sp.x
        return cls(mu, U, np.abs(y) ** 2)

    def delta(self, z, chunk=4096):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for i in range(0, flat.size, chunk):
            zz = flat[i:i + chunk, None]
            inv = 1.0 / (self.mu[None, :] - zz)
            g1 = inv @ self.weights
            g2 = (inv * inv) @ self.weights
            out[i:i + chunk] = -g2 / (1.0 + g1) - 1.0 / zz[:, 0]
        out = out.reshape(z.shape)
        return out[()] if out.ndim == 0 else out

    def resolvent(self, z):
        """Full ``G(z) = (X X* - z)^{-1}``."""
        return (self.U / (self.mu - z)) @ self.U.conj().T


def delta_N_rank1(sp: SamplePair, z, probe: RankOneProbe | None = None):
    z = _check_upper(z)
    if probe is None:
        probe = RankOneProbe.from_sample(sp)
    return probe.delta(z)


def rank_one_inverse(A, h):
    """``(A + h h*)^{-1}`` from ``A^{-1}`` and the rank-one correction."""
    A = np.asarray(A, dtype=complex)
    h = np.asarray(h, dtype=complex)
    Ainv = np.linalg.inv(A)
    u = Ainv @ h
    v = h.conj() @ Ainv
    return Ainv - np.outer(u, v) / (1.0 + h.conj() @ u)


# -- local law ---------------------------------------------------------------

@dataclass
class LocalLawRecord:
    z: complex
    m_R: complex
    m_G: complex
    averaged_R: float  # |m_R - m_phi| N eta
    averaged_G: float  # |m_G - m_{1/phi}| N eta
    entrywise_R: float  # max |R_ij - delta_ij m_phi| sqrt(N eta |z|)
    entrywise_G: float
    ward_residual: float
    trace_swap_residual: float


def _eig_resolvent(A, z):
    lam, V = sla.eigh(A)
    return (V / (lam - z)) @ V.conj().T


def local_law_residuals(sp: SamplePair, z) -> LocalLawRecord:
    """Averaged and entrywise deviations of the resolvents of the full sample.

    ``m_R = Tr R~ / N`` is compared with ``m_phi`` and ``m_G = Tr G~ / M``
    with ``m_{1/phi}``.
    """
    z = complex(_check_upper(z))
    N, M, eta = sp.N, sp.M, z.imag
    phi = sp.phi
    try:
        R = _eig_resolvent(_gram(sp.Xtilde), z)
        G = _eig_resolvent(sp.Xtilde @ sp.Xtilde.conj().T, z)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise TrialFailure(f"eigensolver failed: {exc}") from exc
    m_R = np.trace(R) / N
    m_G = np.trace(G) / M
    m = stieltjes_m(z, phi)
    mt = stieltjes_m_swap(z, phi)
    entry = np.sqrt(N * eta * abs(z))
    ward = np.sum(np.abs(G) ** 2, axis=1) - np.diag(G).imag / eta
    ward_scale = max(1.0, float(np.max(np.abs(np.diag(G).imag / eta))))
    swap = phi * m_G - m_R - (1.0 - phi) / z
    return LocalLawRecord(
        z=z, m_R=complex(m_R), m_G=complex(m_G),
        averaged_R=float(abs(m_R - m) * N * eta),
        averaged_G=float(abs(m_G - mt) * N * eta),
        entrywise_R=float(np.max(np.abs(R - m * np.eye(N))) * entry),
        entrywise_G=float(np.max(np.abs(G - mt * np.eye(M))) * entry),
        ward_residual=float(np.max(np.abs(ward)) / ward_scale),
        trace_swap_residual=float(abs(swap)),
    )


# -- two-resolvent sums ------------------------------------------------------

def two_resolvent_limits(z, zp, phi, sigma2=1.0):
    """Deterministic limits of the tracial and non-tracial off-diagonal sums."""
    m, mp = stieltjes_m(z, phi), stieltjes_m(zp, phi)
    mt, mtp = stieltjes_m_swap(z, phi), stieltjes_m_swap(zp, phi)
    s2 = abs(complex(sigma2)) ** 2
    prod = z * zp * m * mp * mt * mtp
    num = z * zp * m * mp * mt**2 * mtp**2
    return complex(num / (1 - prod)), complex(s2 * num / (1 - s2 * prod))


@dataclass
class TwoResolventRecord:
    z: complex
    zp: complex
    tracial: complex  # (1/M) sum_{i != j} G_ij G'_ji
    non_tracial: complex  # (1/M) sum_{i != j} G_ij G'_ij
    tracial_limit: complex
    non_tracial_limit: complex

    @property
    def tracial_residual(self):
        return abs(self.tracial - self.tracial_limit)

    @property
    def non_tracial_residual(self):
        return abs(self.non_tracial - self.non_tracial_limit)


def two_resolvent_stats(sp: SamplePair, z, zp, sigma2=1.0, probe=None) -> TwoResolventRecord:
    """Off-diagonal resolvent pair sums of ``X X*`` normalised by ``1/(phi N) = 1/M``."""
    z, zp = complex(_check_upper(z)), complex(_check_upper(zp))
    if probe is None:
        probe = RankOneProbe.from_sample(sp)
    G, Gp = probe.resolvent(z), probe.resolvent(zp)
    dg = np.diag(G) * np.diag(Gp)
    tr = (np.sum(G * Gp.T) - np.sum(dg)) / sp.M
    nt = (np.sum(G * Gp) - np.sum(dg)) / sp.M
    lt, lnt = two_resolvent_limits(z, zp, sp.phi, sigma2)
    return TwoResolventRecord(z, zp, complex(tr), complex(nt), lt, lnt)


# -- Helffer-Sjostrand --------------------------------------------------------

_GL_ORDER = 8
_OFFSETS = 2.0 ** np.arange(-2, 15)


def _gl(order):
    t, w = roots_legendre(order)
    return t, w


def _panels(a, b, knots):
    k = np.unique(np.clip(np.asarray(knots, dtype=float), a, b))
    k = np.union1d(k, [a, b])
    k = k[np.concatenate([[True], np.diff(k) > 1e-14 * max(1.0, abs(b - a))])]
    return k


def _composite(knots, order):
    t, w = _gl(order)
    lo, hi = knots[:-1, None], knots[1:, None]
    half = 0.5 * (hi - lo)
    x = (lo + hi) * 0.5 + half * t[None, :]
    return x.ravel(), (half * w[None, :]).ravel()


@dataclass
class HSResult:
    value: float
    truncation_error: float  # estimated contribution of 0 < eta < eta0
    quadrature_error: float


def hs_reconstruct(af: AlmostAnalytic, sp: SamplePair, eta0, order=_GL_ORDER,
                   probe=None, spectrum=None) -> HSResult:
    """``(2/pi) Re iint d_zbar f_C(x + i eta) Delta_N(x + i eta) dx d eta`` over
    eta in [eta0, 10].

    ``Delta_N`` comes from the rank-one path. The x panels are graded
    geometrically around every eigenvalue at the scale of eta, and eta is
    split into octaves, each with Gauss-Legendre nodes. The quadrature error
    is estimated by repeating with half the order; the truncation error from
    the strip below eta0 is ``eta0 * I(eta0) / 2``, where ``I`` is the inner
    integral, since ``I(eta)`` vanishes linearly as eta -> 0.
    """
    if not 0 < eta0 <= 1e-2:
        raise ValueError("eta0 must lie in (0, 1e-2]")
    if probe is None:
        probe = RankOneProbe.from_sample(sp)
    if spectrum is None:
        spectrum = spectra(sp)
    poles = np.concatenate([spectrum.lam_tilde, spectrum.lam, [0.0]])
    a, b = af.x_support
    e = edges(af.phi)
    # the cutoff transitions are smooth but steep: give them fine uniform panels
    fixed = np.concatenate([
        np.linspace(e.gamma_minus - 3, e.gamma_minus - 1, 33),
        np.linspace(e.gamma_plus + 1, e.gamma_plus + 3, 33),
        [h for h in af.base.support_hint if np.isfinite(h)],
    ])

    def inner(eta, order):
        off = np.concatenate([-_OFFSETS[::-1], [0.0], _OFFSETS]) * eta
        knots = _panels(a, b, np.concatenate([(poles[:, None] + off[None, :]).ravel(), fixed]))
        x, w = _composite(knots, order)
        z = x + 1j * eta
        vals = af.dbar(z) * probe.delta(z)
        return float(2 / np.pi * np.sum(w * vals.real))

    nocts = int(np.ceil(np.log2(10.0 / eta0)))
    eknots = np.union1d(np.minimum(eta0 * 2.0 ** np.arange(nocts + 1), 10.0),
                        np.linspace(1.0, 10.0, 37))
    eknots = eknots[eknots >= eta0]

    def outer(order):
        te, we = _composite(eknots, order)
        return float(sum(wi * inner(ei, order) for ei, wi in zip(te, we)))

    value = outer(order)
    coarse = outer(max(order // 2, 2))
    trunc = 0.5 * eta0 * inner(eta0, order)
    if not np.isfinite(value):
        raise TrialFailure("Helffer-Sjostrand quadrature produced a non-finite value")
    return HSResult(value, abs(trunc), abs(value - coarse))
