"""Test functions with closed-form derivatives, smooth cutoffs and the
almost-analytic extension used for contour representations of Tr f."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import edges


@dataclass(frozen=True)
class TestFunction:
    """A twice differentiable real function given with its derivatives."""

    __test__ = False  # not a pytest class

    eval: Callable
    deriv: Callable
    deriv2: Callable
    label: str
    support_hint: tuple = (-np.inf, np.inf)
    # power-series coefficients (c0, c1, ...) when f is a polynomial
    polynomial: tuple | None = None

    def __call__(self, x):
        return self.eval(x)

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction(
            lambda x: c * self.eval(x),
            lambda x: c * self.deriv(x),
            lambda x: c * self.deriv2(x),
            f"{c}*{self.label}",
            self.support_hint,
            None if self.polynomial is None else tuple(c * a for a in self.polynomial),
        )

    def shifted(self, c: float) -> "TestFunction":
        """``f + c``."""
        return TestFunction(
            lambda x: self.eval(x) + c, self.deriv, self.deriv2,
            f"{self.label}+{c}", self.support_hint,
            None if self.polynomial is None
            else (self.polynomial[0] + c, *self.polynomial[1:]),
        )


def _const(v):
    return lambda x: np.full(np.shape(x), v, dtype=float)[()]


def _bump(center=2.0, radius=1.5):
    # exp(1 - 1/(1 - t^2)), t = (x - center)/radius; value 1 at the centre
    def parts(x):
        x = np.asarray(x, dtype=float)
        t = (x - center) / radius
        inside = np.abs(t) < 1
        ts = np.where(inside, t, 0.0)
        u = 1.0 - ts**2
        g = np.where(inside, np.exp(1.0 - 1.0 / u), 0.0)
        return t, inside, u, g

    def f(x):
        g = parts(x)[3]
        return g[()]

    def df(x):
        t, inside, u, g = parts(x)
        # d/dt exp(1 - 1/u) = g * (-2t/u^2)
        gp = np.where(inside, g * (-2 * t / u**2), 0.0)
        return (gp / radius)[()]

    def d2f(x):
        t, inside, u, g = parts(x)
        a = -2 * t / u**2
        da = np.where(inside, -2 / u**2 - 8 * t**2 / u**3, 0.0)
        gpp = np.where(inside, g * (a**2 + da), 0.0)
        return (gpp / radius**2)[()]

    return f, df, d2f


def builtin_library() -> list[TestFunction]:
    bump = _bump()
    return [
        TestFunction(_const(1.0), _const(0.0), _const(0.0), "one", polynomial=(1.0,)),
        TestFunction(lambda x: np.asarray(x, float)[()], _const(1.0), _const(0.0), "id",
                     polynomial=(0.0, 1.0)),
        TestFunction(lambda x: np.square(x), lambda x: 2 * np.asarray(x, float)[()], _const(2.0), "sq",
                     polynomial=(0.0, 0.0, 1.0)),
        TestFunction(lambda x: np.exp(-np.asarray(x, float)), lambda x: -np.exp(-np.asarray(x, float)),
                     lambda x: np.exp(-np.asarray(x, float)), "expm"),
        TestFunction(*bump, "bump", (0.5, 3.5)),
        TestFunction(np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), "cos"),
    ]


def get_function(label: str) -> TestFunction:
    for f in builtin_library():
        if f.label == label:
            return f
    known = ", ".join(f.label for f in builtin_library())
    raise KeyError(f"unknown test function {label!r}; known: {known}")


# -- smooth cutoffs ---------------------------------------------------------

def _h(t):
    """exp(-1/t) for t > 0 and its first two derivatives, zero otherwise."""
    t = np.asarray(t, dtype=float)
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    h = np.where(pos, np.exp(-1.0 / ts), 0.0)
    h1 = np.where(pos, h / ts**2, 0.0)
    h2 = np.where(pos, h * (1 - 2 * ts) / ts**4, 0.0)
    return h, h1, h2


def smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1; returns (S, S', S'')."""
    t = np.asarray(t, dtype=float)
    u, p, P = _h(t)
    v, q, Q = _h(1.0 - t)
    D = u + v
    D1 = p - q
    D2 = P + Q
    S = u / D
    S1 = (p * D - u * D1) / D**2
    S2 = (P * D - u * D2) / D**2 - 2 * D1 * (p * D - u * D1) / D**3
    return S, S1, S2


def plateau_cutoff(x, inner, outer):
    """Smooth cutoff equal to 1 on ``inner`` and 0 outside ``outer``.

    Returns the value and the first two derivatives.
    """
    (a, b), (A, B) = inner, outer
    x = np.asarray(x, dtype=float)
    L, L1, L2 = smoothstep((x - A) / (a - A))
    R, R1, R2 = smoothstep((B - x) / (B - b))
    la, lb = 1.0 / (a - A), -1.0 / (B - b)
    L1, L2 = L1 * la, L2 * la**2
    R1, R2 = R1 * lb, R2 * lb**2
    return L * R, L1 * R + L * R1, L2 * R + 2 * L1 * R1 + L * R2


@dataclass(frozen=True)
class AlmostAnalytic:
    """Almost-analytic extension ``(f_chi(x) + i eta f_chi'(x)) chi_tilde(eta)``.

    ``chi`` is 1 on [gamma_- - 1, gamma_+ + 1] and 0 outside
    [gamma_- - 3, gamma_+ + 3]; ``chi_tilde`` is 1 on [-5, 5] and 0 outside
    [-10, 10].
    """

    base: TestFunction
    phi: float

    @property
    def x_support(self):
        e = edges(self.phi)
        return e.gamma_minus - 3.0, e.gamma_plus + 3.0

    def chi(self, x):
        e = edges(self.phi)
        return plateau_cutoff(x, (e.gamma_minus - 1, e.gamma_plus + 1),
                              (e.gamma_minus - 3, e.gamma_plus + 3))

    @staticmethod
    def chi_tilde(eta):
        eta = np.asarray(eta, dtype=float)
        S, S1, S2 = smoothstep((10.0 - np.abs(eta)) / 5.0)
        sgn = np.sign(eta)
        return S, -S1 / 5.0 * sgn, S2 / 25.0

    def f_chi(self, x):
        """``f chi`` and its first two derivatives."""
        x = np.asarray(x, dtype=float)
        c, c1, c2 = self.chi(x)
        f, f1, f2 = self.base.eval(x), self.base.deriv(x), self.base.deriv2(x)
        f, f1, f2 = (np.broadcast_to(v, x.shape) for v in (f, f1, f2))
        # outside the cutoff support keep exact zeros even if f overflows there
        return (np.where(c != 0, f * c, 0.0),
                np.where((c != 0) | (c1 != 0), f1 * c + f * c1, 0.0),
                np.where((c != 0) | (c1 != 0) | (c2 != 0), f2 * c + 2 * f1 * c1 + f * c2, 0.0))

    def fC(self, z):
        z = np.asarray(z, dtype=complex)
        x, eta = z.real, z.imag
        g, g1, _ = self.f_chi(x)
        t = self.chi_tilde(eta)[0]
        return (g + 1j * eta * g1) * t

    def dbar(self, z):
        """Closed-form ``d/dz-bar f_C = (1/2)(d_x + i d_eta) f_C``."""
        z = np.asarray(z, dtype=complex)
        x, eta = z.real, z.imag
        g, g1, g2 = self.f_chi(x)
        t, t1, _ = self.chi_tilde(eta)
        return 0.5 * (1j * eta * g2 * t + 1j * (g + 1j * eta * g1) * t1)


def dbar_fC(af: AlmostAnalytic, z):
    return af.dbar(z)
