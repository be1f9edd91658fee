import numpy as np
import pytest

from minorclt.functions import (AlmostAnalytic, builtin_library, get_function, plateau_cutoff,
                                smoothstep)

LABELS = [f.label for f in builtin_library()]
X = np.linspace(-2.0, 9.0, 301)


@pytest.mark.parametrize("label", LABELS)
def test_derivatives_match_finite_differences(label):
    f = get_function(label)
    h = 1e-5
    fd1 = (f.eval(X + h) - f.eval(X - h)) / (2 * h)
    fd2 = (f.deriv(X + h) - f.deriv(X - h)) / (2 * h)
    np.testing.assert_allclose(np.broadcast_to(f.deriv(X), X.shape), fd1, atol=1e-7)
    np.testing.assert_allclose(np.broadcast_to(f.deriv2(X), X.shape), fd2, atol=1e-6)


@pytest.mark.parametrize("label", LABELS)
def test_polynomial_coefficients_agree(label):
    f = get_function(label)
    if f.polynomial is None:
        pytest.skip("not a polynomial")
    np.testing.assert_allclose(np.polynomial.polynomial.polyval(X, f.polynomial),
                               np.broadcast_to(f.eval(X), X.shape))


def test_unknown_function():
    with pytest.raises(KeyError):
        get_function("nope")


def test_bump_support():
    b = get_function("bump")
    assert b.eval(2.0) == pytest.approx(1.0)
    assert b.eval(0.5) == 0.0 and b.eval(3.5) == 0.0
    assert b.deriv(2.0) == pytest.approx(0.0)


def test_scaled_and_shifted():
    sq = get_function("sq")
    assert sq.scaled(-2.5).eval(3.0) == pytest.approx(-22.5)
    assert sq.scaled(-2.5).polynomial == (-0.0, -0.0, -2.5)
    s = sq.shifted(1.5)
    assert s.eval(2.0) == pytest.approx(5.5)
    assert s.deriv(2.0) == pytest.approx(4.0)
    assert s.polynomial == (1.5, 0.0, 1.0)


class TestCutoffs:
    def test_smoothstep_limits(self):
        S, S1, S2 = smoothstep(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
        np.testing.assert_allclose(S, [0, 0, 0.5, 1, 1])
        assert S1[0] == S1[-1] == 0.0

    def test_smoothstep_derivatives(self):
        t = np.linspace(0.05, 0.95, 50)
        h = 1e-6
        S, S1, S2 = smoothstep(t)
        np.testing.assert_allclose(S1, (smoothstep(t + h)[0] - smoothstep(t - h)[0]) / (2 * h),
                                   rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(S2, (smoothstep(t + h)[1] - smoothstep(t - h)[1]) / (2 * h),
                                   rtol=1e-5, atol=1e-6)

    def test_plateau(self):
        x = np.array([-5.0, -3.0, -1.0, 0.0, 1.0, 3.0, 5.0])
        v, _, _ = plateau_cutoff(x, (-1, 1), (-3, 3))
        np.testing.assert_allclose(v, [0, 0, 1, 1, 1, 0, 0])


class TestAlmostAnalytic:
    @pytest.mark.parametrize("label", ["bump", "sq", "expm"])
    def test_dbar_matches_finite_differences(self, label):
        af = AlmostAnalytic(get_function(label), 1.0)
        rng = np.random.default_rng(0)
        z = rng.uniform(-3, 7, 40) + 1j * rng.uniform(0.01, 9.9, 40)
        h = 1e-6
        dx = (af.fC(z + h) - af.fC(z - h)) / (2 * h)
        dy = (af.fC(z + 1j * h) - af.fC(z - 1j * h)) / (2 * h)
        np.testing.assert_allclose(af.dbar(z), 0.5 * (dx + 1j * dy), atol=1e-6)

    def test_dbar_vanishes_to_first_order(self):
        af = AlmostAnalytic(get_function("bump"), 1.0)
        x = np.linspace(0.6, 3.4, 50)
        for eta in (1e-2, 1e-3):
            assert np.max(np.abs(af.dbar(x + 1j * eta))) < 20 * eta

    def test_restricts_to_f_on_real_axis(self):
        af = AlmostAnalytic(get_function("cos"), 4.0)
        x = np.linspace(0.0, 5.0, 30)
        np.testing.assert_allclose(af.fC(x + 0j), np.cos(x))

    def test_vanishes_outside(self):
        af = AlmostAnalytic(get_function("sq"), 1.0)
        a, b = af.x_support
        assert af.fC(a - 0.1 + 1j) == 0
        assert af.fC(1.0 + 10.5j) == 0
        assert af.dbar(2.0 + 10j) == 0
