import numpy as np
import pytest

from minorclt.ensembles import (EnsembleSpec, builtin_ensembles, elliptic_gaussian, get_ensemble,
                                sample_matrix, trial_rng)
from minorclt.spectral import UnsupportedRegime

ALL = builtin_ensembles() + [elliptic_gaussian(0.5)]


def _within(sample, target, k=5.0):
    se = np.std(sample) / np.sqrt(sample.size)
    return abs(np.mean(sample) - target) <= max(k * se, 1e-12)


@pytest.mark.parametrize("ens", ALL, ids=lambda e: e.label)
def test_moment_metadata(ens):
    """10^6 draws: normalised first, second, pseudo and fourth moments within 5 SE."""
    M = N = 1000
    X = sample_matrix(ens, M, N, (2024, 7))
    assert X.shape == (M, N)
    e = X.ravel()
    scale = np.sqrt(M * N)
    assert _within(e.real * M ** 0.5, 0.0) and _within(e.imag * M ** 0.5, 0.0)
    assert _within(scale * np.abs(e) ** 2, 1.0)
    assert _within((scale * e * e).real, complex(ens.sigma2).real)
    assert _within((scale * e * e).imag, complex(ens.sigma2).imag)
    assert _within(M * N * np.abs(e) ** 4, ens.sigma4)


def test_bernoulli_modulus_exact():
    X = sample_matrix(get_ensemble("complex-bernoulli"), 8, 4, 3)
    np.testing.assert_allclose(np.abs(X), (8 * 4) ** -0.25, rtol=1e-15)


def test_rademacher_values():
    X = sample_matrix(get_ensemble("real-rademacher"), 6, 6, 3)
    np.testing.assert_allclose(np.abs(X), 6 ** -0.5)
    assert X.dtype == float


def test_builtin_metadata():
    meta = {e.label: (complex(e.sigma2), e.sigma4, e.field) for e in builtin_ensembles()}
    assert meta["real-gaussian"] == (1, 3, "real")
    assert meta["complex-gaussian"] == (0, 2, "complex")
    assert meta["complex-bernoulli"] == (0, 1, "complex")
    assert meta["real-rademacher"] == (1, 1, "real")
    assert meta["real-uniform"] == (1, pytest.approx(9 / 5), "real")


def test_registration_checks():
    with pytest.raises(ValueError):
        EnsembleSpec("bad", "complex", 1.2, 3.0, None)
    with pytest.raises(ValueError):
        EnsembleSpec("bad", "complex", 0.0, 0.5, None)
    with pytest.raises(ValueError):
        EnsembleSpec("bad", "real", 0.5, 2.0, None)


def test_parametric_family():
    e = get_ensemble("elliptic-gaussian:0.25")
    assert e.sigma2 == 0.25 and e.sigma4 == pytest.approx(2.0625)
    assert get_ensemble("elliptic-gaussian", 1.0).sigma4 == 3.0
    with pytest.raises(KeyError):
        get_ensemble("elliptic-gaussian")
    with pytest.raises(KeyError):
        get_ensemble("unknown")
    with pytest.raises(ValueError):
        elliptic_gaussian(1.5)


def test_reproducible():
    ens = get_ensemble("complex-gaussian")
    a = sample_matrix(ens, 16, 16, (5, 16, 3))
    b = sample_matrix(ens, 16, 16, (5, 16, 3))
    assert a.tobytes() == b.tobytes()
    c = sample_matrix(ens, 16, 16, (5, 16, 4))
    assert not np.array_equal(a, c)


def test_substreams_independent_of_order():
    first = [trial_rng(1, k).random() for k in range(5)]
    second = [trial_rng(1, k).random() for k in reversed(range(5))][::-1]
    assert first == second


def test_large_draw_mean():
    X = sample_matrix(get_ensemble("real-uniform"), 512, 512, 11)
    se = X.std() / np.sqrt(X.size)
    assert abs(X.mean()) <= 5 * se


@pytest.mark.parametrize("M,N", [(1, 4), (4, 1)])
def test_dimensions(M, N):
    with pytest.raises(ValueError):
        sample_matrix(get_ensemble("real-gaussian"), M, N, 0)


def test_regime():
    with pytest.raises(UnsupportedRegime):
        sample_matrix(get_ensemble("real-gaussian"), 102, 100, 0)
    sample_matrix(get_ensemble("real-gaussian"), 102, 100, 0, d_star=0.01)
