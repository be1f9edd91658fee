"""I.i.d. entry distributions normalised to E|X|^2 = (MN)^{-1/2}.

Each ensemble declares its normalised moments analytically:
``sigma2 = sqrt(MN) E X^2`` and ``sigma4 = MN E|X|^4``. Samplers draw
unit-variance entries; the ``(MN)^{-1/4}`` scale is applied by
:func:`sample_matrix`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import Ratio


@dataclass(frozen=True)
class EnsembleSpec:
    label: str
    field: str  # "real" or "complex"
    sigma2: complex
    sigma4: float
    sampler: Callable  # (rng, shape) -> unit-variance entries

    def __post_init__(self):
        s2 = complex(self.sigma2)
        if self.field not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        if abs(s2) > 1 + 1e-12:
            raise ValueError(f"{self.label}: |sigma2| = {abs(s2)} > 1")
        if self.sigma4 < max(1.0, abs(s2) ** 2) - 1e-12:
            raise ValueError(f"{self.label}: sigma4 = {self.sigma4} < max(1, |sigma2|^2)")
        if self.field == "real" and abs(s2 - 1) > 1e-12:
            raise ValueError(f"{self.label}: real entries force sigma2 = 1")

    def draw(self, rng, shape):
        return self.sampler(rng, shape)


def _real_gaussian(rng, shape):
    return rng.standard_normal(shape)


def _complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _phase(rng, shape):
    return np.exp(2j * np.pi * rng.random(shape))


def _rademacher(rng, shape):
    return rng.choice(np.array([-1.0, 1.0]), size=shape)


def _uniform(rng, shape):
    return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=shape)


def elliptic_gaussian(s: float, label=None) -> EnsembleSpec:
    """Complex Gaussian with Re/Im variances (1 + s)/2 and (1 - s)/2.

    Then ``sigma2 = s`` and ``sigma4 = 2 + s^2``; s = 0 is the complex
    Gaussian and s = 1 is the real Gaussian.
    """
    if not 0 <= s <= 1:
        raise ValueError("elliptic parameter must lie in [0, 1]")
    a, b = np.sqrt((1 + s) / 2), np.sqrt((1 - s) / 2)

    def sampler(rng, shape):
        return a * rng.standard_normal(shape) + 1j * b * rng.standard_normal(shape)

    return EnsembleSpec(label or f"elliptic-gaussian-{s:g}", "complex", complex(s), 2.0 + s * s, sampler)


def builtin_ensembles() -> list[EnsembleSpec]:
    return [
        EnsembleSpec("real-gaussian", "real", 1.0, 3.0, _real_gaussian),
        EnsembleSpec("complex-gaussian", "complex", 0.0, 2.0, _complex_gaussian),
        EnsembleSpec("complex-bernoulli", "complex", 0.0, 1.0, _phase),
        EnsembleSpec("real-rademacher", "real", 1.0, 1.0, _rademacher),
        EnsembleSpec("real-uniform", "real", 1.0, 9.0 / 5.0, _uniform),
    ]


FAMILIES = {
    "real-gaussian": lambda: builtin_ensembles()[0],
    "complex-gaussian": lambda: builtin_ensembles()[1],
    "complex-bernoulli": lambda: builtin_ensembles()[2],
    "real-rademacher": lambda: builtin_ensembles()[3],
    "real-uniform": lambda: builtin_ensembles()[4],
}


def get_ensemble(label: str, param: float | None = None) -> EnsembleSpec:
    """Look up a built-in ensemble, or build a parametric family member.

    ``elliptic-gaussian`` takes the pseudo-variance ``sigma2`` in [0, 1] as
    ``param``; it is also accepted in the inline form ``elliptic-gaussian:0.5``.
    """
    if ":" in label:
        label, raw = label.split(":", 1)
        param = float(raw)
    if label == "elliptic-gaussian":
        if param is None:
            raise KeyError("elliptic-gaussian needs a parameter")
        return elliptic_gaussian(float(param))
    if label in FAMILIES:
        if param is not None:
            raise KeyError(f"ensemble {label!r} takes no parameter")
        return FAMILIES[label]()
    known = ", ".join([*FAMILIES, "elliptic-gaussian:<s>"])
    raise KeyError(f"unknown ensemble {label!r}; known: {known}")


def trial_rng(master_seed: int, *stream) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``(master_seed, *stream)``.

    Streams for different trial indices are independent and do not depend
    on the order in which trials are executed.
    """
    ss = np.random.SeedSequence([int(master_seed), *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


def sample_matrix(spec: EnsembleSpec, M: int, N: int, seed, d_star=None) -> np.ndarray:
    """Draw an M x N matrix with i.i.d. entries of variance (MN)^{-1/2}.

    ``seed`` is an int, a tuple ``(master_seed, *stream)`` or a Generator.
    """
    if M < 2 or N < 2:
        raise ValueError("need M, N >= 2")
    if d_star is None:
        Ratio(M / N)
    else:
        Ratio(M / N, d_star)
    if isinstance(seed, np.random.Generator):
        rng = seed
    elif isinstance(seed, tuple):
        rng = trial_rng(*seed)
    else:
        rng = trial_rng(seed)
    X = spec.draw(rng, (M, N)) * (M * N) ** -0.25
    return np.ascontiguousarray(X)
