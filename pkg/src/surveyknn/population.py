"""Finite populations and the superpopulation model that generates them.

Populations are immutable after construction and can safely be shared
read-only across parallel replicates.  A population built for size N
carries the first N records of the largest population generated from the
same (spec, sizes, seed) triple, bit for bit, so a ladder of sizes forms
a nested (embedded) sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# The default simulated regression curve uses the literal constant 3.14
# rather than pi; "2x+sin-pi" is the exact-pi variant.
_SINE_CONSTANT = 3.14

REGRESSION_FAMILIES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "2x+sin": lambda t: 2.0 * t + np.sin(2.0 * _SINE_CONSTANT * t),
    "2x+sin-pi": lambda t: 2.0 * t + np.sin(2.0 * np.pi * t),
    "constant": lambda t: np.ones_like(t),
}


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Population:
    """A finite population of (x, y, optional size variable z) records.

    Parameters
    ----------
    x : array of shape (N, d)
        Covariates; a 1-D array is treated as a single covariate column.
    y : array of shape (N,)
        Responses.
    z : array of shape (N,), optional
        Strictly positive size variable driving pps designs.

    Unit ids are the row indices 0..N-1 and are stable under `prefix`.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray | None = None

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise ValueError("x must be a vector or an (N, d) matrix")
        y = np.asarray(self.y, dtype=float)
        if y.shape != (x.shape[0],):
            raise ValueError(f"y must have {x.shape[0]} rows, got shape {y.shape}")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("population needs N >= 1 and d >= 1")
        object.__setattr__(self, "x", _freeze(x))
        object.__setattr__(self, "y", _freeze(y))
        if self.z is not None:
            z = np.asarray(self.z, dtype=float)
            if z.shape != (x.shape[0],):
                raise ValueError("z must have one value per unit")
            if not (z > 0).all():
                raise ValueError("size variable z must be strictly positive")
            object.__setattr__(self, "z", _freeze(z))

    @property
    def size(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.size)

    def prefix(self, size: int) -> "Population":
        """The embedded population holding the first ``size`` records."""
        if not 1 <= size <= self.size:
            raise ValueError(f"prefix size must be in [1, {self.size}], got {size}")
        z = self.z[:size] if self.z is not None else None
        return Population(self.x[:size], self.y[:size], z)


@dataclass(frozen=True)
class SuperpopSpec:
    """Superpopulation model: covariate law, regression curve, and noise level."""

    regression: str = "2x+sin"
    noise_sd: float = 0.5
    covariate_law: str = "uniform"
    d: int = 1

    def __post_init__(self) -> None:
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        if self.d < 1:
            raise ValueError("dimension d must be >= 1")
        if self.regression not in REGRESSION_FAMILIES:
            known = ", ".join(sorted(REGRESSION_FAMILIES))
            raise ValueError(f"unknown regression family {self.regression!r}; known: {known}")
        if self.covariate_law != "uniform":
            raise ValueError(f"unsupported covariate law {self.covariate_law!r}")


def standardize_covariates(pop: Population) -> Population:
    """A copy of the population with z-scored covariate columns.

    Distances are taken on raw covariates by default; this is the opt-in
    scaling for data whose covariate units differ wildly.
    """
    std = pop.x.std(axis=0)
    if not (std > 0).all():
        raise ValueError("cannot standardize a constant covariate column")
    return Population(x=(pop.x - pop.x.mean(axis=0)) / std, y=pop.y, z=pop.z)


def true_regression(spec: SuperpopSpec, x) -> float:
    """Evaluate the model regression curve at a covariate vector.

    The built-in families are curves in the first covariate coordinate;
    extra coordinates are ignored.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (spec.d,):
        raise ValueError(f"x must have dimension {spec.d}, got shape {x.shape}")
    curve = REGRESSION_FAMILIES[spec.regression]
    return float(curve(x[:1])[0])


def generate_embedded_populations(
    spec: SuperpopSpec,
    sizes: list[int] | tuple[int, ...],
    seed: int | np.random.SeedSequence,
) -> list[Population]:
    """Generate one population per size as nested prefixes of the largest.

    Generation is a pure function of (spec, max(sizes), seed): a PCG64
    generator seeded from ``seed`` draws all covariates first (row-major,
    so each unit's d values are contiguous), then all noise values.  The
    size variable z is the first covariate coordinate, which is what pps
    designs use as sampling size.

    Raises
    ------
    ValueError
        If ``sizes`` is not strictly increasing or has entries < 1.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("sizes must be a nonempty list of integers >= 1")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly increasing, got {sizes}")

    n_max = sizes[-1]
    rng = np.random.default_rng(seed)
    x = rng.random((n_max, spec.d))
    noise = rng.standard_normal(n_max) * spec.noise_sd
    curve = REGRESSION_FAMILIES[spec.regression]
    y = curve(x[:, 0]) + noise
    z = x[:, 0].copy()
    return [Population(x[:s], y[:s], z[:s]) for s in sizes]
