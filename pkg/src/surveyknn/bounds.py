"""Closed-form constants and rate curves for the estimator's error bounds.

``rate_bound`` gives the mean-squared-error envelope of the design-weighted
k-NN estimator: 1/k + k/n in one dimension and 1/k + (k/n)^(2/d) above,
either as a bare shape or with explicit constants.  ``kn_schedule`` is the
neighbor-count schedule that balances the two terms, and ``design_gap_bound``
bounds the squared gap between the sample estimator and its hypothetical
full-response counterpart in terms of design dependence measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TheoryParams:
    """Constants entering the explicit error bounds.

    dim: covariate dimension.
    min_inclusion: lower bound on first-order inclusion probabilities.
    y_bound: bound on |y|.
    lipschitz: Lipschitz constant of the regression function.
    resid_var: bound on the conditional residual variance.
    density_const: neighborhood sampling-fraction balance constant.
    schedule_const: tuning constant of the neighbor schedule.
    """

    dim: int = 1
    min_inclusion: float = 1.0
    y_bound: float = 1.0
    lipschitz: float = 1.0
    resid_var: float = 1.0
    density_const: float = 1.0
    schedule_const: float = 1.0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not 0 < self.min_inclusion <= 1:
            raise ValueError("min_inclusion must lie in (0, 1]")
        for name in ("y_bound", "lipschitz", "resid_var", "density_const", "schedule_const"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in d dimensions, via exact half-integer factorials."""
    if d < 1 or int(d) != d:
        raise ValueError(f"dimension must be an integer >= 1, got {d}")
    d = int(d)
    if d % 2 == 0:
        half = d // 2
        return math.pi**half / math.factorial(half)
    # Gamma(d/2 + 1) = Gamma(m + 1/2) = (2m)! sqrt(pi) / (4^m m!) with m = (d+1)/2
    m = (d + 1) // 2
    return math.pi ** ((d - 1) / 2) * 4**m * math.factorial(m) / math.factorial(2 * m)


def knn_bias_constant(d: int) -> float:
    """The dimension constant multiplying the bias term of the d >= 2 bound."""
    if d < 2:
        raise ValueError("the bias constant is defined for d >= 2; d = 1 uses 8 L^2 C")
    return 2 ** (3 + 2 / d) * (1 + math.sqrt(d)) ** 2 / unit_ball_volume(d) ** (2 / d)


def rate_bound(
    d: int, kn: int, n: int, params: TheoryParams | None = None, mode: str = "shape"
) -> float:
    """MSE envelope at neighbor count kn and sample size n.

    mode="shape" drops all constants: 1/kn + kn/n (d = 1) or
    1/kn + (kn/n)^(2/d).  mode="constants" uses the explicit constants
    from ``params``.
    """
    if not 1 <= kn <= n:
        raise ValueError(f"need 1 <= kn <= n, got kn={kn}, n={n}")
    if mode == "shape":
        if d == 1:
            return 1 / kn + kn / n
        return 1 / kn + (kn / n) ** (2 / d)
    if mode == "constants":
        if params is None:
            raise ValueError("mode='constants' needs TheoryParams")
        variance = params.resid_var / kn
        if d == 1:
            return variance + 8 * params.lipschitz**2 * params.density_const * kn / n
        bias = (
            knn_bias_constant(d)
            * params.lipschitz**2
            * (params.density_const * kn / n) ** (2 / d)
        )
        return variance + bias
    raise ValueError(f"unknown mode {mode!r}")


def kn_schedule(d: int, n: int, schedule_const: float = 1.0) -> int:
    """Neighbor count balancing variance and bias: floor(n^(1/2)) for d = 1,
    floor(c^(d/(d+2)) n^(2/(d+2))) above, clamped to [1, n]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if d == 1:
        k = math.isqrt(n)
    else:
        if schedule_const <= 0:
            raise ValueError("schedule_const must be positive")
        value = schedule_const ** (d / (d + 2)) * n ** (2 / (d + 2))
        # Absorb float rounding so exact powers (e.g. 4096^(1/6)) floor cleanly.
        k = math.floor(value + 1e-9)
    return max(1, min(k, n))


def ht_error_constants(min_inclusion: float) -> tuple[float, float, float]:
    """Bounds on the inverse-inclusion weight moments, given the inclusion floor.

    Returns (linear, quadratic, pair): bounds on |1/pi - 1|, on
    |(1/pi)(1/pi - 2)|, and on the pair-term multiplier 2/pi + 1/pi^2.
    """
    if not 0 < min_inclusion <= 1:
        raise ValueError("min_inclusion must lie in (0, 1]")
    lam = min_inclusion
    linear = 1 / lam - 1
    quadratic = max((1 / lam) * (1 / lam - 2), 1.0)
    pair = 2 / lam + 1 / lam**2
    return linear, quadratic, pair


def design_gap_bound(
    params: TheoryParams,
    kn: int,
    n: int,
    N: int,
    dependence_measure: float,
    expected_max_abs_rij: float,
) -> float:
    """Bound on the design-expected squared gap between the sample estimator
    and the hypothetical full-response estimator.

    Vanishes under a census (inclusion floor 1, zero dependence measures).
    """
    if kn < 1 or not 1 <= kn <= n:
        raise ValueError(f"need 1 <= kn <= n, got kn={kn}, n={n}")
    if min(N, dependence_measure, expected_max_abs_rij) < 0:
        raise ValueError("inputs must be nonnegative")
    linear, quadratic, pair = ht_error_constants(params.min_inclusion)
    per_unit = (linear + quadratic * expected_max_abs_rij) / kn
    pair_term = (N / kn) * (dependence_measure + pair * expected_max_abs_rij)
    return 4 * params.y_bound**2 * (per_unit + pair_term)
