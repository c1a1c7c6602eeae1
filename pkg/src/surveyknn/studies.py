"""Monte Carlo study harness.

Four studies, each reproducing one empirical question at a configurable
scale ("paper" presets match the source protocols; "desk" presets finish
in minutes):

* c4: does the sampling fraction inside neighbor balls stay comparable to
  the overall fraction as populations grow?  (pps does not.)
* c9: how far do partition-conditional joint inclusion expectations sit
  from the unconditional ones, for exhaustively enumerable designs?
* consistency: Monte Carlo MSE of the design-weighted k-NN estimator on
  simulated ladders, against the 1/k + k/n rate shape.
* wine: the same MSE ladder on the white-wine data with a full-population
  reference estimator, against the 10-dimensional rate shape.

Replicates are embarrassingly parallel: each draws its RNG stream from
(master seed, study, N, replicate), so results are identical for any
thread count and execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from scipy.spatial.distance import cdist

from ._streams import seed_sequence, stream
from .bounds import rate_bound
from .dataio import WINE_DROPPED, WINE_RESPONSE, WINE_SCHEMA, read_table, read_wine_csv
from .designs import DesignSpec, draw, inclusion_probs
from .diagnostics import c4_ratio_scan, c9_rij_exhaustive
from .errors import CapacityError
from .population import (
    Population,
    SuperpopSpec,
    generate_embedded_populations,
    standardize_covariates,
    true_regression,
)
from .results import StudyResult

STUDIES = ("c4", "c9", "consistency", "wine")
PRESETS = ("paper", "desk")

_LADDER_FULL = (50, 100, 200, 500, 1000, 5000, 10000, 20000, 50000)

_PRESET_FIELDS = {
    ("c4", "paper"): dict(
        sizes=_LADDER_FULL,
        sampling_fraction=0.4,
        replicates=1,
        designs=("pps", "srswor", "stratified"),
    ),
    ("c4", "desk"): dict(
        sizes=_LADDER_FULL[:-1],
        sampling_fraction=0.4,
        replicates=1,
        designs=("pps", "srswor", "stratified"),
    ),
    ("c9", "paper"): dict(
        sizes=(10, 15, 20, 25, 30, 35, 40, 45, 50),
        sampling_fraction=0.4,
        replicates=1,
    ),
    ("c9", "desk"): dict(sizes=(10, 15, 20), sampling_fraction=0.4, replicates=1),
    ("consistency", "paper"): dict(
        sizes=_LADDER_FULL,
        sampling_fraction=0.2,
        replicates=1000,
        adjustment=2.2,
    ),
    ("consistency", "desk"): dict(
        sizes=_LADDER_FULL[:6],
        sampling_fraction=0.2,
        replicates=200,
        adjustment=2.2,
    ),
    ("wine", "paper"): dict(
        sizes=(100, 500, 1000, 2000, 4898),
        sampling_fraction=0.2,
        replicates=1000,
        adjustment=4.5,
        eval_points=100,
    ),
    ("wine", "desk"): dict(
        sizes=(100, 500, 1000, 2000, 4898),
        sampling_fraction=0.2,
        replicates=200,
        adjustment=4.5,
        eval_points=100,
    ),
}


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of one study run; see ``study_config`` for presets."""

    study: str
    sizes: tuple[int, ...]
    sampling_fraction: float
    replicates: int
    seed: int = 0
    preset: str = "desk"
    designs: tuple[str, ...] = ("srswor",)
    noise_sd: float = 0.5
    regression: str = "2x+sin"
    grid_step: float = 0.02
    eval_points: int = 10
    adjustment: float = 1.0
    reference_k: int | None = None
    standardize: bool = False
    kn_rule: str = "sqrt"
    threads: int = 1

    def __post_init__(self) -> None:
        if self.study not in STUDIES:
            raise ValueError(f"unknown study {self.study!r}; known: {STUDIES}")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; known: {PRESETS}")
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("sizes must be integers >= 1")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"sizes must be strictly ascending, got {sizes}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "designs", tuple(self.designs))
        if not 0 < self.sampling_fraction < 1:
            raise ValueError("sampling fraction must lie strictly between 0 and 1")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.kn_rule != "sqrt":
            raise ValueError(f"unknown kn rule {self.kn_rule!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.grid_step <= 0 or self.eval_points < 1:
            raise ValueError("grid_step must be positive and eval_points >= 1")


def study_config(study: str, preset: str = "desk", seed: int = 0, **overrides) -> StudyConfig:
    """The preset configuration for a study, with field overrides applied."""
    key = (study, preset)
    if key not in _PRESET_FIELDS:
        raise ValueError(f"no preset for study={study!r}, preset={preset!r}")
    fields = dict(_PRESET_FIELDS[key])
    fields.update(overrides)
    return StudyConfig(study=study, preset=preset, seed=seed, **fields)


def _kn(n: int) -> int:
    return max(1, math.isqrt(n))


def _unit_grid(step: float) -> np.ndarray:
    count = int(round(1.0 / step)) + 1
    return np.linspace(0.0, 1.0, count)


def allocate_stratified(n: int, fractions: Iterable[float], stratum_sizes: Iterable[int]) -> list[int]:
    """Integer per-stratum sample sizes for fractional allocations.

    Each allocation is rounded to the nearest integer and clamped to
    [1, stratum size]; any residual lands on the largest-allocation
    stratum, spilling to the next largest when capacity binds.
    """
    fractions = list(fractions)
    sizes = list(stratum_sizes)
    take = [min(max(round(f * n), 1), size) for f, size in zip(fractions, sizes)]
    if n > sum(sizes):
        raise ValueError(f"cannot select {n} from {sum(sizes)} units")
    order = sorted(range(len(take)), key=lambda h: -fractions[h])
    residual = n - sum(take)
    while residual != 0:
        moved = False
        for h in order:
            if residual > 0 and take[h] < sizes[h]:
                step = min(residual, sizes[h] - take[h])
                take[h] += step
                residual -= step
                moved = True
            elif residual < 0 and take[h] > 1:
                step = min(-residual, take[h] - 1)
                take[h] -= step
                residual += step
                moved = True
            if residual == 0:
                break
        if not moved:
            raise ValueError("allocation infeasible under [1, stratum size] clamps")
    return take


def quartile_strata(pop: Population, n: int, fractions=(0.1, 0.2, 0.2, 0.5)) -> DesignSpec:
    """Stratified srswor on covariate quartiles with fractional allocations."""
    x0 = pop.x[:, 0]
    cuts = np.quantile(x0, (0.25, 0.5, 0.75))
    labels = np.searchsorted(cuts, x0, side="left")
    units = [np.flatnonzero(labels == h) for h in range(4)]
    if any(len(u) == 0 for u in units):
        raise ValueError("quartile strata require at least 4 distinct covariate values")
    take = allocate_stratified(n, fractions, [len(u) for u in units])
    return DesignSpec.stratified(
        [(tuple(int(i) for i in u), t) for u, t in zip(units, take)]
    )


def design_for(name: str, pop: Population, n: int) -> DesignSpec:
    """The study design named in a config, instantiated for a population."""
    if name == "srswor":
        return DesignSpec.srswor(n)
    if name == "pps":
        return DesignSpec.pps(n)
    if name == "stratified":
        return quartile_strata(pop, n)
    raise ValueError(f"unknown study design {name!r}")


def _ht_estimates(
    xs: np.ndarray, ys: np.ndarray, weights: np.ndarray, grid_pts: np.ndarray, kn: int
) -> np.ndarray:
    """Design-weighted k-NN estimates at many points from one sample.

    ``xs`` rows must be in ascending-unit-id order, so the stable argsort
    breaks distance ties by ascending id, matching the per-point estimator.
    """
    dists = cdist(grid_pts, xs)
    order = np.argsort(dists, axis=1, kind="stable")
    out = np.empty(len(grid_pts))
    for g in range(len(grid_pts)):
        radius = dists[g, order[g, kn - 1]]
        mask = dists[g] <= radius
        w = weights[mask]
        out[g] = np.sum(w * ys[mask]) / np.sum(w)
    return out


def _ladder_n(config: StudyConfig, N: int) -> int:
    if config.study == "wine":
        return max(1, math.floor(config.sampling_fraction * N + 1e-9))
    return max(1, round(config.sampling_fraction * N))


def _populations(config: StudyConfig) -> list[Population]:
    spec = SuperpopSpec(regression=config.regression, noise_sd=config.noise_sd)
    seed = seed_sequence(config.seed, config.study, "population")
    return generate_embedded_populations(spec, config.sizes, seed)


def run_c4_study(config: StudyConfig) -> StudyResult:
    """Max sampling-fraction balance ratio per (population size, design, replicate)."""
    if config.study != "c4":
        raise ValueError("config is not a c4 study")
    pops = _populations(config)
    grid = _unit_grid(config.grid_step)
    result = StudyResult()
    for pop, N in zip(pops, config.sizes):
        n = _ladder_n(config, N)
        kn = _kn(n)
        for name in config.designs:
            design = design_for(name, pop, n)
            for rep in range(config.replicates):
                rng = stream(config.seed, "c4", N, name, rep)
                sample = draw(design, pop, rng)
                _, max_ratio = c4_ratio_scan(pop, sample, kn, grid)
                result.add(
                    study="c4",
                    N=N,
                    n=n,
                    kn=kn,
                    design=name,
                    grid_id=-1,
                    replicate=rep,
                    statistic="max_ratio",
                    value=max_ratio,
                )
    return result.sorted()


def run_c9_study(config: StudyConfig) -> StudyResult:
    """Partition-conditional dependence summaries per enumerable population size."""
    if config.study != "c9":
        raise ValueError("config is not a c9 study")
    for N in config.sizes:
        n = _ladder_n(config, N)
        support = math.comb(N, n)
        if support > 2_000_000:
            raise CapacityError(
                f"c9 needs exhaustive enumeration; N={N}, n={n} has {support} samples "
                "(cap 2000000). Use the desk preset (N <= 20)."
            )
    pops = _populations(config)
    grid = _unit_grid(config.grid_step)
    result = StudyResult()
    for pop, N in zip(pops, config.sizes):
        n = _ladder_n(config, N)
        kn = _kn(n)
        res = c9_rij_exhaustive(pop, DesignSpec.srswor(n), kn, grid)
        stats = {
            "mean_abs_rij_all": res.mean_abs_all,
            "mean_abs_rij_offdiag": res.mean_abs_offdiag,
            "group_count": float(res.group_count),
            "sample_count": float(res.sample_count),
            "total_expectation_error": res.total_expectation_error,
        }
        for statistic, value in stats.items():
            result.add(
                study="c9",
                N=N,
                n=n,
                kn=kn,
                design="srswor",
                grid_id=-1,
                replicate=-1,
                statistic=statistic,
                value=value,
            )
    return result.sorted()


def _replicate_curve(args) -> tuple[int, np.ndarray]:
    config, pop, design, grid_pts, kn, rep = args
    rng = stream(config.seed, config.study, pop.size, rep)
    sample = draw(design, pop, rng)
    pi = inclusion_probs(design, pop).pi
    xs = pop.x[sample.members]
    ys = pop.y[sample.members]
    weights = 1.0 / pi[sample.members]
    return rep, _ht_estimates(xs, ys, weights, grid_pts, kn)


def _replicated_estimates(
    config: StudyConfig, pop: Population, design: DesignSpec, grid_pts: np.ndarray, kn: int
) -> np.ndarray:
    """(replicates, grid) matrix of estimates; identical for any thread count."""
    jobs = [(config, pop, design, grid_pts, kn, rep) for rep in range(config.replicates)]
    estimates = np.empty((config.replicates, len(grid_pts)))
    if config.threads == 1:
        outcomes = map(_replicate_curve, jobs)
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(_replicate_curve, jobs))
    for rep, curve in outcomes:
        estimates[rep] = curve
    return estimates


def run_consistency_study(config: StudyConfig) -> StudyResult:
    """Monte Carlo MSE ladder of the design-weighted k-NN estimator on simulated data."""
    if config.study != "consistency":
        raise ValueError("config is not a consistency study")
    pops = _populations(config)
    spec = SuperpopSpec(regression=config.regression, noise_sd=config.noise_sd)
    x_top = pops[-1].x[:, 0]
    grid = np.linspace(x_top.min(), x_top.max(), config.eval_points)
    truth = np.array([true_regression(spec, g) for g in grid])
    grid_pts = grid[:, None]

    result = StudyResult()
    for pop, N in zip(pops, config.sizes):
        n = _ladder_n(config, N)
        kn = _kn(n)
        estimates = _replicated_estimates(config, pop, DesignSpec.srswor(n), grid_pts, kn)
        mse = ((estimates - truth[None, :]) ** 2).mean(axis=0)
        for rep in range(config.replicates):
            for g in range(len(grid)):
                result.add(
                    study="consistency", N=N, n=n, kn=kn, design="srswor",
                    grid_id=g, replicate=rep, statistic="estimate",
                    value=float(estimates[rep, g]),
                )
        for g in range(len(grid)):
            result.add(
                study="consistency", N=N, n=n, kn=kn, design="srswor",
                grid_id=g, replicate=-1, statistic="mse", value=float(mse[g]),
            )
            result.add(
                study="consistency", N=N, n=n, kn=kn, design="srswor",
                grid_id=g, replicate=-1, statistic="true_m", value=float(truth[g]),
            )
        shape = rate_bound(1, kn, n, mode="shape")
        result.add(
            study="consistency", N=N, n=n, kn=kn, design="srswor",
            grid_id=-1, replicate=-1, statistic="rate_shape", value=shape,
        )
        result.add(
            study="consistency", N=N, n=n, kn=kn, design="srswor",
            grid_id=-1, replicate=-1, statistic="rate_overlay",
            value=config.adjustment * shape,
        )
    return result.sorted()


@dataclass
class WineStudyOutput:
    """Wine study records plus the evaluation grid they were computed on."""

    result: StudyResult
    grid: np.ndarray
    covariates: list[str] = field(default_factory=list)


def vif(data: np.ndarray, col: int) -> float:
    """Variance inflation factor 1/(1 - R^2) of one column against the rest.

    R^2 comes from an intercept-augmented least-squares regression of the
    chosen column on the remaining columns.  Perfect collinearity returns
    the +inf sentinel.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or not 0 <= col < data.shape[1]:
        raise ValueError("data must be a matrix and col a valid column index")
    if data.shape[0] < data.shape[1] + 2:
        raise ValueError("need at least d + 2 rows for a VIF")
    target = data[:, col]
    others = np.delete(data, col, axis=1)
    design = np.column_stack([np.ones(len(target)), others])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    ss_tot = float(((target - target.mean()) ** 2).sum())
    if ss_tot == 0:
        return math.inf
    r2 = 1.0 - float((resid**2).sum()) / ss_tot
    if r2 >= 1.0 - 1e-12:
        return math.inf
    return 1.0 / (1.0 - r2)


def wine_grid(x: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Evaluation vectors for the wine study: a seeded random subset of the
    {min, midpoint, max}-per-covariate lattice."""
    lows = x.min(axis=0)
    highs = x.max(axis=0)
    levels = np.stack([lows, (lows + highs) / 2.0, highs])
    d = x.shape[1]
    total = 3**d
    rng = stream(seed, "wine", "grid")
    picks = np.sort(rng.choice(total, size=min(count, total), replace=False))
    out = np.empty((len(picks), d))
    for row, code in enumerate(picks):
        digits = np.empty(d, dtype=int)
        rest = int(code)
        for j in range(d):
            rest, digits[j] = divmod(rest, 3)
        out[row] = levels[digits, np.arange(d)]
    return out


def run_wine_study(config: StudyConfig, dataset_path) -> WineStudyOutput:
    """MSE ladder on the wine data against a full-population reference estimator."""
    if config.study != "wine":
        raise ValueError("config is not a wine study")
    names, table = read_table(dataset_path, WINE_SCHEMA)
    covariate_names = [c for c in names if c != WINE_RESPONSE]
    covariate_cols = [names.index(c) for c in covariate_names]
    pop_full = read_wine_csv(dataset_path)
    if config.standardize:
        pop_full = standardize_covariates(pop_full)
    if config.sizes[-1] > pop_full.size:
        raise ValueError(
            f"ladder top {config.sizes[-1]} exceeds dataset size {pop_full.size}"
        )

    result = StudyResult()
    # Collinearity screen over all physicochemical columns, response excluded.
    for idx, name in enumerate(covariate_names):
        value = vif(table[:, covariate_cols], idx)
        result.add(
            study="wine", N=pop_full.size, n=0, kn=0, design="vif-screen",
            grid_id=idx, replicate=-1, statistic="vif",
            value=value if math.isfinite(value) else math.inf,
        )

    grid_pts = wine_grid(pop_full.x, config.eval_points, config.seed)
    reference_k = (
        config.reference_k if config.reference_k is not None else math.isqrt(pop_full.size)
    )
    ones = np.ones(pop_full.size)
    reference = _ht_estimates(pop_full.x, pop_full.y, ones, grid_pts, reference_k)
    for g, value in enumerate(reference):
        result.add(
            study="wine", N=pop_full.size, n=pop_full.size, kn=reference_k,
            design="reference", grid_id=g, replicate=-1,
            statistic="reference_estimate", value=float(value),
        )

    for N in config.sizes:
        pop = pop_full.prefix(N)
        n = _ladder_n(config, N)
        kn = _kn(n)
        estimates = _replicated_estimates(config, pop, DesignSpec.srswor(n), grid_pts, kn)
        mse = ((estimates - reference[None, :]) ** 2).mean(axis=0)
        for g in range(len(grid_pts)):
            result.add(
                study="wine", N=N, n=n, kn=kn, design="srswor",
                grid_id=g, replicate=-1, statistic="mse", value=float(mse[g]),
            )
        shape = rate_bound(pop.dim, kn, n, mode="shape")
        result.add(
            study="wine", N=N, n=n, kn=kn, design="srswor",
            grid_id=-1, replicate=-1, statistic="rate_shape", value=shape,
        )
        result.add(
            study="wine", N=N, n=n, kn=kn, design="srswor",
            grid_id=-1, replicate=-1, statistic="rate_overlay",
            value=config.adjustment * shape,
        )
    kept = [c for c in covariate_names if c not in WINE_DROPPED]
    return WineStudyOutput(result=result.sorted(), grid=grid_pts, covariates=kept)
