"""Computable design diagnostics.

The diagnostics are labeled c4, c7, c8, c9 throughout the package:

* c4: local sampling-fraction balance — the ratio of the overall sampling
  fraction to the sampling fraction inside each query point's neighbor
  ball.  Bounded ratios mean no neighborhood is badly over- or
  under-represented.
* c7: the floor of the first-order inclusion probabilities.
* c8: the pairwise dependence measure max |pi_ij/(pi_i pi_j) - 1|.
* c9: partition-conditional dependence — how much knowing the k-NN
  neighborhood partition shifts joint inclusion probabilities, computed
  exhaustively for enumerable designs.

These report values only; whether a value is acceptable is an asymptotic
question left to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .designs import DesignSpec, InclusionProbs, Sample, enumerate_all_samples, inclusion_probs
from .errors import DiagnosticUnavailableError
from .neighbors import as_points
from .population import Population


def c4_ratio_scan(
    pop: Population, sample: Sample, kn: int, grid
) -> tuple[np.ndarray, float]:
    """Sampling-fraction balance ratios over a grid, and their maximum.

    For each grid point x the ratio is (n/N) divided by the sampling
    fraction within the ball reaching the kn-th nearest sample unit,
    i.e. (n/N) * (#population units in ball) / kn.
    """
    n = sample.size
    if not 1 <= kn <= n:
        raise ValueError(f"kn must be in [1, {n}], got {kn}")
    grid_pts = as_points(grid)
    sample_d = cdist(grid_pts, pop.x[sample.members])
    # The radius is the kn-th smallest distance; the id tie rule cannot
    # change its value.
    radius = np.partition(sample_d, kn - 1, axis=1)[:, kn - 1]
    pop_d = cdist(grid_pts, pop.x)
    ball_count = (pop_d <= radius[:, None]).sum(axis=1)
    ratios = (n / pop.size) * ball_count / kn
    return ratios, float(ratios.max())


def c7_min_inclusion(probs: InclusionProbs) -> float:
    """The smallest first-order inclusion probability."""
    return float(probs.pi.min())


def c8_dependence_measure(design: DesignSpec, pop: Population) -> float:
    """Worst-case pairwise dependence max |pi_ij/(pi_i pi_j) - 1|, in closed form.

    Census designs (n = N, or t = T clusters) have measure 0.  Designs
    without closed-form joint probabilities (pps) are unsupported here;
    estimate the matrix with ``estimate_joint_probs`` and use
    ``dependence_measure_from_probs``.
    """
    N = pop.size
    kind = design.kind

    if kind == "poisson":
        return 0.0
    if kind == "srswor":
        n = design.n
        if n == N:
            return 0.0
        return (N - n) / (n * (N - 1))
    if kind == "stratified_srswor":
        worst = 0.0
        for s in design.strata:
            size_h, take_h = len(s.units), s.take
            if take_h < size_h:
                worst = max(worst, (size_h - take_h) / (take_h * (size_h - 1)))
        return worst
    if kind == "systematic_equal":
        n = design.n
        if n == N:
            return 0.0
        return max(abs(N / n - 1.0), 1.0)
    if kind == "cluster_equal":
        t = design.clusters_to_select
        n_clusters = len(set(design.cluster_labels))
        if t == n_clusters:
            return 0.0
        return max(n_clusters / t - 1.0, 1.0 - ((t - 1) / (n_clusters - 1)) * (n_clusters / t))
    if kind == "pps_systematic":
        raise DiagnosticUnavailableError(
            "pps has no closed-form joint probabilities; estimate them with "
            "estimate_joint_probs and use dependence_measure_from_probs"
        )
    raise ValueError(f"unknown design kind {kind!r}")


def dependence_measure_from_probs(probs: InclusionProbs) -> float:
    """max over i != j of |pi_ij/(pi_i pi_j) - 1| from a dense matrix."""
    pij = probs.pij_matrix()
    outer = np.outer(probs.pi, probs.pi)
    ratio = np.abs(pij / outer - 1.0)
    np.fill_diagonal(ratio, 0.0)
    return float(ratio.max())


@dataclass
class C9Result:
    """Exhaustive partition-conditional dependence summary.

    ``expected_abs_rij[i, j]`` is the design expectation of
    |E(I_i I_j | partition) - pi_ij|; the two means aggregate it over all
    pairs (with and without the diagonal).  ``total_expectation_error``
    is the worst violation of the law of total expectation, which should
    sit at floating-point noise.
    """

    expected_abs_rij: np.ndarray
    mean_abs_all: float
    mean_abs_offdiag: float
    group_count: int
    sample_count: int
    total_expectation_error: float


def _signature_ids(all_d: np.ndarray, members: np.ndarray, kn: int) -> np.ndarray:
    """Per grid row, the sorted ids of the kn nearest members.

    ``all_d`` holds grid-to-population distances; ``members`` must be
    ascending so the stable argsort breaks distance ties by ascending unit
    id, matching ``partition_signature``.
    """
    if not 1 <= kn <= len(members):
        raise ValueError(f"kn must be in [1, {len(members)}], got {kn}")
    order = np.argsort(all_d[:, members], axis=1, kind="stable")[:, :kn]
    return np.sort(members[order], axis=1)


def c9_rij_exhaustive(
    pop: Population, design: DesignSpec, kn: int, grid
) -> C9Result:
    """Enumerate all samples, group them by k-NN partition signature, and
    measure how far partition-conditional joint inclusion expectations sit
    from the unconditional pi_ij.

    The signature of a sample is, per grid point, the sorted id set of its
    kn nearest members (ties by ascending id); samples are conditioned on
    equality of signatures over the whole grid.
    """
    grid_pts = as_points(grid)
    N = pop.size
    probs = inclusion_probs(design, pop)
    pij = probs.pij_matrix()

    # Distances from every grid point to every population unit; per-sample
    # signatures are column slices of this, so enumeration stays cheap.
    all_d = cdist(grid_pts, pop.x)

    groups: dict[bytes, tuple[list[np.ndarray], list[float]]] = {}
    sample_count = 0
    for sample, p in enumerate_all_samples(design, pop):
        members = sample.members
        key = _signature_ids(all_d, members, kn).tobytes()
        entry = groups.get(key)
        if entry is None:
            groups[key] = ([members], [p])
        else:
            entry[0].append(members)
            entry[1].append(p)
        sample_count += 1

    expected_abs = np.zeros((N, N))
    total = np.zeros((N, N))
    for member_lists, ps in groups.values():
        p_group = float(np.sum(ps))
        scaled = np.zeros((len(member_lists), N))
        for row, (members, p) in enumerate(zip(member_lists, ps)):
            scaled[row, members] = np.sqrt(p)
        conditional = (scaled.T @ scaled) / p_group
        expected_abs += p_group * np.abs(conditional - pij)
        total += p_group * conditional

    offdiag_sum = expected_abs.sum() - np.trace(expected_abs)
    return C9Result(
        expected_abs_rij=expected_abs,
        mean_abs_all=float(expected_abs.mean()),
        mean_abs_offdiag=float(offdiag_sum / (N * N - N)) if N > 1 else 0.0,
        group_count=len(groups),
        sample_count=sample_count,
        total_expectation_error=float(np.abs(total - pij).max()),
    )
