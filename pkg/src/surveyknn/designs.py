"""Sampling designs with exact inclusion probabilities and sample drawing.

Supported designs and their joint-probability status:

==================  =========================  ==========================
kind                first-order pi_i           second-order pi_ij
==================  =========================  ==========================
srswor              n/N                        closed form
poisson             given (or n/N)             pi_i * pi_j (independence)
stratified_srswor   n_h/N_h                    closed form
systematic_equal    n/N (N/n integer)          closed form (0 off-phase)
cluster_equal       t/T                        closed form
pps_systematic      n*z_i/sum(z), capped       Monte Carlo only
==================  =========================  ==========================

``enumerate_all_samples`` is the oracle used to verify the closed forms
and to compute partition-conditional expectations exhaustively.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .errors import CapacityError, DiagnosticUnavailableError
from .population import Population

# Dense joint-probability matrices are only materialized up to this N.
DENSE_PIJ_CAP = 2000
# Exhaustive enumeration refuses supports larger than this.
ENUMERATION_CAP = 2_000_000

FIXED_SIZE_KINDS = ("srswor", "stratified_srswor", "systematic_equal", "pps_systematic")
ENUMERABLE_KINDS = ("srswor", "stratified_srswor", "systematic_equal", "cluster_equal")


@dataclass(frozen=True)
class Stratum:
    """A stratum: the unit ids it contains and how many to select from it."""

    units: tuple[int, ...]
    take: int


@dataclass(frozen=True)
class DesignSpec:
    """A sampling design and its parameters, validated against a population at use."""

    kind: str
    n: int | None = None
    strata: tuple[Stratum, ...] | None = None
    cluster_labels: tuple[int, ...] | None = None
    clusters_to_select: int | None = None
    pi: tuple[float, ...] | None = None

    @classmethod
    def srswor(cls, n: int) -> "DesignSpec":
        return cls(kind="srswor", n=int(n))

    @classmethod
    def poisson(cls, n: int | None = None, pi=None) -> "DesignSpec":
        """Poisson design with expected size n (uniform pi) or explicit pi."""
        if (n is None) == (pi is None):
            raise ValueError("give exactly one of n or pi")
        probs = None if pi is None else tuple(float(p) for p in pi)
        return cls(kind="poisson", n=None if n is None else int(n), pi=probs)

    @classmethod
    def stratified(cls, strata) -> "DesignSpec":
        built = tuple(Stratum(tuple(int(u) for u in units), int(take)) for units, take in strata)
        return cls(kind="stratified_srswor", n=sum(s.take for s in built), strata=built)

    @classmethod
    def pps(cls, n: int) -> "DesignSpec":
        return cls(kind="pps_systematic", n=int(n))

    @classmethod
    def systematic(cls, n: int) -> "DesignSpec":
        return cls(kind="systematic_equal", n=int(n))

    @classmethod
    def cluster(cls, labels, t: int) -> "DesignSpec":
        return cls(
            kind="cluster_equal",
            cluster_labels=tuple(int(c) for c in labels),
            clusters_to_select=int(t),
        )


@dataclass(frozen=True)
class Sample:
    """A drawn sample: sorted member ids and their design weights 1/pi."""

    members: np.ndarray
    weights: np.ndarray
    n_pop: int

    def __post_init__(self) -> None:
        members = np.asarray(self.members, dtype=int)
        weights = np.asarray(self.weights, dtype=float)
        if members.ndim != 1 or weights.shape != members.shape:
            raise ValueError("members and weights must be 1-D arrays of equal length")
        if (np.diff(members) <= 0).any():
            raise ValueError("members must be strictly increasing unit ids")
        if not np.isfinite(weights).all() or (weights < 1).any():
            raise ValueError("weights must be finite and >= 1")
        members.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return len(self.members)

    def indicators(self) -> np.ndarray:
        ind = np.zeros(self.n_pop, dtype=int)
        ind[self.members] = 1
        return ind


class InclusionProbs:
    """First- and second-order inclusion probabilities of a design.

    ``pij`` values come from a closed form or a dense matrix; designs
    without either (pps) raise DiagnosticUnavailableError.  ``exact``
    is False when the joint probabilities were Monte Carlo estimated.
    """

    def __init__(
        self,
        pi: np.ndarray,
        exact: bool = True,
        pij_fn: Callable[[int, int], float] | None = None,
        dense: np.ndarray | None = None,
    ):
        self.pi = np.asarray(pi, dtype=float)
        self.pi.flags.writeable = False
        self.exact = exact
        self._pij_fn = pij_fn
        self._dense = dense

    @property
    def size(self) -> int:
        return len(self.pi)

    @property
    def has_pij(self) -> bool:
        return self._pij_fn is not None or self._dense is not None

    def pij(self, i: int, j: int) -> float:
        """Joint inclusion probability of units i and j (pi_i when i == j)."""
        if i == j:
            return float(self.pi[i])
        if self._dense is not None:
            return float(self._dense[i, j])
        if self._pij_fn is not None:
            return self._pij_fn(i, j)
        raise DiagnosticUnavailableError(
            "no joint inclusion probabilities for this design; "
            "use estimate_joint_probs for a Monte Carlo estimate"
        )

    def pij_matrix(self) -> np.ndarray:
        """Dense (N, N) matrix of joint probabilities with pi on the diagonal."""
        if self._dense is not None:
            return self._dense
        if self._pij_fn is None:
            raise DiagnosticUnavailableError(
                "no joint inclusion probabilities for this design; "
                "use estimate_joint_probs for a Monte Carlo estimate"
            )
        n = self.size
        if n > DENSE_PIJ_CAP:
            raise CapacityError(
                f"dense joint-probability matrix capped at N <= {DENSE_PIJ_CAP}, got N = {n}"
            )
        out = np.empty((n, n))
        for i in range(n):
            out[i, i] = self.pi[i]
            for j in range(i + 1, n):
                out[i, j] = out[j, i] = self._pij_fn(i, j)
        self._dense = out
        return out


def pps_probabilities(z: np.ndarray, n: int) -> np.ndarray:
    """Size-proportional inclusion probabilities n*z_i/sum(z), capped at 1.

    Units whose raw probability exceeds 1 are fixed at 1 and the remaining
    sample size is redistributed proportionally over the rest, iterating
    until stable.  The result satisfies 0 < pi_i <= 1 and sum(pi) == n.
    """
    z = np.asarray(z, dtype=float)
    if not (z > 0).all():
        raise ValueError("pps needs a strictly positive size variable for every unit")
    if not 1 <= n <= len(z):
        raise ValueError(f"sample size must be in [1, {len(z)}], got {n}")
    pi = n * z / z.sum()
    fixed = np.zeros(len(z), dtype=bool)
    while (pi > 1).any():
        fixed |= pi >= 1
        pi[fixed] = 1.0
        remaining = n - int(fixed.sum())
        if remaining == 0:
            pi[~fixed] = 0.0
            break
        z_rest = z[~fixed]
        pi[~fixed] = remaining * z_rest / z_rest.sum()
    return pi


def _stratum_arrays(design: DesignSpec, pop: Population) -> tuple[np.ndarray, list[Stratum]]:
    labels = np.full(pop.size, -1, dtype=int)
    for h, stratum in enumerate(design.strata):
        units = np.asarray(stratum.units, dtype=int)
        if len(units) == 0 or units.min() < 0 or units.max() >= pop.size:
            raise ValueError(f"stratum {h} has unit ids outside the population")
        if (labels[units] != -1).any():
            raise ValueError("strata must not overlap")
        if not 1 <= stratum.take <= len(units):
            raise ValueError(
                f"stratum {h} selects {stratum.take} from {len(units)} units"
            )
        labels[units] = h
    if (labels == -1).any():
        raise ValueError("strata must partition the population")
    return labels, list(design.strata)


def _cluster_arrays(design: DesignSpec, pop: Population) -> tuple[np.ndarray, int, int]:
    labels = np.asarray(design.cluster_labels, dtype=int)
    if labels.shape != (pop.size,):
        raise ValueError("cluster_labels must assign every unit to a cluster")
    n_clusters = len(np.unique(labels))
    if set(np.unique(labels)) != set(range(n_clusters)):
        raise ValueError("cluster labels must be 0..T-1")
    t = design.clusters_to_select
    if not 1 <= t <= n_clusters:
        raise ValueError(f"must select between 1 and {n_clusters} clusters, got {t}")
    return labels, n_clusters, t


def inclusion_probs(design: DesignSpec, pop: Population) -> InclusionProbs:
    """Exact first-order probabilities, plus joint probabilities where closed forms exist."""
    N = pop.size
    kind = design.kind

    if kind == "srswor":
        n = design.n
        if not 1 <= n <= N:
            raise ValueError(f"sample size must be in [1, {N}], got {n}")
        pi = np.full(N, n / N)
        pij = n * (n - 1) / (N * (N - 1)) if N > 1 else 1.0
        return InclusionProbs(pi, pij_fn=lambda i, j: pij)

    if kind == "poisson":
        if design.pi is not None:
            pi = np.asarray(design.pi, dtype=float)
            if pi.shape != (N,):
                raise ValueError(f"poisson pi must have {N} entries")
        else:
            if not 1 <= design.n <= N:
                raise ValueError(f"expected size must be in [1, {N}], got {design.n}")
            pi = np.full(N, design.n / N)
        if not ((pi > 0) & (pi <= 1)).all():
            raise ValueError("poisson pi must lie in (0, 1]")
        return InclusionProbs(pi, pij_fn=lambda i, j: float(pi[i] * pi[j]))

    if kind == "stratified_srswor":
        labels, strata = _stratum_arrays(design, pop)
        pi = np.empty(N)
        frac = {h: s.take / len(s.units) for h, s in enumerate(strata)}
        joint_same = {
            h: (s.take * (s.take - 1) / (len(s.units) * (len(s.units) - 1)))
            if len(s.units) > 1
            else 1.0
            for h, s in enumerate(strata)
        }
        for h, s in enumerate(strata):
            pi[list(s.units)] = frac[h]

        def pij(i: int, j: int) -> float:
            hi, hj = labels[i], labels[j]
            if hi == hj:
                return joint_same[int(hi)]
            return frac[int(hi)] * frac[int(hj)]

        return InclusionProbs(pi, pij_fn=pij)

    if kind == "systematic_equal":
        n = design.n
        if not 1 <= n <= N:
            raise ValueError(f"sample size must be in [1, {N}], got {n}")
        if N % n != 0:
            raise ValueError(
                f"equal-probability systematic sampling needs N/n integer, got N={N}, n={n}"
            )
        step = N // n
        pi = np.full(N, n / N)

        def pij(i: int, j: int) -> float:
            return n / N if i % step == j % step else 0.0

        return InclusionProbs(pi, pij_fn=pij)

    if kind == "cluster_equal":
        labels, n_clusters, t = _cluster_arrays(design, pop)
        pi = np.full(N, t / n_clusters)
        same = t / n_clusters
        cross = (t / n_clusters) * ((t - 1) / (n_clusters - 1)) if n_clusters > 1 else 1.0

        def pij(i: int, j: int) -> float:
            return same if labels[i] == labels[j] else cross

        return InclusionProbs(pi, pij_fn=pij)

    if kind == "pps_systematic":
        if pop.z is None:
            raise ValueError("pps design needs a population size variable z")
        pi = pps_probabilities(pop.z, design.n)
        return InclusionProbs(pi, exact=False)

    raise ValueError(f"unknown design kind {kind!r}")


def draw(design: DesignSpec, pop: Population, rng: np.random.Generator) -> Sample:
    """Draw one sample; fixed-size designs return exactly n members."""
    probs = inclusion_probs(design, pop)
    N = pop.size
    kind = design.kind

    if kind == "srswor":
        members = np.sort(rng.choice(N, design.n, replace=False))
    elif kind == "poisson":
        members = np.flatnonzero(rng.random(N) < probs.pi)
    elif kind == "stratified_srswor":
        parts = [
            np.asarray(s.units, dtype=int)[rng.choice(len(s.units), s.take, replace=False)]
            for s in design.strata
        ]
        members = np.sort(np.concatenate(parts))
    elif kind == "systematic_equal":
        step = N // design.n
        start = int(rng.integers(step))
        members = start + step * np.arange(design.n)
    elif kind == "cluster_equal":
        labels, n_clusters, t = _cluster_arrays(design, pop)
        chosen = rng.choice(n_clusters, t, replace=False)
        members = np.flatnonzero(np.isin(labels, chosen))
    elif kind == "pps_systematic":
        members = _draw_pps_systematic(probs.pi, design.n, rng)
    else:
        raise ValueError(f"unknown design kind {kind!r}")

    return Sample(members=members, weights=1.0 / probs.pi[members], n_pop=N)


def _draw_pps_systematic(pi: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    # Systematic selection on a randomly permuted frame: first-order
    # probabilities are exactly pi regardless of the permutation, which
    # only serves to decorrelate joint inclusions.
    N = len(pi)
    order = rng.permutation(N)
    cum = np.cumsum(pi[order])
    cum *= n / cum[-1]
    cum[-1] = float(n)
    targets = rng.random() + np.arange(n)
    idx = np.searchsorted(cum, targets, side="left")
    return np.sort(order[np.minimum(idx, N - 1)])


def _support_size(design: DesignSpec, pop: Population) -> int:
    kind = design.kind
    if kind == "srswor":
        return math.comb(pop.size, design.n)
    if kind == "stratified_srswor":
        total = 1
        for s in design.strata:
            total *= math.comb(len(s.units), s.take)
        return total
    if kind == "systematic_equal":
        return pop.size // design.n
    if kind == "cluster_equal":
        _, n_clusters, t = _cluster_arrays(design, pop)
        return math.comb(n_clusters, t)
    raise ValueError(f"design kind {kind!r} is not enumerable")


def enumerate_all_samples(
    design: DesignSpec, pop: Population
) -> Iterator[tuple[Sample, float]]:
    """Every sample the design can produce, with its selection probability.

    Probabilities sum to 1.  Only equal-probability-within-structure kinds
    are enumerable; the support is capped at ENUMERATION_CAP samples.
    """
    if design.kind not in ENUMERABLE_KINDS:
        raise ValueError(f"design kind {design.kind!r} is not enumerable")
    probs = inclusion_probs(design, pop)
    count = _support_size(design, pop)
    if count > ENUMERATION_CAP:
        raise CapacityError(
            f"enumeration support has {count} samples, above the cap of {ENUMERATION_CAP}"
        )
    p = 1.0 / count
    N = pop.size

    def make(members: np.ndarray) -> Sample:
        return Sample(members=members, weights=1.0 / probs.pi[members], n_pop=N)

    if design.kind == "srswor":
        for combo in itertools.combinations(range(N), design.n):
            yield make(np.asarray(combo, dtype=int)), p
    elif design.kind == "stratified_srswor":
        per_stratum = [
            [np.asarray(c, dtype=int) for c in itertools.combinations(s.units, s.take)]
            for s in design.strata
        ]
        for parts in itertools.product(*per_stratum):
            yield make(np.sort(np.concatenate(parts))), p
    elif design.kind == "systematic_equal":
        step = N // design.n
        for start in range(step):
            yield make(start + step * np.arange(design.n)), p
    else:
        labels, n_clusters, t = _cluster_arrays(design, pop)
        for chosen in itertools.combinations(range(n_clusters), t):
            members = np.flatnonzero(np.isin(labels, chosen))
            yield make(members), p


def estimate_joint_probs(
    design: DesignSpec, pop: Population, replicates: int, seed: int
) -> InclusionProbs:
    """Monte Carlo joint inclusion probabilities from repeated draws.

    The returned matrix holds joint inclusion frequencies (marginal
    frequencies on the diagonal) and is marked ``exact=False``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    N = pop.size
    if N > DENSE_PIJ_CAP:
        raise CapacityError(
            f"Monte Carlo joint probabilities capped at N <= {DENSE_PIJ_CAP}, got N = {N}"
        )
    rng = np.random.default_rng(seed)
    counts = np.zeros((N, N))
    for _ in range(replicates):
        members = draw(design, pop, rng).members
        counts[np.ix_(members, members)] += 1.0
    freq = counts / replicates
    return InclusionProbs(pi=np.diag(freq).copy(), exact=False, dense=freq)
