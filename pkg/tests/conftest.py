"""Shared fixtures: a synthetic wine-schema file and an enumeration oracle."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from surveyknn.dataio import WINE_COLUMNS
from surveyknn.designs import enumerate_all_samples


def enumerated_pij_matrix(design, pop) -> np.ndarray:
    """Joint inclusion probabilities by brute-force enumeration of the design."""
    N = pop.size
    out = np.zeros((N, N))
    for sample, p in enumerate_all_samples(design, pop):
        out[np.ix_(sample.members, sample.members)] += p
    return out


def write_wine_like_csv(path, rows: int, seed: int = 0) -> np.ndarray:
    """A syntactically valid wine file with random but plausible numbers."""
    rng = np.random.default_rng(seed)
    data = rng.random((rows, len(WINE_COLUMNS)))
    data[:, -1] = rng.integers(3, 9, size=rows)  # quality scores
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=";")
        writer.writerow(WINE_COLUMNS)
        for row in data:
            writer.writerow([f"{v:.6g}" for v in row])
    return data


@pytest.fixture
def wine_like_file(tmp_path):
    path = tmp_path / "winequality-white.csv"
    data = write_wine_like_csv(path, rows=60, seed=7)
    return path, data
