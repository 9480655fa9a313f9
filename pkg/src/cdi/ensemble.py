"""Median aggregation of repeated graph samples and its convergence diagnostic.

Repeated model runs over the same propositions yield noisy graphs; the
elementwise median of their adjacency (absent edge = 0) is the L1-optimal
consensus, and L1 distance here coincides with graph edit distance under the
natural edit costs. The diagnostic measures how fast medians of subsamples
approach the median of the full ensemble.
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .errors import EnsembleMismatchError, InsufficientSamplesError
from .graph import CoherenceGraph, Proposition


@dataclass(frozen=True)
class GraphEnsemble:
    propositions: tuple[Proposition, ...]
    samples: tuple[CoherenceGraph, ...]

    def __post_init__(self):
        if not self.samples:
            raise InsufficientSamplesError("ensemble must contain at least one sample")
        expected = set(p.id for p in self.propositions)
        for i, sample in enumerate(self.samples):
            if set(sample.vertex_ids) != expected:
                raise EnsembleMismatchError(
                    f"sample {i} vertex set does not match the shared "
                    "proposition set"
                )

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class PerSizeDistances:
    """Distances from subsample medians of one size to the full median."""

    n: int
    distances: tuple[float, ...]
    min: float
    median: float
    max: float


@dataclass(frozen=True)
class ConvergenceReport:
    N: int
    per_n: tuple[PerSizeDistances, ...]

    def to_json_dict(self) -> dict:
        return {
            "N": self.N,
            "per_n": [
                {
                    "n": row.n,
                    "distances": list(row.distances),
                    "min": row.min,
                    "median": row.median,
                    "max": row.max,
                }
                for row in self.per_n
            ],
        }

    def to_csv_rows(self) -> list[tuple[int, float]]:
        return [(row.n, d) for row in self.per_n for d in row.distances]


def _pair_union(graphs: Sequence[CoherenceGraph]) -> list[tuple[str, str]]:
    pairs = {e.pair for g in graphs for e in g.edges}
    return sorted(pairs)


def median_graph(ensemble: GraphEnsemble) -> CoherenceGraph:
    """Elementwise median of edge weights across samples, absent edge = 0.

    Pairs whose median is 0 produce no edge. For an even number of samples
    the median is the midpoint of the two central values.
    """
    samples = ensemble.samples
    edges = []
    for u, v in _pair_union(samples):
        weights = [g.weight(u, v) for g in samples]
        m = statistics.median(weights)
        if m != 0.0:
            edges.append((u, v, m))
    return CoherenceGraph(ensemble.propositions, edges)


def l1_distance(g1: CoherenceGraph, g2: CoherenceGraph) -> float:
    """Sum over vertex pairs of |w1 - w2|, with absent edges counted as 0.

    Equals the graph edit distance under weight-change cost |Δw| and
    insert/delete cost |w|.
    """
    if set(g1.vertex_ids) != set(g2.vertex_ids):
        raise EnsembleMismatchError("graphs must share a vertex set")
    total = 0.0
    for u, v in _pair_union((g1, g2)):
        total += abs(g1.weight(u, v) - g2.weight(u, v))
    return total


def _subsample_indices(
    N: int, n: int, cap: int, rng: random.Random
) -> list[tuple[int, ...]]:
    count = min(cap, math.comb(N, n))
    if math.comb(N, n) <= cap:
        return list(combinations(range(N), n))
    chosen: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    while len(chosen) < count:
        pick = tuple(sorted(rng.sample(range(N), n)))
        if pick not in seen:
            seen.add(pick)
            chosen.append(pick)
    return chosen


def convergence_diagnostic(
    ensemble: GraphEnsemble,
    subsample_cap: int = 100,
    rng_seed: int = 0,
) -> ConvergenceReport:
    """Distances from subsample medians to the full-ensemble median.

    For each size n strictly between 1 and N, draws min(subsample_cap,
    C(N, n)) distinct subsamples (all of them when that binomial is within
    the cap, otherwise uniformly without replacement) and records the L1
    distance from each subsample's median graph to the median of all N.
    Deterministic under a fixed seed.
    """
    N = len(ensemble)
    if N < 3:
        raise InsufficientSamplesError(
            f"convergence diagnostic needs at least 3 samples, got {N}"
        )
    rng = random.Random(rng_seed)
    full_median = median_graph(ensemble)
    rows = []
    for n in range(2, N):
        distances = []
        for idx in _subsample_indices(N, n, subsample_cap, rng):
            sub = GraphEnsemble(
                propositions=ensemble.propositions,
                samples=tuple(ensemble.samples[i] for i in idx),
            )
            distances.append(l1_distance(median_graph(sub), full_median))
        rows.append(
            PerSizeDistances(
                n=n,
                distances=tuple(distances),
                min=min(distances),
                median=float(statistics.median(distances)),
                max=max(distances),
            )
        )
    return ConvergenceReport(N=N, per_n=tuple(rows))
