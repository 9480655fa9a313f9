"""Maximizing the coherence objective over bipartitions.

Exact solving enumerates every unordered bipartition (one vertex's side is
pinned, halving the space) and is intended for desk scale, up to the
configured vertex limit. The heuristic is multi-start best-improvement flip
descent with optional simulated annealing. Soft acceptance uses a Gibbs
distribution over cuts with probability proportional to
exp(beta * coherence).

All cut arithmetic runs on integer micro-units (weights scaled by 1e6), so
optima and ties are detected by exact comparison rather than float
tolerance.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidParameterError,
    TooLargeError,
    UnknownVertexError,
)
from .graph import Bipartition, CoherenceGraph, coherence

_MICRO = 10**6
_CHUNK = 1 << 20


@dataclass(frozen=True)
class AnnealSchedule:
    """Simulated-annealing perturbation applied after flip descent."""

    initial_temperature: float = 1.0
    cooling: float = 0.95
    steps: int = 200

    def __post_init__(self):
        if self.initial_temperature <= 0:
            raise InvalidParameterError("initial_temperature must be > 0")
        if not 0 < self.cooling < 1:
            raise InvalidParameterError("cooling must be in (0, 1)")
        if self.steps < 0:
            raise InvalidParameterError("steps must be >= 0")


@dataclass(frozen=True)
class SolverConfig:
    exact_vertex_limit: int = 24
    restarts: int = 50
    rng_seed: int = 0
    beta: float = 1.0
    anneal_schedule: AnnealSchedule | None = None
    gibbs_top_k: int | None = None

    def __post_init__(self):
        if self.exact_vertex_limit < 1:
            raise InvalidParameterError("exact_vertex_limit must be >= 1")
        if self.restarts < 1:
            raise InvalidParameterError("restarts must be >= 1")
        if self.beta < 0:
            raise InvalidParameterError("beta must be >= 0")
        if self.gibbs_top_k is not None and self.gibbs_top_k < 1:
            raise InvalidParameterError("gibbs_top_k must be >= 1")


@dataclass(frozen=True)
class CutReport:
    """A solved cut: its value, whether it is provably optimal, and ties."""

    cut: Bipartition
    value: float
    exact: bool
    ties: tuple[Bipartition, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "accepted": sorted(self.cut.accepted),
            "rejected": sorted(self.cut.rejected),
            "value": self.value,
            "exact": self.exact,
            "ties": [
                {"accepted": sorted(t.accepted), "rejected": sorted(t.rejected)}
                for t in self.ties
            ],
        }


@dataclass(frozen=True)
class GibbsResult:
    """Soft acceptance: cut probabilities and per-proposition marginals."""

    beta: float
    cut_probabilities: dict[Bipartition, float]
    acceptance_marginals: dict[str, float]

    def to_json_dict(self) -> dict:
        cuts = sorted(
            self.cut_probabilities.items(),
            key=lambda kv: (-kv[1], sorted(kv[0].accepted)),
        )
        return {
            "beta": self.beta,
            "cuts": [
                {
                    "accepted": sorted(cut.accepted),
                    "rejected": sorted(cut.rejected),
                    "probability": prob,
                }
                for cut, prob in cuts
            ],
            "acceptance_marginals": {
                k: self.acceptance_marginals[k]
                for k in sorted(self.acceptance_marginals)
            },
        }


# --- exact enumeration --------------------------------------------------------


def _micro_weight(w: float) -> int:
    return int(round(w * _MICRO))


def _enumeration_ids(graph: CoherenceGraph) -> list[str]:
    # Lexicographic order with the smallest id pinned to side 0 makes the
    # unpinned enumeration orientation the canonical one for free.
    return sorted(graph.vertex_ids)

def _indexed_edges(graph: CoherenceGraph, ids: list[str]) -> list[tuple[int, int, int]]:
    index = {v: i for i, v in enumerate(ids)}
    out = []
    for e in graph.edges:
        i, j = index[e.u], index[e.v]
        if i > j:
            i, j = j, i
        out.append((i, j, _micro_weight(e.weight)))
    return out


def _cut_values_micro(graph: CoherenceGraph, ids: list[str]) -> np.ndarray:
    """Coherence (micro-units) of every unordered cut, indexed by side mask.

    Mask bit k-1 gives the side of ids[k]; ids[0] is pinned to side 0.
    """
    n = len(ids)
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    total = 1 << (n - 1)
    edges = _indexed_edges(graph, ids)
    values = np.zeros(total, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        masks = np.arange(start, stop, dtype=np.uint32)
        acc = np.zeros(stop - start, dtype=np.int64)
        for i, j, w in edges:
            if i == 0:
                crossing = (masks >> (j - 1)) & 1
            else:
                crossing = ((masks >> (i - 1)) ^ (masks >> (j - 1))) & 1
            acc += w * crossing.astype(np.int64)
        values[start:stop] = -acc
    return values


def _mask_sides(mask: int, ids: list[str]) -> tuple[frozenset[str], frozenset[str]]:
    if not ids:
        return frozenset(), frozenset()
    side0 = [ids[0]]
    side1 = []
    for k in range(1, len(ids)):
        (side1 if (mask >> (k - 1)) & 1 else side0).append(ids[k])
    return frozenset(side0), frozenset(side1)


def _mask_to_bipartition(
    mask: int, ids: list[str], priority: frozenset[str]
) -> Bipartition:
    side0, side1 = _mask_sides(mask, ids)
    return Bipartition._orient(side0, side1, priority)


def _check_size(graph: CoherenceGraph, limit: int) -> None:
    if len(graph) > limit:
        raise TooLargeError(
            f"{len(graph)} vertices exceeds the exact enumeration limit of "
            f"{limit}; use solve_heuristic for graphs this large"
        )


def _check_priority(graph: CoherenceGraph, priority) -> frozenset[str]:
    prio = frozenset(priority or ())
    unknown = prio - set(graph.vertex_ids)
    if unknown:
        raise UnknownVertexError(f"priority ids not in graph: {sorted(unknown)}")
    return prio


def _priority_together(masks: np.ndarray, ids: list[str], prio: frozenset[str]) -> np.ndarray:
    """Boolean mask of cuts that keep all priority ids on one common side."""
    indices = [ids.index(p) for p in sorted(prio)]
    bits = [
        np.zeros(len(masks), dtype=np.uint32) if i == 0 else (masks >> (i - 1)) & 1
        for i in indices
    ]
    together = np.ones(len(masks), dtype=bool)
    for b in bits[1:]:
        together &= b == bits[0]
    return together


def solve_exact(
    graph: CoherenceGraph,
    config: SolverConfig | None = None,
    priority: frozenset[str] | set[str] | None = None,
) -> CutReport:
    """Enumerate every unordered bipartition and return a maximum cut.

    The report carries the full tie set. With a priority set, the search is
    restricted to cuts that keep all priority ids on one common side, and the
    returned cuts are oriented so the priority ids are accepted. The returned
    representative is the tie whose accepted set sorts first.
    """
    config = config or SolverConfig()
    _check_size(graph, config.exact_vertex_limit)
    prio = _check_priority(graph, priority)

    ids = _enumeration_ids(graph)
    values = _cut_values_micro(graph, ids)
    if prio and len(ids) > 1:
        masks = np.arange(len(values), dtype=np.uint32)
        valid = _priority_together(masks, ids, prio)
        best_value = values[valid].max()
        tie_masks = np.nonzero(valid & (values == best_value))[0]
    else:
        best_value = values.max()
        tie_masks = np.nonzero(values == best_value)[0]

    ties = sorted(
        (_mask_to_bipartition(int(m), ids, prio) for m in tie_masks),
        key=lambda b: sorted(b.accepted),
    )
    return CutReport(
        cut=ties[0],
        value=int(best_value) / _MICRO,
        exact=True,
        ties=tuple(ties),
    )


def enumerate_cuts(
    graph: CoherenceGraph, config: SolverConfig | None = None
) -> list[tuple[Bipartition, float]]:
    """Every unordered bipartition with its coherence, best first."""
    config = config or SolverConfig()
    _check_size(graph, config.exact_vertex_limit)
    ids = _enumeration_ids(graph)
    values = _cut_values_micro(graph, ids)
    rows = [
        (_mask_to_bipartition(mask, ids, frozenset()), int(v) / _MICRO)
        for mask, v in enumerate(values)
    ]
    rows.sort(key=lambda row: (-row[1], sorted(row[0].accepted)))
    return rows


# --- heuristic ----------------------------------------------------------------


def solve_heuristic(
    graph: CoherenceGraph, config: SolverConfig | None = None
) -> CutReport:
    """Multi-start flip descent, optionally with annealing between descents.

    Restart 0 always begins from the all-one-side cut (so nonnegative
    graphs report their optimum of 0), the rest from seeded random cuts.
    Every reported cut is single-vertex-flip locally optimal. Deterministic
    for a fixed seed.
    """
    config = config or SolverConfig()
    ids = _enumeration_ids(graph)
    n = len(ids)
    if n == 0:
        return CutReport(
            cut=Bipartition(frozenset(), frozenset()), value=0.0, exact=False
        )
    adjacency: dict[str, list[tuple[str, int]]] = {v: [] for v in ids}
    for e in graph.edges:
        w = _micro_weight(e.weight)
        adjacency[e.u].append((e.v, w))
        adjacency[e.v].append((e.u, w))

    best_value: int | None = None
    best_side: dict[str, int] = {}

    for restart in range(config.restarts):
        rng = random.Random(f"{config.rng_seed}:{restart}")
        if restart == 0:
            side = {v: 0 for v in ids}
        else:
            side = {v: rng.randint(0, 1) for v in ids}

        side, value = _descend(ids, adjacency, side)
        if config.anneal_schedule is not None:
            side, value = _anneal_then_descend(
                ids, adjacency, side, value, config.anneal_schedule, rng
            )
        if best_value is None or value > best_value:
            best_value = value
            best_side = dict(side)

    accepted = frozenset(v for v in ids if best_side[v] == 0)
    cut = graph.bipartition(accepted)
    assert best_value is not None
    return CutReport(cut=cut, value=best_value / _MICRO, exact=False)


def _flip_gain(vertex: str, side: dict[str, int], adjacency) -> int:
    """Coherence gain (micro-units) of flipping one vertex."""
    crossing = 0
    same = 0
    here = side[vertex]
    for other, w in adjacency[vertex]:
        if side[other] == here:
            same += w
        else:
            crossing += w
    return crossing - same


def _cut_value(ids, side, adjacency) -> int:
    total = 0
    for v in ids:
        for other, w in adjacency[v]:
            if v < other and side[v] != side[other]:
                total += w
    return -total


def _descend(ids, adjacency, side) -> tuple[dict[str, int], int]:
    side = dict(side)
    value = _cut_value(ids, side, adjacency)
    while True:
        best_gain = 0
        best_vertex = None
        for v in ids:
            gain = _flip_gain(v, side, adjacency)
            if gain > best_gain:
                best_gain, best_vertex = gain, v
        if best_vertex is None:
            return side, value
        side[best_vertex] = 1 - side[best_vertex]
        value += best_gain


def _anneal_then_descend(ids, adjacency, side, value, schedule, rng):
    best_side, best_value = dict(side), value
    current = dict(side)
    current_value = value
    temperature = schedule.initial_temperature * _MICRO
    for _ in range(schedule.steps):
        v = rng.choice(ids)
        gain = _flip_gain(v, current, adjacency)
        if gain >= 0 or rng.random() < math.exp(gain / temperature):
            current[v] = 1 - current[v]
            current_value += gain
            if current_value > best_value:
                best_side, best_value = dict(current), current_value
        temperature *= schedule.cooling
    # Descend from both the annealing endpoint and its best visited state;
    # the final answer must be single-flip locally optimal.
    end_side, end_value = _descend(ids, adjacency, current)
    peak_side, peak_value = _descend(ids, adjacency, best_side)
    if peak_value >= end_value:
        return peak_side, peak_value
    return end_side, end_value


# --- Gibbs distribution -------------------------------------------------------


def gibbs(
    graph: CoherenceGraph,
    beta: float,
    config: SolverConfig | None = None,
    priority: frozenset[str] | set[str] | None = None,
) -> GibbsResult:
    """Gibbs distribution over all unordered cuts, P ∝ exp(beta * coherence).

    Acceptance marginals are taken after orienting each cut: the accepted
    part is the one containing the lexicographically smallest priority id
    when a priority set is given, else the canonical orientation. With
    ``config.gibbs_top_k`` set, the distribution is truncated to the most
    probable cuts and renormalized.
    """
    config = config or SolverConfig()
    if beta < 0:
        raise InvalidParameterError(f"beta must be >= 0, got {beta}")
    _check_size(graph, config.exact_vertex_limit)
    prio = _check_priority(graph, priority)

    ids = _enumeration_ids(graph)
    n = len(ids)
    values = _cut_values_micro(graph, ids).astype(np.float64) / _MICRO

    if config.gibbs_top_k is not None and config.gibbs_top_k < len(values):
        order = np.argsort(-values, kind="stable")
        keep = np.sort(order[: config.gibbs_top_k])
    else:
        keep = np.arange(len(values))
    kept_values = values[keep]
    logits = beta * kept_values
    logits -= logits.max()
    probs = np.exp(logits)
    probs /= probs.sum()

    # Orientation anchor per mask: 0 means side 0 is accepted.
    if prio:
        anchor = min(prio)
        anchor_index = ids.index(anchor)
        if anchor_index == 0:
            orient = np.zeros(len(keep), dtype=np.uint32)
        else:
            orient = (keep.astype(np.uint32) >> (anchor_index - 1)) & 1
    else:
        orient = np.zeros(len(keep), dtype=np.uint32)

    marginals: dict[str, float] = {}
    masks = keep.astype(np.uint32)
    for k, vertex in enumerate(ids):
        if n == 1 or k == 0:
            bits = np.zeros(len(keep), dtype=np.uint32)
        else:
            bits = (masks >> (k - 1)) & 1
        marginals[vertex] = float(probs[bits == orient].sum())

    cut_probabilities = {
        _mask_to_bipartition(int(mask), ids, prio): float(p)
        for mask, p in zip(keep, probs)
    }
    return GibbsResult(
        beta=beta,
        cut_probabilities=cut_probabilities,
        acceptance_marginals=marginals,
    )
