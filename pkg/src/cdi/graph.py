"""Coherence graphs over propositions and the cut objective.

A coherence graph holds propositions as vertices and undirected edges whose
weights in [-1, 1] encode how consistent two related propositions are
(positive) or how inconsistent (negative). Unrelated pairs simply have no
edge, which every operation treats as weight 0. The coherence of a
bipartition {accepted, rejected} is the negated sum of the weights of edges
crossing the cut, so maximizing coherence is a weighted MAX-CUT.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    InvalidPartitionError,
    InvalidRatingError,
    SchemaError,
)

_ID_FORBIDDEN = re.compile(r"[\s,'\"()]")

RATING_MAX = 10


@dataclass(frozen=True)
class Proposition:
    """A labeled proposition; ``privileged`` marks externally established facts.

    Ids must survive the edge-list wire format, so they may not contain
    whitespace, commas, quotes, or parentheses.
    """

    id: str
    text: str = ""
    privileged: bool = False

    def __post_init__(self):
        if not self.id:
            raise SchemaError("proposition id must be nonempty", field="id")
        if _ID_FORBIDDEN.search(self.id):
            raise SchemaError(
                f"proposition id {self.id!r} contains whitespace, commas, "
                "quotes, or parentheses",
                field="id",
            )


@dataclass(frozen=True, eq=False)
class Bipartition:
    """An unordered split of the vertex set into accepted and rejected parts.

    Two bipartitions compare equal whenever they induce the same unordered
    partition, regardless of which part is labeled accepted. The canonical
    orientation puts the part containing the lexicographically smallest
    vertex id into ``accepted`` unless a priority set fixes the orientation.
    """

    accepted: frozenset[str]
    rejected: frozenset[str]

    def __post_init__(self):
        overlap = self.accepted & self.rejected
        if overlap:
            raise InvalidPartitionError(
                f"accepted and rejected overlap: {sorted(overlap)}"
            )

    @classmethod
    def of(
        cls,
        accepted: Iterable[str],
        vertices: Iterable[str],
        priority: Iterable[str] | None = None,
    ) -> "Bipartition":
        """Build a bipartition from an accepted set over ``vertices``.

        The orientation is canonicalized: if ``priority`` ids all lie in one
        part, that part becomes accepted; otherwise the part containing the
        lexicographically smallest vertex id does.
        """
        universe = frozenset(vertices)
        acc = frozenset(accepted)
        unknown = acc - universe
        if unknown:
            raise InvalidPartitionError(
                f"unknown vertex ids in partition: {sorted(unknown)}"
            )
        rej = universe - acc
        return cls._orient(acc, rej, priority)

    @classmethod
    def _orient(
        cls,
        part_a: frozenset[str],
        part_b: frozenset[str],
        priority: Iterable[str] | None = None,
    ) -> "Bipartition":
        prio = frozenset(priority or ())
        if prio:
            # Anchor on the lexicographically smallest priority id; when the
            # priority ids share a side this is exactly that side.
            anchor = min(prio)
            if anchor in part_a:
                return cls(accepted=part_a, rejected=part_b)
            if anchor in part_b:
                return cls(accepted=part_b, rejected=part_a)
        if not part_a and not part_b:
            return cls(accepted=part_a, rejected=part_b)
        smallest = min(part_a | part_b)
        if smallest in part_a:
            return cls(accepted=part_a, rejected=part_b)
        return cls(accepted=part_b, rejected=part_a)

    @property
    def vertices(self) -> frozenset[str]:
        return self.accepted | self.rejected

    def swapped(self) -> "Bipartition":
        return Bipartition(accepted=self.rejected, rejected=self.accepted)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Bipartition):
            return NotImplemented
        return {self.accepted, self.rejected} == {other.accepted, other.rejected}

    def __hash__(self) -> int:
        return hash(frozenset((self.accepted, self.rejected)))

    def __repr__(self) -> str:
        return (
            f"Bipartition(accepted={sorted(self.accepted)}, "
            f"rejected={sorted(self.rejected)})"
        )


@dataclass(frozen=True)
class WeightScale:
    """Quantization codomain for edge weights plus the rating ceiling."""

    levels: tuple[float, ...] = (-1.0, -0.5, 0.0, 0.5, 1.0)
    rating_max: int = RATING_MAX

    def __post_init__(self):
        levels = self.levels
        if list(levels) != sorted(levels):
            raise SchemaError("levels must be sorted", field="levels")
        if any(abs(v) > 1 for v in levels):
            raise SchemaError("levels must lie in [-1, 1]", field="levels")
        if sorted(-v for v in levels) != sorted(levels):
            raise SchemaError("levels must be symmetric about 0", field="levels")


DEFAULT_SCALE = WeightScale()


@dataclass(frozen=True)
class Edge:
    """An undirected edge, normalized so that u < v."""

    u: str
    v: str
    weight: float

    def __post_init__(self):
        if self.u == self.v:
            raise SchemaError(f"self-loop on {self.u!r}", field="edges")
        if self.u > self.v:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)
        if not -1.0 <= self.weight <= 1.0:
            raise SchemaError(
                f"weight {self.weight} outside [-1, 1] on ({self.u}, {self.v})",
                field="weight",
            )

    @property
    def pair(self) -> tuple[str, str]:
        return (self.u, self.v)


class CoherenceGraph:
    """Immutable weighted graph over a fixed ordered proposition list."""

    __slots__ = ("_propositions", "_edges", "_weights", "_by_id")

    def __init__(
        self,
        propositions: Sequence[Proposition],
        edges: Iterable[tuple[str, str, float] | Edge] = (),
    ):
        props = tuple(propositions)
        by_id: dict[str, Proposition] = {}
        for p in props:
            if p.id in by_id:
                raise SchemaError(f"duplicate proposition id {p.id!r}", field="id")
            by_id[p.id] = p

        weights: dict[tuple[str, str], float] = {}
        normalized: list[Edge] = []
        for e in edges:
            if not isinstance(e, Edge):
                u, v, w = e
                u, v = (u, v) if u <= v else (v, u)
                e = Edge(u, v, float(w))
            for endpoint in e.pair:
                if endpoint not in by_id:
                    raise SchemaError(
                        f"edge endpoint {endpoint!r} is not a declared proposition",
                        field="edges",
                    )
            if e.pair in weights:
                raise SchemaError(
                    f"duplicate edge ({e.u}, {e.v})", field="edges"
                )
            weights[e.pair] = e.weight
            normalized.append(e)

        self._propositions = props
        self._edges = tuple(sorted(normalized, key=lambda e: e.pair))
        self._weights = weights
        self._by_id = by_id

    @property
    def propositions(self) -> tuple[Proposition, ...]:
        return self._propositions

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    @property
    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self._propositions)

    @property
    def privileged_ids(self) -> frozenset[str]:
        return frozenset(p.id for p in self._propositions if p.privileged)

    def proposition(self, vertex_id: str) -> Proposition:
        return self._by_id[vertex_id]

    def __contains__(self, vertex_id: str) -> bool:
        return vertex_id in self._by_id

    def __len__(self) -> int:
        return len(self._propositions)

    def weight(self, u: str, v: str) -> float:
        """Weight of the (u, v) edge, 0.0 when the pair is unrelated."""
        key = (u, v) if u <= v else (v, u)
        return self._weights.get(key, 0.0)

    def bipartition(
        self, accepted: Iterable[str], priority: Iterable[str] | None = None
    ) -> Bipartition:
        return Bipartition.of(accepted, self.vertex_ids, priority=priority)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoherenceGraph):
            return NotImplemented
        return (
            self._propositions == other._propositions
            and self._edges == other._edges
        )

    def __hash__(self) -> int:
        return hash((self._propositions, self._edges))

    def __repr__(self) -> str:
        return f"CoherenceGraph({len(self)} vertices, {len(self._edges)} edges)"


def coherence(graph: CoherenceGraph, cut: Bipartition) -> float:
    """Negated sum of weights of edges with exactly one endpoint accepted.

    Symmetric under swapping the two parts; 0 when no edge crosses.
    """
    unknown = cut.vertices - set(graph.vertex_ids)
    if unknown:
        raise InvalidPartitionError(
            f"partition references unknown vertices: {sorted(unknown)}"
        )
    accepted = cut.accepted
    total = 0.0
    for edge in graph.edges:
        if (edge.u in accepted) != (edge.v in accepted):
            total += edge.weight
    return -total


def rating_to_weight(rating: int) -> float:
    """Map a 0..10 consistency rating linearly onto [-1, 1]."""
    if isinstance(rating, bool) or not isinstance(rating, int):
        raise InvalidRatingError(f"rating must be an integer, got {rating!r}")
    if not 0 <= rating <= RATING_MAX:
        raise InvalidRatingError(f"rating {rating} outside 0..{RATING_MAX}")
    return (rating - 5) / 5


def quantize(graph: CoherenceGraph, scale: WeightScale = DEFAULT_SCALE) -> CoherenceGraph:
    """Snap every weight to the nearest scale level, dropping exact zeros.

    Ties between two levels round away from zero, preserving the judgment
    that a relation exists.
    """
    edges = []
    for e in graph.edges:
        level = _nearest_level(e.weight, scale.levels)
        if level != 0.0:
            edges.append(Edge(e.u, e.v, level))
    return CoherenceGraph(graph.propositions, edges)


def _nearest_level(weight: float, levels: tuple[float, ...]) -> float:
    best = None
    best_key = None
    for level in levels:
        dist = abs(weight - level)
        # Tie-break away from zero: among near-equal distances prefer the
        # level with the larger magnitude.
        key = (round(dist, 12), -abs(level))
        if best_key is None or key < best_key:
            best, best_key = level, key
    assert best is not None
    return best


# --- JSON serialization ------------------------------------------------------


def to_json_dict(graph: CoherenceGraph) -> dict:
    """Plain-dict form of the graph, stable field order for byte-stable dumps."""
    return {
        "propositions": [
            {"id": p.id, "text": p.text, "privileged": p.privileged}
            for p in graph.propositions
        ],
        "edges": [
            {"u": e.u, "v": e.v, "weight": e.weight} for e in graph.edges
        ],
    }


def from_json_dict(doc: Mapping) -> CoherenceGraph:
    """Parse and validate the graph schema, naming the offending field on error."""
    if not isinstance(doc, Mapping):
        raise SchemaError("document must be an object", field="$")
    props_raw = doc.get("propositions")
    if not isinstance(props_raw, list):
        raise SchemaError("must be a list", field="propositions")
    propositions = []
    for i, item in enumerate(props_raw):
        where = f"propositions[{i}]"
        if not isinstance(item, Mapping):
            raise SchemaError("must be an object", field=where)
        pid = item.get("id")
        if not isinstance(pid, str):
            raise SchemaError("missing or non-string id", field=f"{where}.id")
        text = item.get("text", "")
        if not isinstance(text, str):
            raise SchemaError("must be a string", field=f"{where}.text")
        privileged = item.get("privileged", False)
        if not isinstance(privileged, bool):
            raise SchemaError("must be a boolean", field=f"{where}.privileged")
        propositions.append(Proposition(id=pid, text=text, privileged=privileged))

    edges_raw = doc.get("edges", [])
    if not isinstance(edges_raw, list):
        raise SchemaError("must be a list", field="edges")
    edges = []
    for i, item in enumerate(edges_raw):
        where = f"edges[{i}]"
        if not isinstance(item, Mapping):
            raise SchemaError("must be an object", field=where)
        u, v, w = item.get("u"), item.get("v"), item.get("weight")
        if not isinstance(u, str):
            raise SchemaError("missing or non-string u", field=f"{where}.u")
        if not isinstance(v, str):
            raise SchemaError("missing or non-string v", field=f"{where}.v")
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise SchemaError("missing or non-numeric weight", field=f"{where}.weight")
        if not -1.0 <= float(w) <= 1.0:
            raise SchemaError(
                f"weight {w} outside [-1, 1]", field=f"{where}.weight"
            )
        edges.append((u, v, float(w)))
    return CoherenceGraph(propositions, edges)


def dumps(graph: CoherenceGraph) -> str:
    return json.dumps(to_json_dict(graph), indent=2) + "\n"


def loads(text: str) -> CoherenceGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}", field="$") from exc
    return from_json_dict(doc)


# --- DOT export ---------------------------------------------------------------


def to_dot(graph: CoherenceGraph, cut: Bipartition | None = None) -> str:
    """Render the graph as deterministic Graphviz DOT text.

    Positive edges are solid and blue-leaning, negative edges dashed and
    red-leaning, with opacity tracking weight magnitude. When ``cut`` is
    given, accepted vertices are shaded and crossing edges drawn thicker.
    """
    if cut is not None:
        unknown = cut.vertices - set(graph.vertex_ids)
        if unknown:
            raise InvalidPartitionError(
                f"cut references unknown vertices: {sorted(unknown)}"
            )
    lines = ["graph coherence {"]
    lines.append('  node [shape=circle, style=filled, fillcolor="white"];')
    for p in graph.propositions:
        attrs = ""
        if cut is not None and p.id in cut.accepted:
            attrs = ' [fillcolor="#dce9f7"]'
        lines.append(f'  "{p.id}"{attrs};')
    for e in graph.edges:
        style = "solid" if e.weight > 0 else "dashed"
        color = _weight_color(e.weight)
        attrs = [f'color="{color}"', f"style={style}", f'label="{e.weight:g}"']
        if cut is not None and (e.u in cut.accepted) != (e.v in cut.accepted):
            attrs.append("penwidth=3")
        lines.append(f'  "{e.u}" -- "{e.v}" [{", ".join(attrs)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _weight_color(weight: float) -> str:
    # Blend from red (-1) through neutral purple (0) to blue (+1), with
    # alpha proportional to magnitude.
    red = round(255 * (1 - weight) / 2)
    blue = round(255 * (1 + weight) / 2)
    alpha = round(255 * abs(weight))
    return f"#{red:02x}00{blue:02x}{alpha:02x}"
