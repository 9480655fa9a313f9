"""Prompting, response parsing, and compilation of coherence graphs.

One prompt asks the model to rate the consistency of every substantively
related pair of propositions on a 0..10 scale and return a bracketed edge
list; issuing it N times over the same propositions yields an ensemble of
graphs whose median is the consensus. A second prompt (plumbing, not a
rated judgment) extracts labeled propositions from a raw transcript.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

from .ensemble import GraphEnsemble
from .errors import (
    InvalidParameterError,
    InvalidRatingError,
    PipelineFailureError,
    ResponseParseError,
    UnparseableResponseError,
    VocabularyError,
)
from .graph import CoherenceGraph, Proposition, rating_to_weight
from .providers import Provider, ProviderResponse

logger = logging.getLogger(__name__)

RATING_PROMPT = (
    "Imagine that you are a perfectly objective arbitrator with impeccable "
    "judgment and integrity. In response to a prompt of the form "
    "'buildCoherence: ' below followed by a list of labeled propositions, "
    "please do the following: First, determine which pairs of propositions "
    "are substantively related. Second, for each related pair of "
    "propositions, determine their logical relationship, assuming that at "
    "least one is true, whether or not either actually is. I want you to "
    "ignore the truth, falsity or basis in fact of either claim. Third, "
    "based on your determination just above, numerically rate the relative "
    "consistency of the two propositions. Do not pay attention to or "
    "comment on the truth or basis in fact of either proposition "
    "independent of the other. Your rating of relative consistency should "
    "be on a scale from 0 to 10, with a value of 0 for a pair of "
    "propositions that are not at all consistent and a value of 10 for a "
    "pair of propositions that are totally consistent. I cannot emphasize "
    "enough that for your rating, I want you to ignore the truth or basis "
    "in fact of either proposition, since anything that is not consistent "
    "with reality cannot be true. If you determine that propositions are "
    "unrelated despite previously determining otherwise, omit that pair. "
    "To be clear, a pair of false but consistent claims should also be "
    "rated a 10. Meanwhile, a pair of propositions of which one is true "
    "and the other is false, should be rated a 0. Finally, construct a "
    "NetworkX graph where propositions are vertices and edges correspond "
    "to substantively related pairs of propositions, with weights given by "
    "the consistency ratings just above. Only return the edge list with "
    "proposition labels for vertices. i.e., return responses in this "
    "format (here 'p2', 'p3', 'p4', and 'p5' are labels): "
    "[('p2', 'p3', 0), ('p2', 'p5', 10), ('p3', 'p4', 9), ('p3', 'p5', 2)]. "
    "Order vertices (in edges) and edges (in the graph) lexicographically."
)

EXTRACTION_PROMPT = (
    "You are an analyst distilling an argument into its essential claims. "
    "Read the transcript below and produce a labeled list of the most "
    "important substantive propositions it contains. Each proposition must "
    "be a single self-contained declarative sentence; replace every pronoun "
    "with its antecedent so that no sentence depends on another for its "
    "meaning. Do not editorialize and do not add claims that are absent "
    "from the transcript.{hint} Return only the list, one proposition per "
    "line, exactly in this format:\n"
    "- p1: <first proposition>\n"
    "- p2: <second proposition>\n"
    "\n"
    "Transcript:\n"
    "{transcript}"
)

FixtureMode = Literal["off", "record", "replay"]


@dataclass(frozen=True)
class RatedEdgeList:
    """Parsed model output: lexicographically normalized (u, v, rating) triples."""

    triples: tuple[tuple[str, str, int], ...]
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class PromptJob:
    propositions: tuple[Proposition, ...]
    samples: int = 30
    model: str = "o1-mini"
    max_retries: int = 2
    fixture_mode: FixtureMode = "off"
    parallelism: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise InvalidParameterError("samples must be >= 1")
        if self.max_retries < 0:
            raise InvalidParameterError("max_retries must be >= 0")
        if self.parallelism < 1:
            raise InvalidParameterError("parallelism must be >= 1")


@dataclass(frozen=True)
class SampleFailure:
    index: int
    attempts: tuple[str, ...]


@dataclass(frozen=True)
class EnsembleRun:
    """A compiled ensemble plus the raw responses and drop diagnostics."""

    ensemble: GraphEnsemble
    responses: tuple[ProviderResponse, ...]
    dropped: tuple[SampleFailure, ...] = ()


def build_prompt(propositions: Sequence[Proposition]) -> str:
    """The rating prompt followed by the labeled proposition list."""
    if len(propositions) < 2:
        raise InvalidParameterError(
            "need at least 2 propositions to rate pairwise consistency"
        )
    lines = "\n".join(f"- {p.id}: {p.text}" for p in propositions)
    return f"{RATING_PROMPT}\n\nbuildCoherence:\n{lines}"


# --- response parsing ----------------------------------------------------------


def _find_edge_list_block(raw_text: str) -> tuple[str, int]:
    """Locate the first bracketed tuple-list, tolerating prose and fences.

    Returns (block text including brackets, byte offset of '['). Bracketed
    spans with no parenthesized tuple inside (e.g. "[sic]") are skipped
    unless they are an empty list.
    """
    pos = 0
    while True:
        start = raw_text.find("[", pos)
        if start == -1:
            raise UnparseableResponseError(
                "no bracketed edge list found in response", raw_text=raw_text
            )
        end = raw_text.find("]", start + 1)
        if end == -1:
            raise UnparseableResponseError(
                "unclosed bracket in response", raw_text=raw_text
            )
        block = raw_text[start : end + 1]
        inner = block[1:-1].strip()
        if inner == "" or "(" in inner:
            return block, start
        pos = end + 1


def _split_tuples(inner: str, base: int) -> list[tuple[str, int]]:
    """Top-level parenthesized groups with absolute offsets."""
    groups = []
    depth = 0
    start = None
    for i, ch in enumerate(inner):
        if ch == "(":
            if depth == 0:
                start = i
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ResponseParseError("unbalanced parenthesis", offset=base + i)
            if depth == 0:
                groups.append((inner[start : i + 1], base + start))
                start = None
        elif depth == 0 and ch not in " \t\r\n,":
            raise ResponseParseError(
                f"unexpected character {ch!r} between tuples", offset=base + i
            )
    if depth != 0:
        raise ResponseParseError("unclosed tuple", offset=base + (start or 0))
    return groups


_TUPLE_RE = re.compile(
    r"""\(\s*
        (?P<q1>['"])(?P<u>[^'"]*)(?P=q1)\s*,\s*
        (?P<q2>['"])(?P<v>[^'"]*)(?P=q2)\s*,\s*
        (?P<rating>-?\d+)\s*
        ,?\s*\)""",
    re.VERBOSE,
)


def _parse_tuple(text: str, offset: int) -> tuple[str, str, int]:
    match = _TUPLE_RE.fullmatch(text)
    if not match:
        raise ResponseParseError(f"malformed tuple {text!r}", offset=offset)
    return match.group("u"), match.group("v"), int(match.group("rating"))


def parse_edge_list(
    raw_text: str, propositions: Sequence[Proposition]
) -> RatedEdgeList:
    """Parse the first bracketed (label, label, rating) list in a response.

    Pairs are normalized to lexicographic order; a duplicated pair keeps its
    first occurrence and records a warning. Labels must come from the
    proposition set and ratings must be integers in 0..10.
    """
    vocabulary = {p.id for p in propositions}
    block, base = _find_edge_list_block(raw_text)
    groups = _split_tuples(block[1:-1], base + 1)

    triples: list[tuple[str, str, int]] = []
    seen: dict[tuple[str, str], int] = {}
    warnings: list[str] = []
    for text, offset in groups:
        u, v, rating = _parse_tuple(text, offset)
        if u == v:
            raise ResponseParseError(f"self-pair on label {u!r}", offset=offset)
        for label in (u, v):
            if label not in vocabulary:
                raise VocabularyError(label)
        if not 0 <= rating <= 10:
            raise InvalidRatingError(
                f"rating {rating} outside 0..10 for pair ({u}, {v})"
            )
        pair = (u, v) if u <= v else (v, u)
        if pair in seen:
            warnings.append(
                f"duplicate pair {pair} at byte offset {offset}; "
                f"keeping first rating {seen[pair]}"
            )
            continue
        seen[pair] = rating
        triples.append((pair[0], pair[1], rating))
    for message in warnings:
        logger.warning(message)
    return RatedEdgeList(triples=tuple(triples), warnings=tuple(warnings))


def render_edge_list(edge_list: RatedEdgeList) -> str:
    """Render triples in the same wire format the rating prompt requests."""
    body = ", ".join(f"('{u}', '{v}', {r})" for u, v, r in edge_list.triples)
    return f"[{body}]"


def compile_graph(
    edge_list: RatedEdgeList, propositions: Sequence[Proposition]
) -> CoherenceGraph:
    """Turn rated pairs into a graph over the full proposition set.

    Every proposition appears as a vertex, including isolated ones; each
    rating maps linearly onto [-1, 1].
    """
    edges = [(u, v, rating_to_weight(r)) for u, v, r in edge_list.triples]
    return CoherenceGraph(tuple(propositions), edges)


# --- sampling ------------------------------------------------------------------


def sample_ensemble(job: PromptJob, provider: Provider) -> EnsembleRun:
    """Issue the identical rating prompt N times and compile each response.

    A sample that keeps failing after ``max_retries`` extra attempts is
    dropped with a diagnostic; if every sample fails the whole job raises.
    Replay-mode runs should keep ``parallelism`` at 1 so fixtures are
    consumed in recorded order.
    """
    prompt = build_prompt(job.propositions)
    logger.debug("rating prompt:\n%s", prompt)

    def one_sample(index: int):
        attempts: list[str] = []
        for _ in range(1 + job.max_retries):
            try:
                response = provider.complete(prompt, job.model)
                edge_list = parse_edge_list(response.raw_text, job.propositions)
                graph = compile_graph(edge_list, job.propositions)
                return index, graph, response, attempts
            except Exception as exc:
                attempts.append(f"sample {index}: {type(exc).__name__}: {exc}")
        return index, None, None, attempts

    if job.parallelism > 1:
        with ThreadPoolExecutor(max_workers=job.parallelism) as pool:
            outcomes = list(pool.map(one_sample, range(job.samples)))
    else:
        outcomes = [one_sample(i) for i in range(job.samples)]

    graphs: list[CoherenceGraph] = []
    responses: list[ProviderResponse] = []
    dropped: list[SampleFailure] = []
    for index, graph, response, attempts in outcomes:
        if graph is None:
            dropped.append(SampleFailure(index=index, attempts=tuple(attempts)))
            logger.warning("dropped sample %d: %s", index, "; ".join(attempts))
        else:
            graphs.append(graph)
            responses.append(response)
    if not graphs:
        raise PipelineFailureError(
            f"all {job.samples} samples failed",
            diagnostics=[a for f in dropped for a in f.attempts],
        )
    ensemble = GraphEnsemble(
        propositions=tuple(job.propositions), samples=tuple(graphs)
    )
    return EnsembleRun(
        ensemble=ensemble, responses=tuple(responses), dropped=tuple(dropped)
    )


# --- proposition extraction (plumbing) ------------------------------------------

_PROPOSITION_LINE = re.compile(r"^\s*[-*]\s*([^:]+?)\s*:\s*(\S.*?)\s*$")
_LABEL_TRIM = "*`$_ \t"


def build_extraction_prompt(
    transcript_text: str, target_count_hint: int | None = None
) -> str:
    hint = (
        f" Aim for roughly {target_count_hint} propositions."
        if target_count_hint
        else ""
    )
    return EXTRACTION_PROMPT.format(hint=hint, transcript=transcript_text)


def extract_propositions(
    transcript_text: str,
    provider: Provider,
    target_count_hint: int | None = None,
    model: str = "gpt-4o",
) -> list[Proposition]:
    """Ask the model for labeled propositions and parse the response.

    When the model's labels collide, are missing, or would not survive the
    edge-list wire format, all ids are reassigned sequentially (p1..pk) with
    order preserved.
    """
    if not transcript_text.strip():
        raise InvalidParameterError("transcript is empty")
    prompt = build_extraction_prompt(transcript_text, target_count_hint)
    logger.debug("extraction prompt:\n%s", prompt)
    response = provider.complete(prompt, model)

    parsed: list[tuple[str, str]] = []
    for line in response.raw_text.splitlines():
        match = _PROPOSITION_LINE.match(line)
        if match:
            label = match.group(1).strip(_LABEL_TRIM)
            parsed.append((label, match.group(2)))
    if not parsed:
        raise UnparseableResponseError(
            "no '- <id>: <text>' lines in extraction response",
            raw_text=response.raw_text,
        )

    labels = [label for label, _ in parsed]
    usable = all(_is_valid_label(label) for label in labels)
    if not usable or len(set(labels)) != len(labels):
        labels = [f"p{i}" for i in range(1, len(parsed) + 1)]
    return [
        Proposition(id=label, text=text)
        for label, (_, text) in zip(labels, parsed)
    ]


def _is_valid_label(label: str) -> bool:
    if not label:
        return False
    return not re.search(r"[\s,'\"()]", label)
