"""Command-line workflow: extract, compile, solve, diagnose, render.

Each run that produces multiple artifacts writes a manifest first, so a run
directory is always auditable. Exit codes: 0 success, 1 usage/validation,
2 parse/data, 3 provider/network.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .ensemble import GraphEnsemble, convergence_diagnostic, median_graph
from .errors import (
    CdiError,
    InsufficientSamplesError,
    InvalidParameterError,
    InvalidRatingError,
    PipelineFailureError,
    ProviderError,
    ResponseParseError,
    SchemaError,
    UnknownVertexError,
    UnparseableResponseError,
    VocabularyError,
)
from .graph import (
    CoherenceGraph,
    dumps as graph_dumps,
    loads as graph_loads,
    quantize,
    to_dot,
)
from .pipeline import PromptJob, extract_propositions, sample_ensemble
from .providers import (
    FixtureReplayProvider,
    HttpChatProvider,
    Provider,
    RecordingProvider,
)
from .solver import AnnealSchedule, SolverConfig, gibbs, solve_exact, solve_heuristic

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3

_DATA_ERRORS = (
    SchemaError,
    ResponseParseError,
    UnparseableResponseError,
    VocabularyError,
    InvalidRatingError,
)
_PROVIDER_ERRORS = (ProviderError, PipelineFailureError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_json(path: Path, doc) -> None:
    _write_text(path, json.dumps(doc, indent=2) + "\n")


def _write_json_atomic(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InvalidParameterError(f"file not found: {path}")
    return p


def _read_graph(path: str) -> CoherenceGraph:
    return graph_loads(_require_file(path).read_text(encoding="utf-8"))


def _read_propositions(path: str):
    graph = _read_graph(path)
    return graph.propositions


def _make_provider(args) -> Provider:
    mode = args.fixtures
    if mode == "replay":
        if not args.fixture_dir:
            raise InvalidParameterError("--fixtures replay requires --fixture-dir")
        return FixtureReplayProvider(args.fixture_dir)
    live = HttpChatProvider(base_url=args.base_url)
    if mode == "record":
        if not args.fixture_dir:
            raise InvalidParameterError("--fixtures record requires --fixture-dir")
        return RecordingProvider(live, args.fixture_dir)
    return live


def _parse_id_list(raw: str | None) -> list[str]:
    if not raw:
        return []
    return [part.strip() for part in raw.split(",") if part.strip()]


# --- subcommands ---------------------------------------------------------------


def cmd_extract(args) -> int:
    transcript = _require_file(args.transcript).read_text(encoding="utf-8")
    provider = _make_provider(args)
    propositions = extract_propositions(
        transcript, provider, target_count_hint=args.hint, model=args.model
    )
    privileged = set(_parse_id_list(args.privileged))
    known = {p.id for p in propositions}
    unknown = privileged - known
    if unknown:
        raise UnknownVertexError(
            f"--privileged ids not among extracted propositions: {sorted(unknown)}"
        )
    doc = {
        "propositions": [
            {"id": p.id, "text": p.text, "privileged": p.id in privileged}
            for p in propositions
        ]
    }
    if args.output:
        _write_json(Path(args.output), doc)
    else:
        print(json.dumps(doc, indent=2))
    print(f"extracted {len(propositions)} propositions", file=sys.stderr)
    return EXIT_OK


def cmd_compile(args) -> int:
    propositions = _read_propositions(args.propositions)
    if args.samples < 1:
        raise InvalidParameterError("--samples must be >= 1")
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    job = PromptJob(
        propositions=tuple(propositions),
        samples=args.samples,
        model=args.model,
        max_retries=args.max_retries,
        fixture_mode=args.fixtures,
        parallelism=args.parallelism,
    )
    manifest = {
        "tool_version": __version__,
        "created_at": _utc_now(),
        "command": "compile",
        "inputs": {"propositions": str(args.propositions)},
        "model": args.model,
        "samples": args.samples,
        "seed": args.seed,
        "fixture_mode": args.fixtures,
        "fixture_dir": args.fixture_dir,
        "output_dir": str(out_dir),
        "config": {"max_retries": args.max_retries, "parallelism": args.parallelism},
    }
    _write_json_atomic(out_dir / "manifest.json", manifest)

    provider = _make_provider(args)
    run = sample_ensemble(job, provider)
    for i, (graph, response) in enumerate(zip(run.ensemble.samples, run.responses)):
        _write_text(out_dir / "samples" / f"sample-{i:04d}.json", graph_dumps(graph))
        _write_text(
            out_dir / "responses" / f"response-{i:04d}.txt", response.raw_text
        )
    if run.dropped:
        _write_json(
            out_dir / "diagnostics.json",
            [
                {"sample": f.index, "attempts": list(f.attempts)}
                for f in run.dropped
            ],
        )
    median = median_graph(run.ensemble)
    _write_text(out_dir / "median_graph.json", graph_dumps(median))
    print(
        f"compiled {len(run.ensemble.samples)} of {args.samples} samples "
        f"({len(run.dropped)} dropped); median graph has "
        f"{len(median.edges)} edges",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    graph = _read_graph(args.graph)
    if args.quantize:
        graph = quantize(graph)
    priority = set(_parse_id_list(args.priority)) or None

    config = SolverConfig(
        exact_vertex_limit=args.limit,
        restarts=args.restarts,
        rng_seed=args.seed,
        anneal_schedule=AnnealSchedule() if args.anneal else None,
    )
    if args.heuristic:
        if priority:
            raise InvalidParameterError("--priority requires --exact solving")
        report = solve_heuristic(graph, config)
    else:
        report = solve_exact(graph, config, priority=priority)

    if args.output:
        _write_json(Path(args.output), report.to_json_dict())

    mode = "exact optimum" if report.exact else "heuristic (not proven optimal)"
    print(f"coherence {report.value:g} [{mode}]")
    print(f"accepted ({len(report.cut.accepted)}): "
          + ", ".join(sorted(report.cut.accepted)))
    print(f"rejected ({len(report.cut.rejected)}): "
          + ", ".join(sorted(report.cut.rejected)))
    if report.exact:
        print(f"optimal cuts: {len(report.ties)}")

    if args.gibbs is not None:
        result = gibbs(graph, args.gibbs, config, priority=priority)
        gibbs_path = (
            Path(args.gibbs_output)
            if args.gibbs_output
            else (Path(args.output).with_suffix(".gibbs.json") if args.output else None)
        )
        if gibbs_path:
            _write_json(gibbs_path, result.to_json_dict())
        print(f"acceptance marginals at beta={args.gibbs:g}:")
        for vertex in sorted(result.acceptance_marginals):
            print(f"  {vertex}: {result.acceptance_marginals[vertex]:.4f}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    sample_dir = Path(args.ensemble_dir)
    if not sample_dir.is_dir():
        raise InvalidParameterError(f"not a directory: {args.ensemble_dir}")
    if (sample_dir / "samples").is_dir():
        sample_dir = sample_dir / "samples"
    paths = sorted(sample_dir.glob("*.json"))
    samples = [graph_loads(p.read_text(encoding="utf-8")) for p in paths]
    if len(samples) < 3:
        raise InsufficientSamplesError(
            f"need at least 3 sample graphs, found {len(samples)} in {sample_dir}"
        )
    ensemble = GraphEnsemble(
        propositions=samples[0].propositions, samples=tuple(samples)
    )
    report = convergence_diagnostic(
        ensemble, subsample_cap=args.cap, rng_seed=args.seed
    )
    out_base = Path(args.output)
    _write_json(out_base.with_suffix(".json"), report.to_json_dict())
    csv_path = out_base.with_suffix(".csv")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "distance"])
        writer.writerows(report.to_csv_rows())
    print(
        f"diagnosed N={report.N}; wrote {out_base.with_suffix('.json').name} "
        f"and {csv_path.name}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_render(args) -> int:
    graph = _read_graph(args.graph)
    cut = None
    if args.cut_from:
        doc = json.loads(_require_file(args.cut_from).read_text(encoding="utf-8"))
        accepted = doc.get("accepted")
        if not isinstance(accepted, list):
            raise SchemaError("must be a list of ids", field="accepted")
        cut = graph.bipartition(accepted)
    dot = to_dot(graph, cut)
    if args.output:
        _write_text(Path(args.output), dot)
    else:
        print(dot, end="")
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def _add_provider_flags(parser) -> None:
    parser.add_argument("--model", default="o1-mini", help="model identifier")
    parser.add_argument(
        "--fixtures",
        choices=["off", "record", "replay"],
        default="off",
        help="fixture mode: replay runs fully offline",
    )
    parser.add_argument("--fixture-dir", help="directory of recorded responses")
    parser.add_argument(
        "--base-url",
        default=None,
        help="chat-completions base URL (or set CDI_BASE_URL)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdi", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging (prompts, responses)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract propositions from a transcript")
    p.add_argument("transcript")
    p.add_argument("-o", "--output", help="propositions JSON path (default stdout)")
    p.add_argument("--hint", type=int, default=None, help="target proposition count")
    p.add_argument(
        "--privileged", help="comma-separated ids to mark as externally established"
    )
    _add_provider_flags(p)
    p.set_defaults(func=cmd_extract, model="gpt-4o")

    p = sub.add_parser("compile", help="sample N coherence graphs and take the median")
    p.add_argument("propositions")
    p.add_argument("-o", "--output", required=True, help="run directory")
    p.add_argument("--samples", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--parallelism", type=int, default=1)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("solve", help="maximize coherence over bipartitions")
    p.add_argument("graph")
    p.add_argument("-o", "--output", help="cut report JSON path")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exhaustive (default)")
    mode.add_argument("--heuristic", action="store_true")
    p.add_argument("--priority", help="comma-separated ids pinned to accepted")
    p.add_argument("--gibbs", type=float, default=None, metavar="BETA")
    p.add_argument("--gibbs-output", help="Gibbs result JSON path")
    p.add_argument("--quantize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--anneal", action="store_true")
    p.add_argument("--limit", type=int, default=24, help="exact enumeration limit")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("diagnose", help="subsample convergence of the ensemble median")
    p.add_argument("ensemble_dir")
    p.add_argument("-o", "--output", required=True, help="report path base (.json/.csv)")
    p.add_argument("--cap", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("render", help="export a graph (optionally with a cut) as DOT")
    p.add_argument("graph")
    p.add_argument("-o", "--output", help="DOT path (default stdout)")
    p.add_argument("--cut-from", help="cut report JSON to annotate")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"cdi: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _PROVIDER_ERRORS as exc:
        print(f"cdi: provider error: {exc}", file=sys.stderr)
        if isinstance(exc, PipelineFailureError):
            for line in exc.diagnostics:
                print(f"  {line}", file=sys.stderr)
        return EXIT_PROVIDER
    except CdiError as exc:
        print(f"cdi: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cdi: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
