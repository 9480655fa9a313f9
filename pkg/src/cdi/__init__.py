"""Coherence-driven inference on arguments.

Build weighted coherence graphs over propositions, maximize the coherence
objective (a weighted MAX-CUT) exactly or heuristically, aggregate noisy
graph ensembles by elementwise median, and report accepted/rejected
proposition sets with priority-based symmetry breaking and Gibbs-weighted
soft acceptance.
"""

__version__ = "0.1.0"

from .ensemble import (
    ConvergenceReport,
    GraphEnsemble,
    convergence_diagnostic,
    l1_distance,
    median_graph,
)
from .errors import CdiError
from .graph import (
    Bipartition,
    CoherenceGraph,
    DEFAULT_SCALE,
    Edge,
    Proposition,
    WeightScale,
    coherence,
    quantize,
    rating_to_weight,
    to_dot,
)
from .pipeline import (
    PromptJob,
    RatedEdgeList,
    build_prompt,
    compile_graph,
    extract_propositions,
    parse_edge_list,
    render_edge_list,
    sample_ensemble,
)
from .providers import (
    FixtureReplayProvider,
    HttpChatProvider,
    ProviderResponse,
    RecordingProvider,
)
from .solver import (
    AnnealSchedule,
    CutReport,
    GibbsResult,
    SolverConfig,
    enumerate_cuts,
    gibbs,
    solve_exact,
    solve_heuristic,
)

__all__ = [
    "AnnealSchedule",
    "Bipartition",
    "CdiError",
    "CoherenceGraph",
    "ConvergenceReport",
    "CutReport",
    "DEFAULT_SCALE",
    "Edge",
    "FixtureReplayProvider",
    "GibbsResult",
    "GraphEnsemble",
    "HttpChatProvider",
    "PromptJob",
    "Proposition",
    "ProviderResponse",
    "RatedEdgeList",
    "RecordingProvider",
    "SolverConfig",
    "WeightScale",
    "build_prompt",
    "coherence",
    "compile_graph",
    "convergence_diagnostic",
    "enumerate_cuts",
    "extract_propositions",
    "gibbs",
    "l1_distance",
    "median_graph",
    "parse_edge_list",
    "quantize",
    "rating_to_weight",
    "render_edge_list",
    "sample_ensemble",
    "solve_exact",
    "solve_heuristic",
    "to_dot",
]
