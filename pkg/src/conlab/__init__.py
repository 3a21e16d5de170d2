"""conlab: a laboratory for consistency models over shared walls.

Histories record what each process did and observed; checkers decide
whether a model admits those observations; dependency graphs relax the
models; the simulator executes scripted scenarios under delivery
protocols matched to the models and measures what the relaxations buy.
"""

from .checkers import (
    Certificate,
    CheckerError,
    GRAPH_MODELS,
    InvalidHistoryError,
    ModelId,
    PER_PROCESS_MODELS,
    SearchBoundExceeded,
    Verdict,
    brute_force_search,
    check,
    fast_necessary_check,
    required_order,
)
from .depgraphs import (
    GraphError,
    InterDepGraph,
    IntraDepGraph,
    build_intra_graph,
    build_intra_graphs,
    chain_graph,
    chain_graphs,
    common_friends_related,
    d_reachable,
    validate_intra_graph,
)
from .history import (
    FRIEND_NAMESPACE,
    AppTag,
    FriendshipState,
    GroundSetError,
    History,
    HistoryError,
    LocalHistory,
    ObjectId,
    OpKind,
    Operation,
    Serialization,
    SerializationState,
    TagKind,
    Violation,
    derive_reads_from,
    enumerate_legal_serializations,
    format_time,
    friend_pair,
    is_legal_serialization,
    parse_time,
    project_pi_plus_w,
    validate_history,
)
from .orders import (
    InterOrderOptions,
    PartialOrder,
    causal_order,
    inter_causal_order,
    intra_causal_order,
    intra_program_order,
    intra_real_time_order,
    is_acyclic,
    program_order,
    real_time_order,
    self_order,
    transitive_closure,
)
from .sim import (
    DelayModel,
    Metrics,
    Protocol,
    RunResult,
    Scenario,
    SimulationError,
    VisibilityRecord,
    measure,
    nearest_dependencies,
    run,
    visibility_check,
)
from .social import ActionKind, WallAction, access_permitted, compile_script, wall_namespace

__version__ = "0.1.0"

__all__ = [
    "ActionKind",
    "AppTag",
    "Certificate",
    "CheckerError",
    "DelayModel",
    "FRIEND_NAMESPACE",
    "FriendshipState",
    "GRAPH_MODELS",
    "GraphError",
    "GroundSetError",
    "History",
    "HistoryError",
    "InterDepGraph",
    "InterOrderOptions",
    "IntraDepGraph",
    "InvalidHistoryError",
    "LocalHistory",
    "Metrics",
    "ModelId",
    "ObjectId",
    "OpKind",
    "Operation",
    "PER_PROCESS_MODELS",
    "PartialOrder",
    "Protocol",
    "RunResult",
    "Scenario",
    "SearchBoundExceeded",
    "Serialization",
    "SerializationState",
    "SimulationError",
    "TagKind",
    "Verdict",
    "Violation",
    "VisibilityRecord",
    "WallAction",
    "access_permitted",
    "brute_force_search",
    "build_intra_graph",
    "build_intra_graphs",
    "causal_order",
    "chain_graph",
    "chain_graphs",
    "check",
    "common_friends_related",
    "compile_script",
    "d_reachable",
    "derive_reads_from",
    "enumerate_legal_serializations",
    "fast_necessary_check",
    "format_time",
    "friend_pair",
    "inter_causal_order",
    "intra_causal_order",
    "intra_program_order",
    "intra_real_time_order",
    "is_acyclic",
    "is_legal_serialization",
    "measure",
    "nearest_dependencies",
    "parse_time",
    "program_order",
    "project_pi_plus_w",
    "real_time_order",
    "required_order",
    "run",
    "self_order",
    "transitive_closure",
    "validate_history",
    "validate_intra_graph",
    "visibility_check",
    "wall_namespace",
]
