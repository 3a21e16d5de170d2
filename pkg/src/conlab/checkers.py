"""Consistency checkers.

Every model reduces to the same question: does each relevant ground set
admit a legal serialization respecting the model's required order?  The
per-process models ask it once per process over that process's
operations plus all writes; the shared-order models ask it once over
the whole history.  A cheap necessary check runs first and can produce
a certificate (an order cycle, or a write that some read provably
missed); only then does the exhaustive search run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .depgraphs import InterDepGraph, IntraDepGraph
from .history import (
    History,
    OpId,
    Operation,
    ProcessId,
    Serialization,
    SerializationState,
    TagKind,
    friend_pair,
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
    program_order,
    real_time_order,
    self_order,
)


class ModelId(str, Enum):
    EVENTUAL = "Eventual"
    PRAM = "PRAM"
    INTRA_PRAM = "IntraPRAM"
    CAUSAL = "Causal"
    INTRA_CAUSAL = "IntraCausal"
    INTER_CAUSAL = "InterCausal"
    SEQUENTIAL = "Sequential"
    INTRA_SEQUENTIAL = "IntraSequential"
    LINEARIZABLE = "Linearizable"
    INTRA_LINEARIZABLE = "IntraLinearizable"


# Models judged per process versus over one shared order.
PER_PROCESS_MODELS = frozenset(
    {
        ModelId.EVENTUAL,
        ModelId.PRAM,
        ModelId.INTRA_PRAM,
        ModelId.CAUSAL,
        ModelId.INTRA_CAUSAL,
        ModelId.INTER_CAUSAL,
    }
)

GRAPH_MODELS = frozenset(
    {
        ModelId.INTRA_PRAM,
        ModelId.INTRA_CAUSAL,
        ModelId.INTRA_SEQUENTIAL,
        ModelId.INTRA_LINEARIZABLE,
    }
)


class CheckerError(ValueError):
    """Raised when a check cannot be carried out as posed."""


class SearchBoundExceeded(CheckerError):
    """Raised instead of attempting a search beyond the op budget."""


class InvalidHistoryError(CheckerError):
    def __init__(self, violations):
        super().__init__(
            "history fails validation: "
            + "; ".join(v.message for v in violations[:5])
        )
        self.violations = violations


@dataclass(frozen=True)
class Certificate:
    """Evidence of inconsistency.  kind is "cycle" (the required order
    contradicts itself on the named ops) or "unserializable" (no legal
    order exists; for the fast check, ops name a write/read pair where
    the read provably missed the write)."""

    kind: str
    ops: tuple[OpId, ...]
    process: ProcessId | None = None
    note: str = ""


@dataclass(frozen=True)
class Verdict:
    model: ModelId
    consistent: bool
    violation: Certificate | None = None
    witnesses: Mapping[ProcessId, Serialization] = field(default_factory=dict)
    witness: Serialization | None = None


def required_order(
    h: History,
    model: ModelId,
    graphs: Mapping[ProcessId, IntraDepGraph] | None = None,
    inter_graph: InterDepGraph | None = None,
    opts: InterOrderOptions | None = None,
) -> tuple[PartialOrder, bool]:
    """The order a model imposes, plus whether it is judged per process.

    Graph-relaxed models refuse to run without their graphs; the rest
    ignore graph arguments entirely.
    """
    if model in GRAPH_MODELS:
        if graphs is None:
            raise CheckerError(f"{model.value} requires per-process dependency graphs")
        intra = intra_program_order(graphs, h)
    if model is ModelId.EVENTUAL:
        return PartialOrder(h.op_index, []), True
    if model is ModelId.PRAM:
        return program_order(h), True
    if model is ModelId.INTRA_PRAM:
        return intra, True
    if model is ModelId.CAUSAL:
        return causal_order(h), True
    if model is ModelId.INTRA_CAUSAL:
        return intra_causal_order(h, graphs), True
    if model is ModelId.INTER_CAUSAL:
        if inter_graph is None:
            raise CheckerError("InterCausal requires an inter-process graph")
        return inter_causal_order(h, inter_graph, opts), True
    if model is ModelId.SEQUENTIAL:
        return program_order(h), False
    if model is ModelId.INTRA_SEQUENTIAL:
        return intra, False
    if model is ModelId.LINEARIZABLE:
        return program_order(h).union(real_time_order(h)), False
    if model is ModelId.INTRA_LINEARIZABLE:
        return intra.union(intra_real_time_order(h)), False
    raise CheckerError(f"unknown model: {model}")


def _always_permitted(h: History, reader: ProcessId, author: ProcessId) -> bool:
    """True when no serialization can hide author's writes from reader:
    initially friends and never unfriended."""
    if friend_pair(reader, author) not in frozenset(
        friend_pair(a, b) for a, b in h.initial_friends
    ):
        return False
    for op in h.operations():
        if (
            op.is_friend_op
            and op.tag.kind is TagKind.REMOVE_FRIEND
            and friend_pair(op.process, op.tag.subject) == friend_pair(reader, author)
        ):
            return False
    return True


def fast_necessary_check(
    ground: frozenset[OpId],
    order: PartialOrder,
    h: History,
    subject: ProcessId | None = None,
) -> Certificate | None:
    """Cheap refutation attempt.  A returned certificate is sound: the
    ground set cannot be serialized.  None proves nothing.

    Two tests: the required order (plus the subject's own program
    order) contains a cycle; or a write is forced before a read that
    neither returned it nor saw it earlier, with no friendship change
    that could ever hide it.
    """
    combined = order.restrict(ground)
    if subject is not None:
        combined = combined.union(self_order(h, subject).restrict(ground))
    cycle = combined.find_cycle()
    if cycle:
        return Certificate(
            kind="cycle",
            ops=tuple(cycle),
            process=subject,
            note="required order contradicts itself",
        )

    readers = [subject] if subject is not None else list(h.processes)
    writes = [h.op(i) for i in ground if h.op(i).is_write]
    for reader in readers:
        local_ops = [op for op in h.local(reader) if op.id in ground]
        # The read (at most one per write) where this reader claimed it.
        claim_by: dict[OpId, OpId] = {}
        for op in local_ops:
            if op.is_wall_read:
                for wid in op.returned_ids():
                    claim_by[wid] = op.id
        for op in local_ops:
            if op.is_wall_read:
                for w in writes:
                    if (
                        w.object.namespace != op.object.namespace
                        or w.process == reader
                        or w.id in op.returned_ids()
                        or not combined.holds(w.id, op.id)
                        or not _always_permitted(h, reader, w.process)
                    ):
                        continue
                    # Sound only if no other read of this reader can
                    # claim w first in some serialization.
                    claimer = claim_by.get(w.id)
                    if claimer is None or combined.holds(op.id, claimer):
                        return Certificate(
                            kind="unserializable",
                            ops=(w.id, op.id),
                            process=subject,
                            note=f"{op.id} is forced after {w.id} but never saw it",
                        )
            elif op.is_read:
                source = None
                if isinstance(op.returned, str):
                    for w in writes:
                        if w.object == op.object and w.value == op.returned:
                            source = w
                            break
                for w in writes:
                    if w.object != op.object or not combined.holds(w.id, op.id):
                        continue
                    if op.returned is None:
                        return Certificate(
                            kind="unserializable",
                            ops=(w.id, op.id),
                            process=subject,
                            note=f"{op.id} returned nothing yet follows {w.id}",
                        )
                    if (
                        source is not None
                        and source.id != w.id
                        and combined.holds(source.id, w.id)
                    ):
                        return Certificate(
                            kind="unserializable",
                            ops=(w.id, op.id),
                            process=subject,
                            note=f"{op.id} returned {source.id}, overwritten by {w.id}",
                        )
    return None


def brute_force_search(
    ground: frozenset[OpId],
    order: PartialOrder,
    h: History,
    subject: ProcessId | None = None,
    max_search: int = 16,
) -> Serialization | None:
    """Exhaustive search for a legal linear extension of order over the
    ground set.  Deterministic: candidates are tried in id order, so the
    first hit is the lexicographically smallest witness.  Returns None
    only after exhausting the space."""
    if len(ground) > max_search:
        raise SearchBoundExceeded(
            f"ground set of {len(ground)} exceeds the search bound {max_search}"
        )
    constraints = order.restrict(ground)
    succs: dict[OpId, list[OpId]] = {node: [] for node in ground}
    remaining: dict[OpId, int] = {node: 0 for node in ground}
    for a, b in constraints.edges:
        succs[a].append(b)
        remaining[b] += 1

    ops = {node: h.op(node) for node in ground}
    state = SerializationState(h)
    placed: list[OpId] = []
    order_of = sorted(ground)

    def descend() -> bool:
        if len(placed) == len(ground):
            return True
        for node in order_of:
            if remaining[node] != 0:
                continue
            op = ops[node]
            if not state.read_is_legal(op):
                continue
            record = state.place(op)
            placed.append(node)
            remaining[node] = -1
            for b in succs[node]:
                remaining[b] -= 1
            if descend():
                return True
            for b in succs[node]:
                remaining[b] += 1
            remaining[node] = 0
            placed.pop()
            state.unplace(record)
        return False

    if descend():
        return Serialization(tuple(placed), subject)
    return None


def check(
    h: History,
    model: ModelId,
    graphs: Mapping[ProcessId, IntraDepGraph] | None = None,
    inter_graph: InterDepGraph | None = None,
    opts: InterOrderOptions | None = None,
    max_search: int = 16,
    validate: bool = True,
) -> Verdict:
    """Decide whether a history satisfies a model.

    Per-process models additionally pin each subject's own operations to
    its program order; a process's serialization may reorder everyone
    else, never itself.  Verdicts carry either per-process witnesses or
    a certificate for the first process (in sorted order) that fails,
    so re-running is deterministic.
    """
    if validate:
        violations = validate_history(h)
        if violations:
            raise InvalidHistoryError(violations)
    order, per_process = required_order(h, model, graphs, inter_graph, opts)

    if per_process:
        witnesses: dict[ProcessId, Serialization] = {}
        for process in sorted(h.processes):
            ground = project_pi_plus_w(h, process)
            restricted = order.restrict(ground)
            certificate = fast_necessary_check(ground, restricted, h, process)
            if certificate is not None:
                return Verdict(model, False, violation=certificate)
            combined = restricted.union(self_order(h, process).restrict(ground))
            witness = brute_force_search(ground, combined, h, process, max_search)
            if witness is None:
                return Verdict(
                    model,
                    False,
                    violation=Certificate(
                        kind="unserializable",
                        ops=tuple(sorted(ground)),
                        process=process,
                        note="no legal serialization exists",
                    ),
                )
            witnesses[process] = witness
        return Verdict(model, True, witnesses=witnesses)

    ground = frozenset(h.op_index)
    restricted = order.restrict(ground)
    certificate = fast_necessary_check(ground, restricted, h, None)
    if certificate is not None:
        return Verdict(model, False, violation=certificate)
    witness = brute_force_search(ground, restricted, h, None, max_search)
    if witness is None:
        return Verdict(
            model,
            False,
            violation=Certificate(
                kind="unserializable",
                ops=tuple(sorted(ground)),
                note="no legal serialization exists",
            ),
        )
    return Verdict(model, True, witness=witness)
