"""Discrete-event simulator for a replicated wall store.

Clients execute a scripted sequence of wall actions against their home
replica.  Writes apply locally at once and propagate to every other
replica under a delay model; a replica buffers an arrived write until
the protocol's visibility predicate admits it.  The four protocols
differ only in the dependency metadata attached to each write and in
how much of it must be visible first:

  eventual      no metadata, visible on arrival
  causal        previous write plus everything read since it
  intra-causal  the write's direct predecessors in the author's
                dependency graph, resolved through reads
  inter-causal  the causal set, with read-derived entries discarded
                when the read value's author sits too many hops from
                this writer in the social graph

Runs are bit-deterministic: one seeded generator drives jitter, and
ties break on (time, replica, event sequence).
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .depgraphs import (
    GraphError,
    InterDepGraph,
    build_intra_graph,
    common_friends_related,
    d_reachable,
)
from .history import (
    FRIEND_NAMESPACE,
    AppTag,
    FriendshipState,
    History,
    LocalHistory,
    ObjectId,
    OpId,
    OpKind,
    Operation,
    ProcessId,
    TagKind,
)
from .orders import InterOrderOptions
from .social import ActionKind, WallAction, wall_namespace

OP_SPAN = Fraction(1, 1000)
JITTER_STEPS = 1_000_000


class Protocol(str, Enum):
    EVENTUAL = "eventual"
    CAUSAL = "causal"
    INTRA_CAUSAL = "intra-causal"
    INTER_CAUSAL = "inter-causal"


class SimulationError(RuntimeError):
    """Raised for malformed scenarios and undeliverable dependencies."""


@dataclass(frozen=True)
class DelayModel:
    """Propagation delay between replicas.

    A write travelling src -> dst takes the link delay (or the default)
    times the write's override multiplier, plus a uniform jitter draw
    from the closed range.  All link delays must be positive.
    """

    default: Fraction
    links: Mapping[tuple[str, str], Fraction] = field(default_factory=dict)
    write_overrides: Mapping[OpId, Fraction] = field(default_factory=dict)
    jitter: tuple[Fraction, Fraction] = (Fraction(0), Fraction(0))

    def __post_init__(self) -> None:
        if self.default <= 0:
            raise SimulationError("default delay must be positive")
        for pair, value in self.links.items():
            if value <= 0:
                raise SimulationError(f"link delay for {pair} must be positive")
        for wid, factor in self.write_overrides.items():
            if factor <= 0:
                raise SimulationError(f"override for {wid} must be positive")
        lo, hi = self.jitter
        if lo < 0 or hi < lo:
            raise SimulationError("jitter range must satisfy 0 <= lo <= hi")

    def sample_jitter(self, rng: random.Random) -> Fraction:
        lo, hi = self.jitter
        if hi == lo:
            rng.randrange(JITTER_STEPS + 1)  # keep draw order protocol-independent
            return lo
        step = Fraction(rng.randrange(JITTER_STEPS + 1), JITTER_STEPS)
        return lo + (hi - lo) * step

    def delay(self, write_id: OpId, src: str, dst: str, jitter: Fraction) -> Fraction:
        base = self.links.get((src, dst), self.default)
        return base * self.write_overrides.get(write_id, Fraction(1)) + jitter

    def max_delay(self) -> Fraction:
        worst = max([self.default, *self.links.values()])
        factor = max([Fraction(1), *self.write_overrides.values()])
        return worst * factor + self.jitter[1]


@dataclass(frozen=True)
class Scenario:
    replicas: tuple[str, ...]
    homes: Mapping[ProcessId, str]
    script: tuple[WallAction, ...]
    delay: DelayModel
    protocol: Protocol
    initial_friends: frozenset[tuple[ProcessId, ProcessId]] = frozenset()
    inter_graph: InterDepGraph | None = None
    inter_opts: InterOrderOptions | None = None
    seed: int = 0

    def with_protocol(self, protocol: Protocol) -> Scenario:
        return Scenario(
            replicas=self.replicas,
            homes=self.homes,
            script=self.script,
            delay=self.delay,
            protocol=protocol,
            initial_friends=self.initial_friends,
            inter_graph=self.inter_graph,
            inter_opts=self.inter_opts,
            seed=self.seed,
        )


@dataclass(frozen=True)
class VisibilityRecord:
    write: OpId
    replica: str
    issued: Fraction
    visible: Fraction

    @property
    def latency(self) -> Fraction:
        return self.visible - self.issued


@dataclass(frozen=True)
class Metrics:
    protocol: Protocol
    visibility: tuple[VisibilityRecord, ...]
    dependency_counts: Mapping[OpId, int]
    mean_latency: Fraction | None
    max_latency: Fraction | None
    mean_dependencies: Fraction | None
    converged: bool


DependencySets = dict[OpId, frozenset[OpId]]


@dataclass(frozen=True)
class RunResult:
    history: History
    metrics: Metrics
    dependencies: DependencySets


@dataclass(frozen=True)
class _Dep:
    write: OpId
    via_read: bool  # read-derived entries are the ones inter-causal may drop


def _validate_scenario(scenario: Scenario) -> None:
    replicas = set(scenario.replicas)
    if len(scenario.replicas) != len(replicas):
        raise SimulationError("duplicate replica names")
    for client, home in scenario.homes.items():
        if home not in replicas:
            raise SimulationError(f"{client} homed on unknown replica {home}")
    last_at: dict[ProcessId, Fraction] = {}
    for action in scenario.script:
        if action.actor not in scenario.homes:
            raise SimulationError(f"action by unhomed client {action.actor}")
        previous = last_at.get(action.actor)
        if previous is not None and action.at - previous <= OP_SPAN:
            raise SimulationError(
                f"{action.actor} acts twice within one operation span at {action.at}"
            )
        last_at[action.actor] = action.at
    if scenario.protocol is Protocol.INTER_CAUSAL:
        if scenario.inter_graph is None:
            raise SimulationError("inter-causal protocol requires a social graph")
        missing = set(scenario.homes) - set(scenario.inter_graph.nodes)
        if missing:
            raise SimulationError(f"social graph misses clients: {sorted(missing)}")
        opts = scenario.inter_opts or InterOrderOptions()
        if opts.multiplicity is not None and scenario.inter_graph.directed:
            raise SimulationError("multiplicity rule needs an undirected graph")


class _ClientState:
    def __init__(self, name: ProcessId, home: str):
        self.name = name
        self.home = home
        self.ops: list[Operation] = []
        self.counter = 0
        self.claimed: dict[str, set[OpId]] = {}

    def next_id(self) -> OpId:
        self.counter += 1
        return f"{self.name}.{self.counter}"


class _ReplicaState:
    def __init__(self, name: str, initial_friends) -> None:
        self.name = name
        self.visible: set[OpId] = set()
        self.visible_order: list[Operation] = []
        self.pending: list[tuple[Fraction, OpId]] = []
        self.friends = FriendshipState(initial_friends)

    def expose(self, op: Operation) -> None:
        self.visible.add(op.id)
        self.visible_order.append(op)
        self.friends.apply(op)


def nearest_dependencies(
    protocol: Protocol,
    prior_ops: Sequence[Operation],
    write: Operation,
    partial: History,
) -> frozenset[OpId]:
    """Direct dependencies the protocol would attach to this write,
    given the author's earlier operations."""
    return frozenset(d.write for d in _dependency_records(protocol, prior_ops, write, partial))


def _dependency_records(
    protocol: Protocol,
    prior_ops: Sequence[Operation],
    write: Operation,
    partial: History,
) -> tuple[_Dep, ...]:
    if protocol is Protocol.EVENTUAL:
        return ()
    if protocol in (Protocol.CAUSAL, Protocol.INTER_CAUSAL):
        records: list[_Dep] = []
        reads: list[Operation] = []
        previous_write: Operation | None = None
        for op in prior_ops:
            if op.is_write:
                previous_write = op
                reads = []
            elif op.is_wall_read:
                reads.append(op)
        if previous_write is not None:
            records.append(_Dep(previous_write.id, via_read=False))
        for read in reads:
            for wid in sorted(read.returned_ids()):
                records.append(_Dep(wid, via_read=True))
        return tuple(records)
    if protocol is Protocol.INTRA_CAUSAL:
        local = partial.local(write.process)
        graph = build_intra_graph(local, partial)
        preds = sorted(a for a, b in graph.edges if b == write.id)
        records = []
        for pred in preds:
            pred_op = partial.op(pred)
            if pred_op.is_write:
                records.append(_Dep(pred, via_read=False))
            else:
                for wid in sorted(pred_op.returned_ids()):
                    records.append(_Dep(wid, via_read=True))
        return tuple(records)
    raise SimulationError(f"unknown protocol: {protocol}")


def _dep_survives(
    dep: _Dep,
    writer_of_dep: ProcessId,
    issuer: ProcessId,
    dep_op: Operation,
    scenario: Scenario,
) -> bool:
    if not dep.via_read:
        return True
    graph = scenario.inter_graph
    opts = scenario.inter_opts or InterOrderOptions()
    assert graph is not None
    if d_reachable(graph, writer_of_dep, issuer, opts.effective_d(dep_op)):
        return True
    if opts.multiplicity is not None:
        return common_friends_related(graph, writer_of_dep, issuer, opts.multiplicity)
    return False


def visibility_check(
    protocol: Protocol,
    write: Operation,
    deps: Sequence[_Dep],
    visible: set[OpId],
    registry: Mapping[OpId, Operation],
    scenario: Scenario | None = None,
) -> bool:
    """May this write become visible at a replica whose admitted set is
    `visible`?  Direct dependencies only; recursion is implicit because
    an admitted dependency already had its own dependencies admitted."""
    if protocol is Protocol.EVENTUAL:
        return True
    if protocol in (Protocol.CAUSAL, Protocol.INTRA_CAUSAL):
        return all(d.write in visible for d in deps)
    if protocol is Protocol.INTER_CAUSAL:
        assert scenario is not None
        for d in deps:
            dep_op = registry[d.write]
            if _dep_survives(d, dep_op.process, write.process, dep_op, scenario):
                if d.write not in visible:
                    return False
        return True
    raise SimulationError(f"unknown protocol: {protocol}")


def run(scenario: Scenario) -> RunResult:
    """Execute a scenario to quiescence and emit the observed history,
    metrics, and per-write dependency sets."""
    _validate_scenario(scenario)
    rng = random.Random(scenario.seed)

    clients = {
        name: _ClientState(name, home) for name, home in sorted(scenario.homes.items())
    }
    replicas = {
        name: _ReplicaState(name, scenario.initial_friends)
        for name in scenario.replicas
    }
    registry: dict[OpId, Operation] = {}
    dep_records: dict[OpId, tuple[_Dep, ...]] = {}
    issue_times: dict[OpId, Fraction] = {}
    visibility_log: list[VisibilityRecord] = []
    topic_walls: dict[str, str] = {}
    used_texts: set[str] = set()

    counter = 0
    queue: list[tuple[Fraction, str, int, str, object]] = []
    for action in sorted(scenario.script, key=lambda a: (a.at, a.actor)):
        home = scenario.homes[action.actor]
        heapq.heappush(queue, (action.at, home, counter, "action", action))
        counter += 1

    def partial_history() -> History:
        locals_ = tuple(
            LocalHistory(name, tuple(state.ops))
            for name, state in sorted(clients.items())
        )
        return History(locals_, scenario.initial_friends)

    def expose(replica: _ReplicaState, op: Operation, at: Fraction) -> None:
        replica.expose(op)
        visibility_log.append(
            VisibilityRecord(op.id, replica.name, issue_times[op.id], at)
        )

    def drain_pending(replica: _ReplicaState, at: Fraction) -> None:
        progressed = True
        while progressed:
            progressed = False
            for arrival, wid in sorted(replica.pending):
                op = registry[wid]
                if visibility_check(
                    scenario.protocol,
                    op,
                    dep_records[wid],
                    replica.visible,
                    registry,
                    scenario,
                ):
                    replica.pending.remove((arrival, wid))
                    expose(replica, op, at)
                    progressed = True
                    break

    def issue_write(state: _ClientState, op: Operation, at: Fraction) -> None:
        registry[op.id] = op
        issue_times[op.id] = at
        state.ops.append(op)
        try:
            records = _dependency_records(
                scenario.protocol, state.ops[:-1], op, partial_history()
            )
        except GraphError as exc:
            raise SimulationError(f"cannot derive dependencies for {op.id}: {exc}")
        dep_records[op.id] = records
        home = replicas[state.home]
        if not visibility_check(
            scenario.protocol, op, records, home.visible, registry, scenario
        ):
            raise SimulationError(
                f"{op.id} depends on writes its own replica has not seen"
            )
        expose(home, op, at)
        drain_pending(home, at)
        nonlocal counter
        for dst in sorted(scenario.replicas):
            if dst == state.home:
                continue
            jitter = scenario.delay.sample_jitter(rng)
            arrival = at + scenario.delay.delay(op.id, state.home, dst, jitter)
            heapq.heappush(queue, (arrival, dst, counter, "arrival", op.id))
            counter += 1

    def execute_action(action: WallAction, at: Fraction) -> None:
        state = clients[action.actor]
        op_id = state.next_id()
        inv, resp = at, at + OP_SPAN
        if action.kind in (ActionKind.POST, ActionKind.COMMENT):
            if not action.text or not action.topic:
                raise SimulationError(f"{action.kind.value} needs text and topic")
            if action.text in used_texts:
                raise SimulationError(f"duplicate message text {action.text!r}")
            used_texts.add(action.text)
            if action.kind is ActionKind.POST:
                namespace = wall_namespace(action.owner or action.actor)
                if action.topic in topic_walls:
                    raise SimulationError(f"topic {action.topic!r} posted twice")
                topic_walls[action.topic] = namespace
                tag = AppTag(TagKind.POST, topic=action.topic)
            else:
                if action.topic not in topic_walls:
                    raise SimulationError(f"comment on unposted topic {action.topic!r}")
                namespace = topic_walls[action.topic]
                tag = AppTag(TagKind.COMMENT, topic=action.topic)
            op = Operation(
                id=op_id,
                process=action.actor,
                kind=OpKind.WRITE,
                object=ObjectId(namespace, action.text),
                inv=inv,
                resp=resp,
                value=action.text,
                tag=tag,
            )
            issue_write(state, op, at)
        elif action.kind is ActionKind.READ_WALL:
            if not action.owner:
                raise SimulationError(f"wall read by {action.actor} names no owner")
            namespace = wall_namespace(action.owner)
            replica = replicas[state.home]
            claimed = state.claimed.setdefault(namespace, set())
            newly = [
                w.id
                for w in replica.visible_order
                if w.object.namespace == namespace
                and w.process != action.actor
                and w.id not in claimed
                and replica.friends.friends(action.actor, w.process)
            ]
            claimed.update(newly)
            op = Operation(
                id=op_id,
                process=action.actor,
                kind=OpKind.WALL_READ,
                object=ObjectId(namespace),
                inv=inv,
                resp=resp,
                returned=frozenset(newly),
                tag=AppTag(TagKind.WALL_READ),
            )
            state.ops.append(op)
        else:
            if not action.subject:
                raise SimulationError(f"friendship change by {action.actor} names no subject")
            tag_kind = (
                TagKind.ADD_FRIEND
                if action.kind is ActionKind.ADD_FRIEND
                else TagKind.REMOVE_FRIEND
            )
            op = Operation(
                id=op_id,
                process=action.actor,
                kind=OpKind.WRITE,
                object=ObjectId(FRIEND_NAMESPACE, op_id),
                inv=inv,
                resp=resp,
                value=f"{tag_kind.value}:{action.actor}:{action.subject}",
                tag=AppTag(tag_kind, subject=action.subject),
            )
            issue_write(state, op, at)

    while queue:
        at, _replica, _seq, kind, payload = heapq.heappop(queue)
        if kind == "action":
            execute_action(payload, at)
        else:
            wid = payload
            replica = replicas[_replica]
            op = registry[wid]
            if visibility_check(
                scenario.protocol, op, dep_records[wid], replica.visible, registry, scenario
            ):
                expose(replica, op, at)
                drain_pending(replica, at)
            else:
                replica.pending.append((at, wid))

    stuck = {
        name: sorted(wid for _, wid in state.pending)
        for name, state in replicas.items()
        if state.pending
    }
    if stuck:
        raise SimulationError(f"undeliverable dependencies at quiescence: {stuck}")

    history = partial_history()
    dependencies = {
        wid: frozenset(d.write for d in records)
        for wid, records in dep_records.items()
    }
    metrics = measure(
        scenario.protocol,
        visibility_log,
        dependencies,
        [replica.visible for replica in replicas.values()],
    )
    return RunResult(history=history, metrics=metrics, dependencies=dependencies)


def measure(
    protocol: Protocol,
    visibility_log: Iterable[VisibilityRecord],
    dependencies: Mapping[OpId, frozenset[OpId]],
    replica_views: Sequence[set[OpId]],
) -> Metrics:
    """Aggregate a run's logs: latency statistics over every (write,
    replica) pair, dependency counts, and whether all replicas exposed
    the same writes at quiescence."""
    records = tuple(visibility_log)
    latencies = [r.latency for r in records]
    counts = {wid: len(deps) for wid, deps in dependencies.items()}
    views = [frozenset(view) for view in replica_views]
    converged = len(set(views)) <= 1
    return Metrics(
        protocol=protocol,
        visibility=records,
        dependency_counts=counts,
        mean_latency=sum(latencies, Fraction(0)) / len(latencies) if latencies else None,
        max_latency=max(latencies) if latencies else None,
        mean_dependencies=(
            Fraction(sum(counts.values()), len(counts)) if counts else None
        ),
        converged=converged,
    )
