"""Partial orders over operation ids and the named orderings a checker
consumes: program order, real-time order, causal order, and the graph-
relaxed variants that replace program order with an application
dependency graph or filter reads-from edges through a social graph.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .history import History, OpId, Operation, ProcessId, TagKind, derive_reads_from


class PartialOrder:
    """An edge set over a ground set of ids with reachability queries.

    holds(a, b) answers "is a strictly before b", i.e. b is reachable
    from a through one or more edges.  Reachable sets are computed for
    every node up front on small ground sets and cached per query node
    on large ones.
    """

    EAGER_LIMIT = 256

    def __init__(self, ground: Iterable[OpId], edges: Iterable[tuple[OpId, OpId]]):
        self.ground = frozenset(ground)
        self.edges = frozenset(
            (a, b) for a, b in edges if a in self.ground and b in self.ground and a != b
        )
        self._succ: dict[OpId, list[OpId]] = {node: [] for node in self.ground}
        for a, b in sorted(self.edges):
            self._succ[a].append(b)
        self._reach: dict[OpId, frozenset[OpId]] = {}
        self._lock = threading.Lock()
        if len(self.ground) <= self.EAGER_LIMIT:
            for node in self.ground:
                self._reachable(node)

    def _reachable(self, start: OpId) -> frozenset[OpId]:
        cached = self._reach.get(start)
        if cached is not None:
            return cached
        with self._lock:
            cached = self._reach.get(start)
            if cached is not None:
                return cached
            seen: set[OpId] = set()
            stack = list(self._succ[start])
            while stack:
                node = stack.pop()
                if node in seen:
                    continue
                seen.add(node)
                done = self._reach.get(node)
                if done is not None:
                    seen.update(done)
                    continue
                stack.extend(self._succ[node])
            result = frozenset(seen)
            self._reach[start] = result
            return result

    def holds(self, a: OpId, b: OpId) -> bool:
        if a not in self.ground or b not in self.ground:
            return False
        return b in self._reachable(a)

    def successors(self, a: OpId) -> frozenset[OpId]:
        return self._reachable(a)

    def is_acyclic(self) -> bool:
        return all(node not in self._reachable(node) for node in self.ground)

    def find_cycle(self) -> list[OpId] | None:
        """Some cycle as a node path (last node has an edge back to the
        first), or None.  Deterministic: DFS in sorted order."""
        color: dict[OpId, int] = {}
        for root in sorted(self.ground):
            if color.get(root):
                continue
            stack = [(root, iter(sorted(self._succ[root])))]
            color[root] = 1
            while stack:
                node, successors = stack[-1]
                for nxt in successors:
                    if color.get(nxt) == 1:
                        nodes = [entry[0] for entry in stack]
                        return nodes[nodes.index(nxt):]
                    if not color.get(nxt):
                        color[nxt] = 1
                        stack.append((nxt, iter(sorted(self._succ[nxt]))))
                        break
                else:
                    color[node] = 2
                    stack.pop()
        return None

    def union(self, other: PartialOrder) -> PartialOrder:
        return PartialOrder(self.ground | other.ground, self.edges | other.edges)

    def restrict(self, ground: Iterable[OpId]) -> PartialOrder:
        """The induced order on a subset: a before b survives whenever a
        path existed in the full order, even through dropped nodes."""
        keep = frozenset(ground) & self.ground
        edges = {
            (a, b) for a in keep for b in self._reachable(a) & keep if a != b
        }
        return PartialOrder(frozenset(ground), edges)

    def to_edge_list(self) -> list[tuple[OpId, OpId]]:
        return sorted(self.edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartialOrder):
            return NotImplemented
        return self.ground == other.ground and self.relation() == other.relation()

    def __hash__(self) -> int:
        return hash((self.ground, self.relation()))

    def relation(self) -> frozenset[tuple[OpId, OpId]]:
        """Every ordered pair, i.e. the transitive closure as a set."""
        return frozenset(
            (a, b) for a in self.ground for b in self._reachable(a) if a != b
        )


def transitive_closure(order: PartialOrder) -> PartialOrder:
    """The same ordering with every implied pair materialized as an
    edge.  Idempotent."""
    return PartialOrder(order.ground, order.relation())


def is_acyclic(order: PartialOrder) -> bool:
    return order.is_acyclic()


@dataclass(frozen=True)
class InterOrderOptions:
    """Knobs for the social-graph relaxation of causal order.

    d bounds how many hops a writer may sit from a reader before their
    reads-from edges stop constraining other processes; d_by_kind
    overrides the bound per application tag kind of the write;
    multiplicity keeps an edge when writer and reader are friends or
    share at least that many common friends.
    """

    d: int = 1
    d_by_kind: Mapping[TagKind, int] = field(default_factory=dict)
    multiplicity: int | None = None

    def __post_init__(self) -> None:
        if self.d < 0:
            raise ValueError("d must be nonnegative")
        if any(v < 0 for v in self.d_by_kind.values()):
            raise ValueError("per-kind d must be nonnegative")
        if self.multiplicity is not None and self.multiplicity < 1:
            raise ValueError("multiplicity must be at least 1")

    def effective_d(self, op: Operation) -> int:
        if op.tag is not None:
            override = self.d_by_kind.get(op.tag.kind)
            if override is not None:
                return override
        return self.d


def program_order(h: History) -> PartialOrder:
    """Each process's operations in invocation order; nothing across
    processes.  Covering chain edges only, closure implied."""
    ground = list(h.op_index)
    edges = []
    for local in h.locals:
        for earlier, later in zip(local.ops, local.ops[1:]):
            edges.append((earlier.id, later.id))
    return PartialOrder(ground, edges)


def self_order(h: History, process: ProcessId) -> PartialOrder:
    """Program order of a single process."""
    local = h.local(process)
    edges = [
        (earlier.id, later.id) for earlier, later in zip(local.ops, local.ops[1:])
    ]
    return PartialOrder([op.id for op in local], edges)


def real_time_order(h: History) -> PartialOrder:
    """o1 before o2 whenever o1 responded before o2 was invoked."""
    ops = list(h.operations())
    edges = [
        (a.id, b.id)
        for a in ops
        for b in ops
        if a.id != b.id and a.resp < b.inv
    ]
    return PartialOrder([op.id for op in ops], edges)


def intra_real_time_order(h: History) -> PartialOrder:
    """Real-time order restricted to pairs at two different processes;
    a process's own sequencing is left to its dependency graph."""
    ops = list(h.operations())
    edges = [
        (a.id, b.id)
        for a in ops
        for b in ops
        if a.process != b.process and a.resp < b.inv
    ]
    return PartialOrder([op.id for op in ops], edges)


def intra_program_order(ds: Mapping[ProcessId, "IntraDepGraph"], h: History) -> PartialOrder:
    """Union of the per-process dependency graphs: an edge orders its
    endpoints, nothing else does."""
    from .depgraphs import validate_intra_graph

    ground = list(h.op_index)
    edges: set[tuple[OpId, OpId]] = set()
    for process in h.processes:
        if process not in ds:
            raise KeyError(f"no dependency graph supplied for process {process}")
        graph = ds[process]
        problems = validate_intra_graph(graph, h.local(process))
        if problems:
            raise ValueError(
                f"dependency graph for {process} does not fit its history: "
                + "; ".join(v.message for v in problems)
            )
        edges.update(graph.edges)
    return PartialOrder(ground, edges)


def causal_order(h: History) -> PartialOrder:
    """Transitive closure of program order united with reads-from."""
    base = program_order(h)
    combined = PartialOrder(base.ground, set(base.edges) | set(derive_reads_from(h)))
    return transitive_closure(combined)


def intra_causal_order(
    h: History, ds: Mapping[ProcessId, "IntraDepGraph"]
) -> PartialOrder:
    """Causal order with program order replaced by the dependency
    graphs' intra order."""
    base = intra_program_order(ds, h)
    combined = PartialOrder(base.ground, set(base.edges) | set(derive_reads_from(h)))
    return transitive_closure(combined)


def inter_causal_order(
    h: History,
    g: "InterDepGraph",
    opts: InterOrderOptions | None = None,
) -> PartialOrder:
    """Causal order with reads-from edges filtered through a social
    graph: an edge from w to r survives only when w's author is within
    the relevant hop bound of r's process (or passes the common-friends
    rule).  Transitivity is taken over the surviving edges."""
    from .depgraphs import common_friends_related, d_reachable

    if opts is None:
        opts = InterOrderOptions()
    missing = [p for p in h.processes if p not in g.nodes]
    if missing:
        raise KeyError(f"processes missing from the social graph: {missing}")

    base = program_order(h)
    kept: set[tuple[OpId, OpId]] = set(base.edges)
    for wid, rid in derive_reads_from(h):
        writer = h.op(wid)
        reader = h.op(rid)
        bound = opts.effective_d(writer)
        if d_reachable(g, writer.process, reader.process, bound):
            kept.add((wid, rid))
        elif opts.multiplicity is not None and common_friends_related(
            g, writer.process, reader.process, opts.multiplicity
        ):
            kept.add((wid, rid))
    return transitive_closure(PartialOrder(base.ground, kept))
