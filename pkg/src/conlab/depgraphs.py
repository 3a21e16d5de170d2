"""Dependency graphs that relax consistency.

An intra graph is a DAG over one process's operations; an edge is the
only thing that orders two of that process's operations, so omitting an
edge releases the pair to be observed in either order.  The builder
derives edges from wall semantics: a comment follows something in its
topic, a post follows the author's previous post-like operation, and
friendship changes count as posts.

An inter graph relates whole processes (friendship or subscription).
Reads-from edges between far-apart users stop constraining third
parties; d_reachable and common_friends_related are the two distance
tests used for that filtering.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .history import (
    History,
    LocalHistory,
    OpId,
    Operation,
    POST_LIKE_KINDS,
    ProcessId,
    TagKind,
    Violation,
)


class GraphError(ValueError):
    """Raised when a dependency graph cannot be built or does not fit."""


@dataclass(frozen=True)
class IntraDepGraph:
    """DAG over one process's operation ids."""

    process: ProcessId
    nodes: frozenset[OpId]
    edges: frozenset[tuple[OpId, OpId]]


@dataclass(frozen=True)
class InterDepGraph:
    """Relation over processes.  Friendship graphs are undirected and
    store both directions; subscription graphs keep their arrows."""

    nodes: frozenset[ProcessId]
    edges: frozenset[tuple[ProcessId, ProcessId]]
    directed: bool = False

    @staticmethod
    def build(
        nodes: Iterable[ProcessId],
        edges: Iterable[tuple[ProcessId, ProcessId]],
        directed: bool = False,
    ) -> InterDepGraph:
        node_set = set(nodes)
        edge_set: set[tuple[ProcessId, ProcessId]] = set()
        for a, b in edges:
            if a == b:
                continue
            node_set.update((a, b))
            edge_set.add((a, b))
            if not directed:
                edge_set.add((b, a))
        return InterDepGraph(frozenset(node_set), frozenset(edge_set), directed)

    @staticmethod
    def complete(nodes: Iterable[ProcessId]) -> InterDepGraph:
        node_list = list(nodes)
        return InterDepGraph.build(
            node_list,
            [(a, b) for a in node_list for b in node_list if a < b],
            directed=False,
        )

    def successors(self, node: ProcessId) -> frozenset[ProcessId]:
        return frozenset(b for a, b in self.edges if a == node)


# Effective tag content of an operation: writes carry their own tag,
# wall reads inherit the tags of every write they returned.
def _tag_items(op: Operation, h: History) -> list[tuple[TagKind, str | None]]:
    if op.is_write:
        if op.tag is None:
            raise GraphError(f"operation {op.id} carries no application tag")
        return [(op.tag.kind, op.tag.topic)]
    if op.is_wall_read:
        if op.tag is None:
            raise GraphError(f"operation {op.id} carries no application tag")
        items = []
        for wid in sorted(op.returned_ids()):
            w = h.op(wid)
            if w.tag is None:
                raise GraphError(f"write {wid} read by {op.id} carries no tag")
            items.append((w.tag.kind, w.tag.topic))
        return items
    raise GraphError(f"operation {op.id} carries no application tag")


def _is_post_like(op: Operation, h: History) -> bool:
    return any(kind in POST_LIKE_KINDS for kind, _ in _tag_items(op, h))


def _topics(op: Operation, h: History) -> set[str]:
    return {topic for _, topic in _tag_items(op, h) if topic is not None}


def build_intra_graph(l: LocalHistory, h: History) -> IntraDepGraph:
    """Derive a process's dependency graph from wall semantics.

    Edge rules, applied per operation in local order:
      - an operation carrying a comment on topic t gets an edge from the
        latest earlier operation touching t; if none exists yet, from
        the operation holding t's post wherever it sits in the local
        history (a comment can be observed before its post);
      - an operation carrying a post (friendship changes included) gets
        an edge from the author's latest earlier post-like operation;
      - wall reads stand in for whatever they returned.
    """
    ops = list(l.ops)
    edges: set[tuple[OpId, OpId]] = set()

    def post_holder(topic: str, exclude: OpId) -> OpId | None:
        for candidate in ops:
            if candidate.id == exclude:
                continue
            for kind, item_topic in _tag_items(candidate, h):
                if kind is TagKind.POST and item_topic == topic:
                    return candidate.id
        return None

    for idx, op in enumerate(ops):
        items = _tag_items(op, h)
        if _is_post_like(op, h):
            for j in range(idx - 1, -1, -1):
                if _is_post_like(ops[j], h):
                    edges.add((ops[j].id, op.id))
                    break
        comment_topics = {
            topic for kind, topic in items if kind is TagKind.COMMENT and topic
        }
        own_post_topics = {
            topic for kind, topic in items if kind is TagKind.POST and topic
        }
        for topic in sorted(comment_topics):
            if topic in own_post_topics:
                continue  # the post arrived in the same diff
            anchor: OpId | None = None
            for j in range(idx - 1, -1, -1):
                if topic in _topics(ops[j], h):
                    anchor = ops[j].id
                    break
            if anchor is None:
                anchor = post_holder(topic, op.id)
            if anchor is None:
                if not any(
                    w.tag is not None
                    and w.tag.kind is TagKind.POST
                    and w.tag.topic == topic
                    for w in h.writes
                ):
                    raise GraphError(
                        f"comment on topic {topic!r} at {op.id} has no post anywhere"
                    )
                raise GraphError(
                    f"{l.process} holds a comment on topic {topic!r} at {op.id} "
                    "but never holds its post"
                )
            edges.add((anchor, op.id))

    return IntraDepGraph(
        process=l.process,
        nodes=frozenset(op.id for op in ops),
        edges=frozenset(edges),
    )


def build_intra_graphs(h: History) -> dict[ProcessId, IntraDepGraph]:
    """Dependency graphs for every process of a history."""
    return {l.process: build_intra_graph(l, h) for l in h.locals}


def chain_graphs(h: History) -> dict[ProcessId, IntraDepGraph]:
    """Degenerate chain graphs for every process of a history."""
    return {l.process: chain_graph(l) for l in h.locals}


def chain_graph(l: LocalHistory) -> IntraDepGraph:
    """The degenerate graph: a chain in local order.  Its intra order is
    exactly program order, so checkers fed chain graphs reproduce the
    unrelaxed models."""
    edges = {
        (earlier.id, later.id) for earlier, later in zip(l.ops, l.ops[1:])
    }
    return IntraDepGraph(
        process=l.process,
        nodes=frozenset(op.id for op in l.ops),
        edges=frozenset(edges),
    )


def validate_intra_graph(d: IntraDepGraph, l: LocalHistory) -> list[Violation]:
    """Nodes must biject onto the local history's ids, edges must stay
    inside it, and the graph must be a DAG."""
    violations: list[Violation] = []
    local_ids = {op.id for op in l.ops}
    if d.process != l.process:
        violations.append(
            Violation(
                "wrong-process",
                f"graph is for {d.process}, history for {l.process}",
            )
        )
    missing = local_ids - d.nodes
    extra = d.nodes - local_ids
    if missing:
        violations.append(
            Violation(
                "missing-node",
                f"graph lacks nodes for {sorted(missing)}",
                tuple(sorted(missing)),
            )
        )
    if extra:
        violations.append(
            Violation(
                "foreign-node",
                f"graph has nodes outside the local history: {sorted(extra)}",
                tuple(sorted(extra)),
            )
        )
    bad_edges = [
        (a, b) for a, b in sorted(d.edges) if a not in local_ids or b not in local_ids
    ]
    for a, b in bad_edges:
        violations.append(
            Violation("foreign-edge", f"edge ({a}, {b}) leaves the local history", (a, b))
        )
    cycle = _edge_cycle(d.nodes, d.edges)
    if cycle:
        violations.append(
            Violation("cycle", f"graph contains a cycle through {cycle}", tuple(cycle))
        )
    return violations


def _edge_cycle(
    nodes: frozenset[OpId], edges: frozenset[tuple[OpId, OpId]]
) -> list[OpId] | None:
    succ: dict[OpId, list[OpId]] = {n: [] for n in nodes}
    for a, b in sorted(edges):
        if a in succ and b in succ:
            succ[a].append(b)
    color: dict[OpId, int] = {}
    for root in sorted(nodes):
        if color.get(root):
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            node, successors = stack[-1]
            for nxt in successors:
                if color.get(nxt) == 1:
                    path = [entry[0] for entry in stack]
                    return path[path.index(nxt):]
                if not color.get(nxt):
                    color[nxt] = 1
                    stack.append((nxt, iter(succ[nxt])))
                    break
            else:
                color[node] = 2
                stack.pop()
    return None


def d_reachable(g: InterDepGraph, u: ProcessId, v: ProcessId, d: int) -> bool:
    """True when a directed path of length at most d runs from u to v.
    Every node is 0 hops from itself."""
    if d < 0:
        raise ValueError("hop bound must be nonnegative")
    if u not in g.nodes or v not in g.nodes:
        raise GraphError(f"unknown node in reachability query: {u!r} or {v!r}")
    if u == v:
        return True
    frontier = deque([(u, 0)])
    seen = {u}
    while frontier:
        node, dist = frontier.popleft()
        if dist == d:
            continue
        for nxt in g.successors(node):
            if nxt == v:
                return True
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, dist + 1))
    return False


def common_friends_related(
    g: InterDepGraph, u: ProcessId, v: ProcessId, m: int
) -> bool:
    """True when u and v are adjacent or share at least m neighbors.
    Only meaningful on friendship graphs, so directed input is refused."""
    if g.directed:
        raise GraphError("common-friends test requires an undirected graph")
    if m < 1:
        raise ValueError("m must be at least 1")
    if u not in g.nodes or v not in g.nodes:
        raise GraphError(f"unknown node in common-friends query: {u!r} or {v!r}")
    if u == v:
        return True
    if (u, v) in g.edges:
        return True
    return len(g.successors(u) & g.successors(v)) >= m
