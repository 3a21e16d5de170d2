"""History and scenario generators for the test batteries.

Three families:

  enumerate_small_histories  every wall history up to a size bound, in
                             a canonical form that avoids relabelled
                             duplicates; used to confirm that chain
                             graphs and saturated social graphs
                             collapse the relaxed models onto the
                             strict ones.
  random_history             seeded valid-but-arbitrary histories whose
                             reads may skip or reorder writes; used to
                             confirm refutation certificates are sound.
  random_scenario            seeded executable scripts safe under every
                             delivery protocol; used to cross-validate
                             the simulator against the checkers.

Scripts place actions on a slot grid whose spacing exceeds the largest
possible delay, so every write issued in one slot is visible everywhere
by the next.  Comments are only generated on topics their author has
provably observed by then, which keeps dependency derivation total.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterator, Sequence

from .depgraphs import InterDepGraph
from .history import (
    FRIEND_NAMESPACE,
    AppTag,
    History,
    LocalHistory,
    ObjectId,
    OpKind,
    Operation,
    TagKind,
    friend_pair,
)
from .orders import InterOrderOptions
from .sim import DelayModel, Protocol, Scenario
from .social import ActionKind, WallAction

WALL = "wall:z"
SLOT = Fraction(100)


def _write_op(i: int, process: str, span: Fraction = Fraction(1, 2)) -> Operation:
    value = f"v{i}"
    return Operation(
        id=f"{process}.{i}",
        process=process,
        kind=OpKind.WRITE,
        object=ObjectId(WALL, value),
        inv=Fraction(i),
        resp=Fraction(i) + span,
        value=value,
        tag=AppTag(TagKind.POST, topic=value),
    )


def _read_op(
    i: int, process: str, returned: frozenset[str], span: Fraction = Fraction(1, 2)
) -> Operation:
    return Operation(
        id=f"{process}.{i}",
        process=process,
        kind=OpKind.WALL_READ,
        object=ObjectId(WALL),
        inv=Fraction(i),
        resp=Fraction(i) + span,
        returned=returned,
        tag=AppTag(TagKind.WALL_READ),
    )


def _canonical_assignments(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """Sequences of process indices in first-occurrence order using all
    of 0..k-1, so relabelling a history never produces a second copy."""

    def extend(prefix: tuple[int, ...], used: int) -> Iterator[tuple[int, ...]]:
        if len(prefix) == n:
            if used == k:
                yield prefix
            return
        if used + (n - len(prefix)) < k:
            return
        for p in range(min(used + 1, k)):
            yield from extend(prefix + (p,), max(used, p + 1))

    yield from extend((), 0)


def enumerate_small_histories(
    max_ops: int = 6, process_counts: Sequence[int] = (2, 3)
) -> Iterator[History]:
    """All histories on one wall with up to max_ops operations: every
    canonical process assignment, every write/read pattern, and every
    empty-or-singleton diff assignment that respects time and the
    no-second-return rule."""
    for n in range(2, max_ops + 1):
        for k in process_counts:
            if k > n:
                continue
            names = [f"p{j + 1}" for j in range(k)]
            friends = frozenset(
                friend_pair(a, b) for i, a in enumerate(names) for b in names[i + 1 :]
            )
            for assignment in _canonical_assignments(n, k):
                for kinds in product("wr", repeat=n):
                    yield from _expand_returns(n, names, assignment, kinds, friends)


def _expand_returns(
    n: int,
    names: list[str],
    assignment: tuple[int, ...],
    kinds: tuple[str, ...],
    friends: frozenset[tuple[str, str]],
) -> Iterator[History]:
    ops: list[Operation | None] = [None] * n

    def build(i: int, claimed: dict[str, set[str]]) -> Iterator[History]:
        if i == n:
            locals_: dict[str, list[Operation]] = {name: [] for name in names}
            for op in ops:
                assert op is not None
                locals_[op.process].append(op)
            yield History(
                tuple(
                    LocalHistory(name, tuple(seq)) for name, seq in locals_.items()
                ),
                friends,
            )
            return
        process = names[assignment[i]]
        if kinds[i] == "w":
            ops[i] = _write_op(i, process)
            yield from build(i + 1, claimed)
            ops[i] = None
            return
        choices: list[frozenset[str]] = [frozenset()]
        for j in range(i):
            w = ops[j]
            assert w is not None
            if (
                w.is_write
                and w.process != process
                and w.id not in claimed.get(process, set())
            ):
                choices.append(frozenset({w.id}))
        for returned in choices:
            ops[i] = _read_op(i, process, returned)
            if returned:
                claimed.setdefault(process, set()).update(returned)
            yield from build(i + 1, claimed)
            if returned:
                claimed[process].difference_update(returned)
            ops[i] = None

    yield from build(0, {})


def random_history(
    rng: random.Random,
    max_ops: int = 12,
    max_processes: int = 3,
    allow_comments: bool = True,
    allow_friend_ops: bool = True,
) -> History:
    """A valid history whose reads return arbitrary eligible subsets,
    so most draws are inconsistent under the stricter models."""
    n = rng.randint(3, max_ops)
    k = rng.randint(2, min(max_processes, n))
    names = [f"p{j + 1}" for j in range(k)]
    pairs = [friend_pair(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    friends = frozenset(p for p in pairs if rng.random() < 0.8)

    ops: list[Operation] = []
    busy_until: dict[str, Fraction] = {name: Fraction(0) for name in names}
    claimed: dict[str, set[str]] = {name: set() for name in names}
    touched: dict[str, set[str]] = {name: set() for name in names}
    posted_topics: list[tuple[str, str]] = []  # (topic, author)

    for i in range(n):
        t = Fraction(i)
        free = [name for name in names if busy_until[name] <= t]
        if not free:
            free = [min(names, key=lambda m: busy_until[m])]
            t = busy_until[free[0]]
        process = rng.choice(free)
        span = rng.choice([Fraction(1, 2), Fraction(1, 2), Fraction(3, 2)])
        busy_until[process] = t + span + Fraction(1, 10)
        op_id = f"{process}.{i}"

        roll = rng.random()
        if allow_friend_ops and roll < 0.12 and k >= 2:
            subject = rng.choice([m for m in names if m != process])
            tag_kind = rng.choice([TagKind.ADD_FRIEND, TagKind.REMOVE_FRIEND])
            ops.append(
                Operation(
                    id=op_id,
                    process=process,
                    kind=OpKind.WRITE,
                    object=ObjectId(FRIEND_NAMESPACE, op_id),
                    inv=t,
                    resp=t + span,
                    value=f"{tag_kind.value}:{process}:{subject}",
                    tag=AppTag(tag_kind, subject=subject),
                )
            )
        elif roll < 0.55:
            commentable = sorted(touched[process])
            if allow_comments and commentable and rng.random() < 0.4:
                topic = rng.choice(commentable)
                value = f"v{i}"
                ops.append(
                    Operation(
                        id=op_id,
                        process=process,
                        kind=OpKind.WRITE,
                        object=ObjectId(WALL, value),
                        inv=t,
                        resp=t + span,
                        value=value,
                        tag=AppTag(TagKind.COMMENT, topic=topic),
                    )
                )
            else:
                value = f"v{i}"
                ops.append(
                    Operation(
                        id=op_id,
                        process=process,
                        kind=OpKind.WRITE,
                        object=ObjectId(WALL, value),
                        inv=t,
                        resp=t + span,
                        value=value,
                        tag=AppTag(TagKind.POST, topic=value),
                    )
                )
                posted_topics.append((value, process))
                touched[process].add(value)
        else:
            eligible = [
                w
                for w in ops
                if w.is_write
                and w.object.namespace == WALL
                and w.process != process
                and w.inv < t
                and w.id not in claimed[process]
            ]
            size = rng.randint(0, min(3, len(eligible)))
            chosen = rng.sample(eligible, size) if size else []
            returned = frozenset(w.id for w in chosen)
            claimed[process].update(returned)
            for w in chosen:
                if w.tag is not None and w.tag.topic:
                    touched[process].add(w.tag.topic)
            ops.append(
                Operation(
                    id=op_id,
                    process=process,
                    kind=OpKind.WALL_READ,
                    object=ObjectId(WALL),
                    inv=t,
                    resp=t + span,
                    returned=returned,
                    tag=AppTag(TagKind.WALL_READ),
                )
            )

    locals_: dict[str, list[Operation]] = {name: [] for name in names}
    for op in ops:
        locals_[op.process].append(op)
    return History(
        tuple(LocalHistory(name, tuple(seq)) for name, seq in locals_.items()),
        friends,
    )


@dataclass
class _ScriptDraft:
    actions: list[WallAction] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)
    write_ids: list[str] = field(default_factory=list)

    def add(self, action: WallAction, is_write: bool) -> str:
        self.actions.append(action)
        count = self.counters.get(action.actor, 0) + 1
        self.counters[action.actor] = count
        op_id = f"{action.actor}.{count}"
        if is_write:
            self.write_ids.append(op_id)
        return op_id


def random_scenario(
    rng: random.Random,
    protocol: Protocol = Protocol.EVENTUAL,
    max_slots: int = 7,
) -> Scenario:
    """A script on the slot grid, valid under every protocol.

    Comment eligibility is tracked conservatively: a topic counts as
    observed by a client only when the client posted it, or read the
    right wall at least one slot after both the post and every relevant
    friendship change, while author and reader were friends."""
    n_replicas = rng.randint(2, 3)
    replicas = tuple(f"r{j + 1}" for j in range(n_replicas))
    n_clients = rng.randint(2, 4)
    clients = [f"c{j + 1}" for j in range(n_clients)]
    homes = {c: rng.choice(replicas) for c in clients}
    pairs = [friend_pair(a, b) for i, a in enumerate(clients) for b in clients[i + 1 :]]
    initial = frozenset(p for p in pairs if rng.random() < 0.8)

    graph_edges = [p for p in pairs if rng.random() < 0.7]
    inter_graph = InterDepGraph.build(clients, graph_edges, directed=False)
    inter_opts = InterOrderOptions(
        d=rng.randint(1, 2),
        multiplicity=rng.choice([None, None, None, 1]),
    )

    draft = _ScriptDraft()
    friends_now: set[tuple[str, str]] = set(initial)
    # (topic, author, owner, slot it is surely everywhere)
    posts: list[tuple[str, str, str, int]] = []
    touched: dict[str, set[str]] = {c: set() for c in clients}
    touch_slot: dict[tuple[str, str], int] = {}
    topic_counter = 0
    overrides: dict[str, Fraction] = {}

    slots = rng.randint(3, max_slots)
    for slot in range(slots):
        t = SLOT * slot
        friend_changes_this_slot: set[tuple[str, str]] = set()
        for client in clients:
            if rng.random() > 0.55:
                continue
            commentable = [
                topic
                for topic in sorted(touched[client])
                if touch_slot.get((client, topic), slot) < slot
            ]
            roll = rng.random()
            if roll < 0.30:
                topic_counter += 1
                topic = f"t{topic_counter}"
                op_id = draft.add(
                    WallAction(ActionKind.POST, client, t, text=topic, topic=topic),
                    is_write=True,
                )
                posts.append((topic, client, client, slot))
                touched[client].add(topic)
                touch_slot.setdefault((client, topic), slot)
                if rng.random() < 0.25:
                    overrides[op_id] = Fraction(rng.randint(2, 3))
            elif roll < 0.45 and commentable:
                topic = rng.choice(commentable)
                topic_counter += 1
                text = f"t{topic_counter}"
                draft.add(
                    WallAction(ActionKind.COMMENT, client, t, text=text, topic=topic),
                    is_write=True,
                )
            elif roll < 0.55 and len(clients) > 1 and rng.random() < 0.5:
                subject = rng.choice([m for m in clients if m != client])
                pair = friend_pair(client, subject)
                if pair in friend_changes_this_slot:
                    continue
                friend_changes_this_slot.add(pair)
                if pair in friends_now:
                    kind = ActionKind.REMOVE_FRIEND
                    friends_now.discard(pair)
                else:
                    kind = ActionKind.ADD_FRIEND
                    friends_now.add(pair)
                draft.add(
                    WallAction(kind, client, t, subject=subject), is_write=True
                )
            else:
                owner = rng.choice(clients)
                draft.add(
                    WallAction(ActionKind.READ_WALL, client, t, owner=owner),
                    is_write=False,
                )
                for topic, author, wall_owner, post_slot in posts:
                    if wall_owner != owner or post_slot >= slot:
                        continue
                    pair = friend_pair(client, author)
                    permitted = client == author or pair in friends_now
                    if permitted and pair not in friend_changes_this_slot:
                        touched[client].add(topic)
                        touch_slot.setdefault((client, topic), slot)

    links = {}
    for src in replicas:
        for dst in replicas:
            if src != dst and rng.random() < 0.4:
                links[(src, dst)] = Fraction(rng.randint(1, 8))
    jitter_hi = rng.choice([Fraction(0), Fraction(0), Fraction(1, 2)])
    delay = DelayModel(
        default=Fraction(rng.randint(2, 5)),
        links=links,
        write_overrides=overrides,
        jitter=(Fraction(0), jitter_hi),
    )
    return Scenario(
        replicas=replicas,
        homes=homes,
        script=tuple(draft.actions),
        delay=delay,
        protocol=protocol,
        initial_friends=initial,
        inter_graph=inter_graph,
        inter_opts=inter_opts,
        seed=rng.randrange(2**32),
    )


def enumerate_removal_histories(max_reads: int = 3) -> Iterator[History]:
    """Histories where alice posts, unfriends bob, posts again, and bob
    reads any combination of the two posts afterwards."""
    alice_ops = (
        Operation(
            id="alice.1",
            process="alice",
            kind=OpKind.WRITE,
            object=ObjectId("wall:alice", "p0"),
            inv=Fraction(0),
            resp=Fraction(1, 2),
            value="p0",
            tag=AppTag(TagKind.POST, topic="p0"),
        ),
        Operation(
            id="alice.2",
            process="alice",
            kind=OpKind.WRITE,
            object=ObjectId(FRIEND_NAMESPACE, "alice.2"),
            inv=Fraction(1),
            resp=Fraction(3, 2),
            value="remove_friend:alice:bob",
            tag=AppTag(TagKind.REMOVE_FRIEND, subject="bob"),
        ),
        Operation(
            id="alice.3",
            process="alice",
            kind=OpKind.WRITE,
            object=ObjectId("wall:alice", "job"),
            inv=Fraction(2),
            resp=Fraction(5, 2),
            value="job",
            tag=AppTag(TagKind.POST, topic="job"),
        ),
    )
    friends = frozenset({("alice", "bob")})
    for n_reads in range(0, max_reads + 1):
        slot_options = range(n_reads + 1)  # 0 = never returned
        for p0_at, job_at in product(slot_options, repeat=2):
            reads = []
            for r in range(1, n_reads + 1):
                returned = set()
                if p0_at == r:
                    returned.add("alice.1")
                if job_at == r:
                    returned.add("alice.3")
                reads.append(
                    Operation(
                        id=f"bob.{r}",
                        process="bob",
                        kind=OpKind.WALL_READ,
                        object=ObjectId("wall:alice"),
                        inv=Fraction(10 + r),
                        resp=Fraction(10 + r) + Fraction(1, 2),
                        returned=frozenset(returned),
                        tag=AppTag(TagKind.WALL_READ),
                    )
                )
            yield History(
                (
                    LocalHistory("alice", alice_ops),
                    LocalHistory("bob", tuple(reads)),
                ),
                friends,
            )


def random_removal_scenario(rng: random.Random) -> Scenario:
    """Unfriend-then-post on the slot grid with randomized placement,
    delays, homes, and extra onlooker traffic."""
    n_replicas = rng.randint(2, 3)
    replicas = tuple(f"r{j + 1}" for j in range(n_replicas))
    clients = ["alice", "bob", "calvin"]
    homes = {c: rng.choice(replicas) for c in clients}
    initial = frozenset(
        {("alice", "bob"), ("alice", "calvin"), ("bob", "calvin")}
    )
    actions = [
        WallAction(ActionKind.POST, "alice", SLOT * 0, text="p0", topic="p0"),
        WallAction(ActionKind.REMOVE_FRIEND, "alice", SLOT * 1, subject="bob"),
        WallAction(ActionKind.POST, "alice", SLOT * 2, text="job", topic="job"),
    ]
    read_slots = sorted(rng.sample(range(7), rng.randint(1, 4)))
    for idx, slot in enumerate(read_slots):
        actions.append(
            WallAction(
                ActionKind.READ_WALL,
                "bob",
                SLOT * slot + Fraction(idx + 1),
                owner="alice",
            )
        )
    for slot in sorted(rng.sample(range(7), rng.randint(0, 3))):
        actions.append(
            WallAction(
                ActionKind.READ_WALL,
                "calvin",
                SLOT * slot + Fraction(9),
                owner="alice",
            )
        )
    delay = DelayModel(
        default=Fraction(rng.randint(2, 6)),
        jitter=(Fraction(0), rng.choice([Fraction(0), Fraction(1, 2)])),
    )
    return Scenario(
        replicas=replicas,
        homes=homes,
        script=tuple(sorted(actions, key=lambda a: (a.at, a.actor))),
        delay=delay,
        protocol=Protocol.INTRA_CAUSAL,
        initial_friends=initial,
        inter_graph=InterDepGraph.complete(clients),
        inter_opts=InterOrderOptions(d=1),
        seed=rng.randrange(2**32),
    )
