"""Execution histories for a replicated wall store.

A history records, per process, the operations that process invoked:
value writes, single-object reads, and wall-diff reads.  A wall-diff
read returns the set of write ids that became newly visible to the
reader since its previous diff on the same wall.  Operations may carry
an application tag (post, comment, friendship change) that downstream
modules use to build dependency graphs.

Timestamps are exact rationals.  They are parsed from decimal strings
and never pass through floats.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping

ProcessId = str
OpId = str

FRIEND_NAMESPACE = "friends"


def parse_time(text: str | int | Fraction) -> Fraction:
    """Parse a timestamp.  Accepts decimal strings ("9.05"), integers,
    fraction strings ("7/2"), and Fractions; never floats."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise TypeError("float timestamps are not exact; pass a string")
    return Fraction(text)


def format_time(value: Fraction) -> str:
    """Render a rational timestamp as an exact decimal string when the
    denominator allows it, else as "numerator/denominator"."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = abs(value.numerator) * 10 ** digits // value.denominator
    text = str(scaled).rjust(digits + 1, "0")
    sign = "-" if value < 0 else ""
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


class OpKind(str, Enum):
    WRITE = "write"
    READ = "read"
    WALL_READ = "wall_read"


class TagKind(str, Enum):
    POST = "post"
    COMMENT = "comment"
    ADD_FRIEND = "add_friend"
    REMOVE_FRIEND = "remove_friend"
    WALL_READ = "wall_read"


# Tag kinds that behave like posts when anchoring dependency edges.
POST_LIKE_KINDS = frozenset({TagKind.POST, TagKind.ADD_FRIEND, TagKind.REMOVE_FRIEND})


@dataclass(frozen=True)
class ObjectId:
    namespace: str
    key: str = ""


@dataclass(frozen=True)
class AppTag:
    kind: TagKind
    topic: str | None = None
    subject: ProcessId | None = None


@dataclass(frozen=True)
class Operation:
    """One invocation: a write, an object read, or a wall-diff read.

    value is set on writes only.  returned is the observed result: a
    value or None for object reads, a frozenset of write ids for wall
    reads (None marks an unresolved placeholder from a compiled
    script).  inv and resp bound the operation's real-time interval.
    """

    id: OpId
    process: ProcessId
    kind: OpKind
    object: ObjectId
    inv: Fraction
    resp: Fraction
    value: str | None = None
    returned: str | frozenset[str] | None = None
    tag: AppTag | None = None

    @property
    def is_write(self) -> bool:
        return self.kind is OpKind.WRITE

    @property
    def is_read(self) -> bool:
        return self.kind is OpKind.READ

    @property
    def is_wall_read(self) -> bool:
        return self.kind is OpKind.WALL_READ

    @property
    def is_friend_op(self) -> bool:
        return self.tag is not None and self.tag.kind in (
            TagKind.ADD_FRIEND,
            TagKind.REMOVE_FRIEND,
        )

    def returned_ids(self) -> frozenset[str]:
        """Write ids observed by a wall read; empty for anything else."""
        if self.is_wall_read and isinstance(self.returned, frozenset):
            return self.returned
        return frozenset()


@dataclass(frozen=True)
class LocalHistory:
    process: ProcessId
    ops: tuple[Operation, ...]

    def __iter__(self) -> Iterator[Operation]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)


def friend_pair(a: ProcessId, b: ProcessId) -> tuple[ProcessId, ProcessId]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class History:
    """A complete execution: one LocalHistory per process plus the
    friendship relation in force before any operation ran."""

    locals: tuple[LocalHistory, ...]
    initial_friends: frozenset[tuple[ProcessId, ProcessId]] = frozenset()

    @property
    def processes(self) -> tuple[ProcessId, ...]:
        return tuple(l.process for l in self.locals)

    @cached_property
    def op_index(self) -> dict[OpId, Operation]:
        index: dict[OpId, Operation] = {}
        for local in self.locals:
            for op in local:
                index[op.id] = op
        return index

    def local(self, process: ProcessId) -> LocalHistory:
        for entry in self.locals:
            if entry.process == process:
                return entry
        raise KeyError(f"unknown process: {process}")

    def operations(self) -> Iterator[Operation]:
        for local in self.locals:
            yield from local

    def op(self, op_id: OpId) -> Operation:
        return self.op_index[op_id]

    @cached_property
    def writes(self) -> tuple[Operation, ...]:
        return tuple(op for op in self.operations() if op.is_write)

    @cached_property
    def write_ids(self) -> frozenset[OpId]:
        return frozenset(w.id for w in self.writes)

    @cached_property
    def reads_from_pairs(self) -> frozenset[tuple[OpId, OpId]]:
        """Edges (write id, read id) for every observed value."""
        by_object_value: dict[tuple[ObjectId, str], OpId] = {}
        for w in self.writes:
            if w.value is not None:
                by_object_value.setdefault((w.object, w.value), w.id)
        pairs: set[tuple[OpId, OpId]] = set()
        for op in self.operations():
            if op.is_wall_read:
                for wid in op.returned_ids():
                    if wid in self.write_ids:
                        pairs.add((wid, op.id))
            elif op.is_read and isinstance(op.returned, str):
                source = by_object_value.get((op.object, op.returned))
                if source is not None:
                    pairs.add((source, op.id))
        return frozenset(pairs)

    def with_read_returns(self, returns: Mapping[OpId, frozenset[str]]) -> History:
        """A copy with wall-read placeholders filled in."""
        new_locals = []
        for local in self.locals:
            ops = tuple(
                Operation(
                    id=op.id,
                    process=op.process,
                    kind=op.kind,
                    object=op.object,
                    inv=op.inv,
                    resp=op.resp,
                    value=op.value,
                    returned=frozenset(returns[op.id]) if op.id in returns else op.returned,
                    tag=op.tag,
                )
                for op in local
            )
            new_locals.append(LocalHistory(local.process, ops))
        return History(tuple(new_locals), self.initial_friends)


@dataclass(frozen=True)
class Serialization:
    """A total order over a ground set of operation ids.  subject names
    the process whose viewpoint the order serializes, or None for a
    single shared order over the whole history."""

    ops: tuple[OpId, ...]
    subject: ProcessId | None = None


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    ops: tuple[OpId, ...] = ()


class HistoryError(ValueError):
    """Raised when an operation is applied to a malformed history."""


class GroundSetError(ValueError):
    """Raised when a serialization does not cover the expected ground set."""


class FriendshipState:
    """Mutable fold of friendship writes over a serialization prefix.

    The latest add/remove between a pair wins; pairs never mentioned
    fall back to the initial friendship relation.
    """

    def __init__(self, initial: Iterable[tuple[ProcessId, ProcessId]]):
        self._initial = frozenset(friend_pair(a, b) for a, b in initial)
        self._state: dict[tuple[ProcessId, ProcessId], TagKind] = {}

    def apply(self, op: Operation) -> tuple[tuple[ProcessId, ProcessId], TagKind | None] | None:
        """Fold one friendship write; returns an undo record."""
        if not op.is_friend_op:
            return None
        assert op.tag is not None and op.tag.subject is not None
        pair = friend_pair(op.process, op.tag.subject)
        previous = self._state.get(pair)
        self._state[pair] = op.tag.kind
        return (pair, previous)

    def undo(self, record: tuple[tuple[ProcessId, ProcessId], TagKind | None] | None) -> None:
        if record is None:
            return
        pair, previous = record
        if previous is None:
            del self._state[pair]
        else:
            self._state[pair] = previous

    def friends(self, a: ProcessId, b: ProcessId) -> bool:
        if a == b:
            return False
        pair = friend_pair(a, b)
        latest = self._state.get(pair)
        if latest is not None:
            return latest is TagKind.ADD_FRIEND
        return pair in self._initial

    def snapshot(self) -> dict[tuple[ProcessId, ProcessId], TagKind]:
        return dict(self._state)


def validate_history(h: History) -> list[Violation]:
    """Structural checks; an empty result means the history is usable."""
    violations: list[Violation] = []
    seen_processes: set[ProcessId] = set()
    seen_ids: set[OpId] = set()

    for local in h.locals:
        if local.process in seen_processes:
            violations.append(
                Violation("duplicate-process", f"process {local.process} listed twice")
            )
        seen_processes.add(local.process)
        previous: Operation | None = None
        for op in local:
            if op.id in seen_ids:
                violations.append(
                    Violation("duplicate-id", f"operation id {op.id} reused", (op.id,))
                )
            seen_ids.add(op.id)
            if op.process != local.process:
                violations.append(
                    Violation(
                        "wrong-process",
                        f"{op.id} carries process {op.process} inside {local.process}'s history",
                        (op.id,),
                    )
                )
            if op.inv >= op.resp:
                violations.append(
                    Violation("bad-interval", f"{op.id} has inv >= resp", (op.id,))
                )
            if previous is not None and op.inv < previous.resp:
                violations.append(
                    Violation(
                        "overlap",
                        f"{previous.id} and {op.id} overlap within process {local.process}",
                        (previous.id, op.id),
                    )
                )
            if op.is_write and op.value is None:
                violations.append(
                    Violation("valueless-write", f"write {op.id} has no value", (op.id,))
                )
            if op.is_friend_op and (op.tag is None or op.tag.subject is None):
                violations.append(
                    Violation(
                        "no-subject",
                        f"friendship write {op.id} names no subject",
                        (op.id,),
                    )
                )
            previous = op

    writes_by_id = {w.id: w for w in h.writes}
    seen_object_values: dict[tuple[ObjectId, str], OpId] = {}
    for w in h.writes:
        if w.value is None:
            continue
        key = (w.object, w.value)
        if key in seen_object_values:
            violations.append(
                Violation(
                    "duplicate-write",
                    f"writes {seen_object_values[key]} and {w.id} both put "
                    f"{w.value!r} into {w.object.namespace}/{w.object.key}",
                    (seen_object_values[key], w.id),
                )
            )
        else:
            seen_object_values[key] = w.id

    object_values: dict[ObjectId, set[str]] = {}
    for w in h.writes:
        if w.value is not None:
            object_values.setdefault(w.object, set()).add(w.value)

    topics_with_posts = {
        op.tag.topic
        for op in h.operations()
        if op.is_write and op.tag is not None and op.tag.kind is TagKind.POST
    }
    for op in h.operations():
        if op.tag is not None and op.tag.kind is TagKind.COMMENT:
            if op.is_write and op.tag.topic not in topics_with_posts:
                violations.append(
                    Violation(
                        "orphan-comment",
                        f"comment {op.id} references topic {op.tag.topic!r} with no post",
                        (op.id,),
                    )
                )

    for local in h.locals:
        claimed: dict[str, set[OpId]] = {}
        for op in local:
            if op.is_wall_read:
                if op.returned is None:
                    violations.append(
                        Violation(
                            "unresolved-read",
                            f"wall read {op.id} still carries a placeholder result",
                            (op.id,),
                        )
                    )
                    continue
                ns_claims = claimed.setdefault(op.object.namespace, set())
                for wid in op.returned_ids():
                    w = writes_by_id.get(wid)
                    if w is None:
                        violations.append(
                            Violation(
                                "unknown-value",
                                f"wall read {op.id} returned nonexistent write {wid}",
                                (op.id,),
                            )
                        )
                        continue
                    if w.object.namespace != op.object.namespace:
                        violations.append(
                            Violation(
                                "bad-diff",
                                f"wall read {op.id} returned {wid} from another namespace",
                                (op.id, wid),
                            )
                        )
                    if w.process == op.process:
                        violations.append(
                            Violation(
                                "own-write-diff",
                                f"wall read {op.id} returned the reader's own write {wid}",
                                (op.id, wid),
                            )
                        )
                    if wid in ns_claims:
                        violations.append(
                            Violation(
                                "reclaimed-write",
                                f"{wid} appears in two diffs of {op.process} "
                                f"on {op.object.namespace}",
                                (op.id, wid),
                            )
                        )
                    if w.inv >= op.resp:
                        violations.append(
                            Violation(
                                "future-read",
                                f"wall read {op.id} returned {wid} before it was invoked",
                                (op.id, wid),
                            )
                        )
                    ns_claims.add(wid)
            elif op.is_read and isinstance(op.returned, str):
                known = object_values.get(op.object, set())
                if op.returned not in known:
                    violations.append(
                        Violation(
                            "unknown-value",
                            f"read {op.id} returned {op.returned!r}, never written to "
                            f"{op.object.namespace}/{op.object.key}",
                            (op.id,),
                        )
                    )
    return violations


def project_pi_plus_w(h: History, process: ProcessId) -> frozenset[OpId]:
    """Ground set for one process's viewpoint: its own operations plus
    every write in the history."""
    if process not in h.processes:
        raise HistoryError(f"unknown process: {process}")
    own = {op.id for op in h.local(process)}
    return frozenset(own | set(h.write_ids))


def derive_reads_from(h: History) -> frozenset[tuple[OpId, OpId]]:
    """Edges write -> read for every observed value.  Wall reads yield
    one edge per returned write id; object reads resolve their value to
    the unique write of that value."""
    return h.reads_from_pairs


class SerializationState:
    """Incremental legality engine over a growing serialization prefix.

    Writes are appended; a read may only be appended when its recorded
    result matches what the prefix dictates: object reads must return
    the latest preceding write to their object (or nothing), and wall
    reads must return exactly the permitted, unclaimed writes by other
    processes that precede them in the prefix.  Friendship writes flip
    access control for everything placed after them.
    """

    def __init__(self, h: History):
        self.history = h
        self.friends = FriendshipState(h.initial_friends)
        self.wall_writes: dict[str, list[Operation]] = {}
        self.last_write: dict[ObjectId, list[Operation]] = {}
        self.claimed: dict[tuple[ProcessId, str], set[OpId]] = {}

    def required_diff(self, op: Operation) -> frozenset[OpId]:
        ns = op.object.namespace
        claimed = self.claimed.get((op.process, ns), set())
        required = {
            w.id
            for w in self.wall_writes.get(ns, ())
            if w.process != op.process
            and self.friends.friends(op.process, w.process)
            and w.id not in claimed
        }
        return frozenset(required)

    def read_is_legal(self, op: Operation) -> bool:
        if op.is_wall_read:
            return op.returned_ids() == self.required_diff(op)
        if op.is_read:
            stack = self.last_write.get(op.object)
            current = stack[-1].value if stack else None
            return op.returned == current
        return True

    def place(self, op: Operation) -> tuple | None:
        """Append op unconditionally; returns an undo record."""
        if op.is_write:
            self.wall_writes.setdefault(op.object.namespace, []).append(op)
            self.last_write.setdefault(op.object, []).append(op)
            friend_undo = self.friends.apply(op)
            return ("write", op, friend_undo)
        if op.is_wall_read:
            key = (op.process, op.object.namespace)
            added = op.returned_ids()
            self.claimed.setdefault(key, set()).update(added)
            return ("wall_read", key, added)
        return None

    def unplace(self, record: tuple | None) -> None:
        if record is None:
            return
        if record[0] == "write":
            _, op, friend_undo = record
            self.wall_writes[op.object.namespace].pop()
            self.last_write[op.object].pop()
            self.friends.undo(friend_undo)
        else:
            _, key, added = record
            self.claimed[key] -= added


def is_legal_serialization(
    s: Serialization, h: History, subject: ProcessId | None = None
) -> bool:
    """True when s is a legal total order over its ground set.

    The ground set must be exactly the whole history (subject None) or
    the subject's operations plus all writes.  Legality is result
    exactness only; order constraints are checked elsewhere.
    """
    if subject is None:
        subject = s.subject
    expected = (
        frozenset(h.op_index) if subject is None else project_pi_plus_w(h, subject)
    )
    actual = frozenset(s.ops)
    if actual != expected or len(s.ops) != len(expected):
        raise GroundSetError(
            f"serialization covers {len(actual)} ops, expected the "
            f"{len(expected)}-op ground set"
        )
    state = SerializationState(h)
    for op_id in s.ops:
        op = h.op(op_id)
        if not state.read_is_legal(op):
            return False
        state.place(op)
    return True


def enumerate_legal_serializations(
    h: History, subject: ProcessId | None = None
) -> Iterator[tuple[OpId, ...]]:
    """Every legal order of the ground set, by brute permutation.  Only
    sensible for tiny ground sets; used as an oracle in tests."""
    if subject is None:
        ground = sorted(h.op_index)
    else:
        ground = sorted(project_pi_plus_w(h, subject))
    for perm in itertools.permutations(ground):
        if is_legal_serialization(Serialization(perm, subject), h, subject):
            yield perm
