"""Wall scripts: the application layer above raw histories.

A script is a time-ordered list of wall actions (post, comment, read a
wall, add or remove a friend).  Compiling a script yields a history
skeleton: writes are fully formed and tagged, wall reads carry an
unresolved placeholder until a fixture pins their diffs or a simulator
run observes them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .history import (
    FRIEND_NAMESPACE,
    AppTag,
    FriendshipState,
    History,
    HistoryError,
    LocalHistory,
    ObjectId,
    OpKind,
    Operation,
    ProcessId,
    TagKind,
)

# Duration assigned to each compiled operation.
OP_SPAN = Fraction(1, 1000)


class ActionKind(str, Enum):
    POST = "post"
    COMMENT = "comment"
    READ_WALL = "read_wall"
    ADD_FRIEND = "add_friend"
    REMOVE_FRIEND = "remove_friend"


@dataclass(frozen=True)
class WallAction:
    """One scripted step.  text doubles as the written object's key, so
    every post and comment in a script needs a distinct text."""

    kind: ActionKind
    actor: ProcessId
    at: Fraction
    text: str | None = None
    topic: str | None = None
    owner: ProcessId | None = None
    subject: ProcessId | None = None


def wall_namespace(owner: ProcessId) -> str:
    return f"wall:{owner}"


def compile_script(
    actions: list[WallAction],
    initial_friends: frozenset[tuple[ProcessId, ProcessId]] = frozenset(),
) -> History:
    """Turn a script into a history skeleton.

    Posts land on the actor's wall; comments land on the wall holding
    their topic's post; friendship changes write to a shared friendship
    namespace.  Wall reads get placeholder results.  Ids are
    deterministic: the actor's name dot its action index.
    """
    topic_walls: dict[str, str] = {}
    used_texts: set[str] = set()
    per_actor: dict[ProcessId, list[Operation]] = {}
    counters: dict[ProcessId, int] = {}
    last_at: dict[ProcessId, Fraction] = {}

    for action in sorted(actions, key=lambda a: (a.at, a.actor)):
        actor = action.actor
        if actor in last_at and action.at <= last_at[actor]:
            raise HistoryError(
                f"{actor} has two actions at or before time {action.at}"
            )
        last_at[actor] = action.at
        counters[actor] = counters.get(actor, 0) + 1
        op_id = f"{actor}.{counters[actor]}"
        inv = action.at
        resp = action.at + OP_SPAN

        if action.kind in (ActionKind.POST, ActionKind.COMMENT):
            if not action.text or not action.topic:
                raise HistoryError(f"{action.kind.value} needs text and topic")
            if action.text in used_texts:
                raise HistoryError(f"duplicate message text {action.text!r}")
            used_texts.add(action.text)
            if action.kind is ActionKind.POST:
                namespace = wall_namespace(action.owner or actor)
                if action.topic in topic_walls:
                    raise HistoryError(f"topic {action.topic!r} posted twice")
                topic_walls[action.topic] = namespace
                tag = AppTag(TagKind.POST, topic=action.topic)
            else:
                if action.topic not in topic_walls:
                    raise HistoryError(
                        f"comment on unknown topic {action.topic!r} at {op_id}"
                    )
                namespace = topic_walls[action.topic]
                tag = AppTag(TagKind.COMMENT, topic=action.topic)
            op = Operation(
                id=op_id,
                process=actor,
                kind=OpKind.WRITE,
                object=ObjectId(namespace, action.text),
                inv=inv,
                resp=resp,
                value=action.text,
                tag=tag,
            )
        elif action.kind is ActionKind.READ_WALL:
            if not action.owner:
                raise HistoryError(f"wall read at {op_id} names no owner")
            op = Operation(
                id=op_id,
                process=actor,
                kind=OpKind.WALL_READ,
                object=ObjectId(wall_namespace(action.owner)),
                inv=inv,
                resp=resp,
                tag=AppTag(TagKind.WALL_READ),
            )
        else:
            if not action.subject:
                raise HistoryError(f"friendship change at {op_id} names no subject")
            tag_kind = (
                TagKind.ADD_FRIEND
                if action.kind is ActionKind.ADD_FRIEND
                else TagKind.REMOVE_FRIEND
            )
            op = Operation(
                id=op_id,
                process=actor,
                kind=OpKind.WRITE,
                object=ObjectId(FRIEND_NAMESPACE, op_id),
                inv=inv,
                resp=resp,
                value=f"{tag_kind.value}:{actor}:{action.subject}",
                tag=AppTag(tag_kind, subject=action.subject),
            )
        per_actor.setdefault(actor, []).append(op)

    locals_ = tuple(
        LocalHistory(actor, tuple(ops)) for actor, ops in sorted(per_actor.items())
    )
    return History(locals_, frozenset(initial_friends))


def access_permitted(
    reader: ProcessId,
    author: ProcessId,
    state: FriendshipState,
) -> bool:
    """May reader observe author's wall content right now?

    state is the friendship fold over whatever came before the read: a
    serialization prefix in the checker, a replica's visible writes in
    the simulator.  The latest add or remove between the pair wins;
    untouched pairs fall back to the initial relation.
    """
    return state.friends(reader, author)
