"""Built-in histories and scenarios.

Four small wall histories exercise the checkers:

  fix_a  three friends; a comment propagates slowly, so one reader sees
         the reply to a lost-cat post after the found-cat post.  Fine
         once comment ordering is relaxed, a violation under full
         causality.
  fix_b  a reader observes a comment before ever observing its post,
         which contradicts the reader's own program order.
  fix_c  replies cross posts with no reads by the poster; acceptable
         eventually, not causally.
  fix_d  a directed subscription graph; a far-away author's value stops
         constraining a subscriber once the graph filter drops the
         reads-from edge.

Two scenarios replay the lost-cat story on two replicas with a slow
link, one slowing the comment, one slowing the second post.
"""

from __future__ import annotations

from fractions import Fraction

from .depgraphs import InterDepGraph
from .history import History
from .orders import InterOrderOptions
from .sim import DelayModel, Protocol, Scenario
from .social import ActionKind, WallAction, compile_script


def _friends_among(*names: str) -> frozenset[tuple[str, str]]:
    return frozenset(
        (a, b) for i, a in enumerate(names) for b in names[i + 1 :]
    )


def _post(actor: str, at: int | Fraction, text: str) -> WallAction:
    return WallAction(ActionKind.POST, actor, Fraction(at), text=text, topic=text)


def _comment(actor: str, at: int | Fraction, text: str, topic: str) -> WallAction:
    return WallAction(ActionKind.COMMENT, actor, Fraction(at), text=text, topic=topic)


def _read(actor: str, at: int | Fraction, owner: str) -> WallAction:
    return WallAction(ActionKind.READ_WALL, actor, Fraction(at), owner=owner)


def _compile(actions, friends, returns) -> History:
    skeleton = compile_script(actions, friends)
    return skeleton.with_read_returns(
        {rid: frozenset(rv) for rid, rv in returns.items()}
    )


def fix_a() -> History:
    """Lost cat: alice posts "lost", bob replies "No", alice posts
    "found", bob replies "glad".  Calvin sees the first reply only
    after the second post."""
    actions = [
        _post("alice", 540, "lost"),
        _read("bob", 541, "alice"),
        _read("calvin", 544, "alice"),
        _comment("bob", 545, "No", "lost"),
        _read("alice", 546, "alice"),
        _post("alice", 570, "found"),
        _read("bob", 571, "alice"),
        _read("calvin", 572, "alice"),
        _comment("bob", 580, "glad", "found"),
        _read("alice", 581, "alice"),
        _read("calvin", 582, "alice"),
    ]
    returns = {
        "bob.1": ["alice.1"],
        "calvin.1": ["alice.1"],
        "alice.2": ["bob.2"],
        "bob.3": ["alice.3"],
        "calvin.2": ["alice.3"],
        "alice.4": ["bob.4"],
        "calvin.3": ["bob.2"],
    }
    return _compile(actions, _friends_among("alice", "bob", "calvin"), returns)


def fix_b() -> History:
    """Darren observes "glad" before the "found" post it replies to.
    His own reading order then fights the comment-after-post edge."""
    actions = [
        _post("alice", 540, "lost"),
        _read("bob", 541, "alice"),
        _comment("bob", 545, "No", "lost"),
        _read("alice", 546, "alice"),
        _read("darren", 548, "alice"),
        _post("alice", 570, "found"),
        _read("bob", 571, "alice"),
        _comment("bob", 580, "glad", "found"),
        _read("alice", 581, "alice"),
        _read("darren", 583, "alice"),
        _read("darren", 585, "alice"),
    ]
    returns = {
        "bob.1": ["alice.1"],
        "alice.2": ["bob.2"],
        "darren.1": ["alice.1"],
        "bob.3": ["alice.3"],
        "alice.4": ["bob.4"],
        "darren.2": ["bob.4"],
        "darren.3": ["alice.3"],
    }
    return _compile(actions, _friends_among("alice", "bob", "darren"), returns)


def fix_c() -> History:
    """Alice never reads, so nothing she does acknowledges bob's reply.
    Calvin still sees the reply to "found" before "found" itself."""
    actions = [
        _post("alice", 540, "lost"),
        _read("bob", 542, "alice"),
        _read("calvin", 544, "alice"),
        _post("alice", 570, "found"),
        _read("bob", 572, "alice"),
        _comment("bob", 580, "glad", "found"),
        _read("calvin", 583, "alice"),
        _read("calvin", 590, "alice"),
    ]
    returns = {
        "bob.1": ["alice.1"],
        "calvin.1": ["alice.1"],
        "bob.2": ["alice.2"],
        "calvin.2": ["bob.3"],
        "calvin.3": ["alice.2"],
    }
    return _compile(actions, _friends_among("alice", "bob", "calvin"), returns)


def fix_d() -> tuple[History, InterDepGraph, InterOrderOptions]:
    """Cora subscribes to xena and yuri, but xena does not subscribe to
    yuri.  Yuri's reply may then reach cora without dragging xena's
    post along."""
    actions = [
        _post("xena", 10, "x1"),
        _read("yuri", 12, "xena"),
        _comment("yuri", 14, "y1", "x1"),
        _read("cora", 16, "xena"),
        _read("cora", 18, "xena"),
    ]
    returns = {
        "yuri.1": ["xena.1"],
        "cora.1": ["yuri.2"],
        "cora.2": ["xena.1"],
    }
    h = _compile(actions, _friends_among("xena", "yuri", "cora"), returns)
    graph = InterDepGraph.build(
        ["xena", "yuri", "cora"],
        [("xena", "cora"), ("yuri", "cora")],
        directed=True,
    )
    return h, graph, InterOrderOptions(d=1)


ALL_HISTORY_FIXTURES = {
    "fix-a": fix_a,
    "fix-b": fix_b,
    "fix-c": fix_c,
}


def _lost_cat_script() -> tuple[WallAction, ...]:
    return (
        _post("alice", 0, "lost"),
        _read("bob", 1, "alice"),
        _read("calvin", 4, "alice"),
        _comment("bob", 5, "No", "lost"),
        _read("alice", 6, "alice"),
        _post("alice", 30, "found"),
        _read("bob", 31, "alice"),
        _read("calvin", 34, "alice"),
        _read("calvin", 36, "alice"),
        _comment("bob", 40, "glad", "found"),
        _read("alice", 41, "alice"),
        _read("calvin", 44, "alice"),
    )


def slow_comment_scenario(protocol: Protocol = Protocol.INTRA_CAUSAL, seed: int = 0) -> Scenario:
    """Two replicas, slow first comment.  Full causal delivery must park
    the second post behind the comment; relaxed delivery exposes it at
    the raw link delay."""
    return Scenario(
        replicas=("r1", "r2"),
        homes={"alice": "r1", "bob": "r1", "calvin": "r2"},
        script=_lost_cat_script(),
        delay=DelayModel(
            default=Fraction(3),
            write_overrides={"bob.2": Fraction(10)},
        ),
        protocol=protocol,
        initial_friends=_friends_among("alice", "bob", "calvin"),
        inter_graph=InterDepGraph.complete(["alice", "bob", "calvin"]),
        inter_opts=InterOrderOptions(d=1),
        seed=seed,
    )


def slow_post_scenario(protocol: Protocol = Protocol.EVENTUAL, seed: int = 0) -> Scenario:
    """Two replicas, slow second post.  Unconstrained delivery lets the
    second comment overtake the post it replies to."""
    script = (
        _post("alice", 0, "lost"),
        _read("bob", 1, "alice"),
        _read("calvin", 4, "alice"),
        _comment("bob", 5, "No", "lost"),
        _read("alice", 6, "alice"),
        _post("alice", 30, "found"),
        _read("bob", 31, "alice"),
        _read("calvin", 36, "alice"),
        _comment("bob", 40, "glad", "found"),
        _read("alice", 41, "alice"),
        _read("calvin", 44, "alice"),
        _read("calvin", 61, "alice"),
    )
    return Scenario(
        replicas=("r1", "r2"),
        homes={"alice": "r1", "bob": "r1", "calvin": "r2"},
        script=script,
        delay=DelayModel(
            default=Fraction(3),
            write_overrides={"alice.3": Fraction(10)},
        ),
        protocol=protocol,
        initial_friends=_friends_among("alice", "bob", "calvin"),
        inter_graph=InterDepGraph.complete(["alice", "bob", "calvin"]),
        inter_opts=InterOrderOptions(d=1),
        seed=seed,
    )


def remove_friend_scenario(seed: int = 0) -> Scenario:
    """Alice unfriends bob between two posts.  Any dependency-respecting
    delivery exposes the removal before the second post everywhere, so
    bob's reads never return it."""
    script = (
        _post("alice", 0, "p0"),
        _read("bob", 2, "alice"),
        WallAction(
            ActionKind.REMOVE_FRIEND, "alice", Fraction(5), subject="bob"
        ),
        _post("alice", 8, "job"),
        _read("bob", 10, "alice"),
        _read("bob", 40, "alice"),
        _read("calvin", 41, "alice"),
    )
    return Scenario(
        replicas=("r1", "r2"),
        homes={"alice": "r1", "bob": "r2", "calvin": "r2"},
        script=script,
        delay=DelayModel(default=Fraction(3)),
        protocol=Protocol.INTRA_CAUSAL,
        initial_friends=_friends_among("alice", "bob", "calvin"),
        inter_graph=InterDepGraph.complete(["alice", "bob", "calvin"]),
        inter_opts=InterOrderOptions(d=1),
        seed=seed,
    )


ALL_SCENARIO_FIXTURES = {
    "slow-comment": slow_comment_scenario,
    "slow-post": slow_post_scenario,
    "remove-friend": remove_friend_scenario,
}
