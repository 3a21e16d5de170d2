"""Hand-rolled operation builders shared across test modules."""

from __future__ import annotations

from fractions import Fraction

from conlab import AppTag, History, LocalHistory, ObjectId, OpKind, Operation, TagKind


def w(pid, i, ns="wall:z", key=None, value=None, tag=None, inv=None):
    inv = Fraction(i) if inv is None else inv
    value = value if value is not None else f"v{pid}.{i}"
    return Operation(
        id=f"{pid}.{i}",
        process=pid,
        kind=OpKind.WRITE,
        object=ObjectId(ns, key if key is not None else value),
        inv=inv,
        resp=inv + Fraction(1, 2),
        value=value,
        tag=tag,
    )


def r(pid, i, ns="wall:z", returned=frozenset(), inv=None):
    inv = Fraction(i) if inv is None else inv
    return Operation(
        id=f"{pid}.{i}",
        process=pid,
        kind=OpKind.WALL_READ,
        object=ObjectId(ns),
        inv=inv,
        resp=inv + Fraction(1, 2),
        returned=frozenset(returned) if returned is not None else None,
        tag=AppTag(TagKind.WALL_READ),
    )


def obj_read(pid, i, obj, returned, inv=None):
    inv = Fraction(i) if inv is None else inv
    return Operation(
        id=f"{pid}.{i}",
        process=pid,
        kind=OpKind.READ,
        object=obj,
        inv=inv,
        resp=inv + Fraction(1, 2),
        returned=returned,
    )


def hist(*locals_, friends=frozenset()):
    wrapped = tuple(
        l if isinstance(l, LocalHistory) else LocalHistory(*l) for l in locals_
    )
    return History(wrapped, frozenset(friends))
