"""JSON encodings for histories, graphs, verdicts, and scenarios.

Times travel as exact decimal strings ("9.05") or fraction strings
("7/3"), never as floats, so a round trip preserves every timestamp
bit-for-bit.  Run metrics are the one place floats appear: they are
measurements, not inputs.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .checkers import Certificate, Verdict
from .depgraphs import InterDepGraph, IntraDepGraph
from .history import (
    AppTag,
    History,
    LocalHistory,
    ObjectId,
    OpKind,
    Operation,
    Serialization,
    TagKind,
    format_time,
    parse_time,
)
from .orders import InterOrderOptions
from .sim import DelayModel, Metrics, Protocol, RunResult, Scenario
from .social import ActionKind, WallAction


class FormatError(ValueError):
    """Raised when a document does not match the expected shape."""


def _require(data: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in data:
        raise FormatError(f"{context} is missing {key!r}")
    return data[key]


# ---------------------------------------------------------------- history

_KIND_NAMES = {
    OpKind.WRITE: "write",
    OpKind.READ: "read",
    OpKind.WALL_READ: "wall_read",
}
_KIND_BY_NAME = {name: kind for kind, name in _KIND_NAMES.items()}


def operation_to_dict(op: Operation) -> dict[str, Any]:
    data: dict[str, Any] = {
        "id": op.id,
        "process": op.process,
        "kind": _KIND_NAMES[op.kind],
        "namespace": op.object.namespace,
        "inv": format_time(op.inv),
        "resp": format_time(op.resp),
    }
    if op.object.key:
        data["key"] = op.object.key
    if op.value is not None:
        data["value"] = op.value
    if op.kind is OpKind.WALL_READ:
        data["returned"] = sorted(op.returned or frozenset())
    elif op.kind is OpKind.READ:
        data["returned"] = op.returned
    if op.tag is not None:
        tag: dict[str, Any] = {"kind": op.tag.kind.value}
        if op.tag.topic is not None:
            tag["topic"] = op.tag.topic
        if op.tag.subject is not None:
            tag["subject"] = op.tag.subject
        data["tag"] = tag
    return data


def operation_from_dict(data: Mapping[str, Any]) -> Operation:
    op_id = _require(data, "id", "operation")
    kind_name = _require(data, "kind", f"operation {op_id}")
    if kind_name not in _KIND_BY_NAME:
        raise FormatError(f"operation {op_id} has unknown kind {kind_name!r}")
    kind = _KIND_BY_NAME[kind_name]
    try:
        inv = parse_time(_require(data, "inv", f"operation {op_id}"))
        resp = parse_time(_require(data, "resp", f"operation {op_id}"))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"operation {op_id}: {exc}")
    returned: Any = None
    if kind is OpKind.WALL_READ:
        raw = data.get("returned")
        if raw is None:
            raise FormatError(f"wall read {op_id} has no returned list")
        if not isinstance(raw, list):
            raise FormatError(f"wall read {op_id} must return a list of ids")
        returned = frozenset(raw)
    elif kind is OpKind.READ:
        returned = data.get("returned")
        if returned is not None and not isinstance(returned, str):
            raise FormatError(f"read {op_id} must return an id or null")
    tag = None
    if "tag" in data and data["tag"] is not None:
        tag_data = data["tag"]
        tag_kind = _require(tag_data, "kind", f"tag of {op_id}")
        try:
            tag = AppTag(
                TagKind(tag_kind),
                topic=tag_data.get("topic"),
                subject=tag_data.get("subject"),
            )
        except ValueError:
            raise FormatError(f"operation {op_id} has unknown tag kind {tag_kind!r}")
    return Operation(
        id=op_id,
        process=_require(data, "process", f"operation {op_id}"),
        kind=kind,
        object=ObjectId(
            _require(data, "namespace", f"operation {op_id}"), data.get("key", "")
        ),
        inv=inv,
        resp=resp,
        value=data.get("value"),
        returned=returned,
        tag=tag,
    )


def history_to_dict(h: History) -> dict[str, Any]:
    return {
        "processes": [l.process for l in h.locals],
        "initial_friends": [list(pair) for pair in sorted(h.initial_friends)],
        "ops": [
            operation_to_dict(op)
            for l in h.locals
            for op in l.ops
        ],
    }


def history_from_dict(data: Mapping[str, Any]) -> History:
    processes = _require(data, "processes", "history")
    if not isinstance(processes, list) or not processes:
        raise FormatError("history needs a non-empty process list")
    raw_friends = data.get("initial_friends", [])
    friends = set()
    for pair in raw_friends:
        if not isinstance(pair, list) or len(pair) != 2:
            raise FormatError(f"initial_friends entry {pair!r} is not a pair")
        a, b = pair
        friends.add((a, b) if a <= b else (b, a))
    ops_by_process: dict[str, list[Operation]] = {p: [] for p in processes}
    for raw in _require(data, "ops", "history"):
        op = operation_from_dict(raw)
        if op.process not in ops_by_process:
            raise FormatError(f"operation {op.id} names unknown process {op.process}")
        ops_by_process[op.process].append(op)
    for process, ops in ops_by_process.items():
        ops.sort(key=lambda op: op.inv)
    return History(
        tuple(LocalHistory(p, tuple(ops_by_process[p])) for p in processes),
        frozenset(friends),
    )


# ----------------------------------------------------------------- graphs


def intra_graph_to_dict(d: IntraDepGraph) -> dict[str, Any]:
    return {
        "process": d.process,
        "nodes": sorted(d.nodes),
        "edges": [list(edge) for edge in sorted(d.edges)],
    }


def intra_graph_from_dict(data: Mapping[str, Any]) -> IntraDepGraph:
    process = _require(data, "process", "intra graph")
    edges = {tuple(edge) for edge in _require(data, "edges", "intra graph")}
    for edge in edges:
        if len(edge) != 2:
            raise FormatError(f"intra graph edge {edge!r} is not a pair")
    nodes = set(data.get("nodes", []))
    for a, b in edges:
        nodes.update((a, b))
    return IntraDepGraph(process, frozenset(nodes), frozenset(edges))


def inter_graph_to_dict(g: InterDepGraph) -> dict[str, Any]:
    edges = g.edges
    if not g.directed:
        edges = frozenset((a, b) for a, b in edges if a <= b)
    return {
        "directed": g.directed,
        "nodes": sorted(g.nodes),
        "edges": [list(edge) for edge in sorted(edges)],
    }


def inter_graph_from_dict(data: Mapping[str, Any]) -> InterDepGraph:
    edges = [tuple(edge) for edge in _require(data, "edges", "inter graph")]
    for edge in edges:
        if len(edge) != 2:
            raise FormatError(f"inter graph edge {edge!r} is not a pair")
    return InterDepGraph.build(
        data.get("nodes", []), edges, directed=bool(data.get("directed", False))
    )


def inter_options_to_dict(opts: InterOrderOptions) -> dict[str, Any]:
    return {
        "d": opts.d,
        "d_by_kind": {kind.value: hops for kind, hops in sorted(opts.d_by_kind.items(), key=lambda kv: kv[0].value)},
        "multiplicity": opts.multiplicity,
    }


def inter_options_from_dict(data: Mapping[str, Any]) -> InterOrderOptions:
    by_kind = {}
    for name, hops in data.get("d_by_kind", {}).items():
        try:
            by_kind[TagKind(name)] = int(hops)
        except ValueError:
            raise FormatError(f"unknown tag kind {name!r} in d_by_kind")
    multiplicity = data.get("multiplicity")
    return InterOrderOptions(
        d=int(data.get("d", 1)),
        d_by_kind=by_kind,
        multiplicity=None if multiplicity is None else int(multiplicity),
    )


# --------------------------------------------------------------- verdicts


def certificate_to_dict(cert: Certificate) -> dict[str, Any]:
    data: dict[str, Any] = {"kind": cert.kind, "ops": list(cert.ops)}
    if cert.process is not None:
        data["process"] = cert.process
    if cert.note:
        data["note"] = cert.note
    return data


def serialization_to_list(s: Serialization) -> list[str]:
    return list(s.ops)


def verdict_to_dict(v: Verdict) -> dict[str, Any]:
    data: dict[str, Any] = {"model": v.model.value, "consistent": v.consistent}
    if v.violation is not None:
        data["violation"] = certificate_to_dict(v.violation)
    if v.witnesses:
        data["witnesses"] = {
            process: serialization_to_list(s) for process, s in sorted(v.witnesses.items())
        }
    if v.witness is not None:
        data["witness"] = serialization_to_list(v.witness)
    return data


# -------------------------------------------------------------- scenarios

_ACTION_NAMES = {
    ActionKind.POST: "post",
    ActionKind.COMMENT: "comment",
    ActionKind.READ_WALL: "read_wall",
    ActionKind.ADD_FRIEND: "add_friend",
    ActionKind.REMOVE_FRIEND: "remove_friend",
}
_ACTION_BY_NAME = {name: kind for kind, name in _ACTION_NAMES.items()}


def action_to_dict(action: WallAction) -> dict[str, Any]:
    body: dict[str, Any] = {"kind": _ACTION_NAMES[action.kind]}
    for attr in ("text", "topic", "owner", "subject"):
        value = getattr(action, attr)
        if value is not None:
            body[attr] = value
    return {"t": format_time(action.at), "client": action.actor, "action": body}


def action_from_dict(data: Mapping[str, Any]) -> WallAction:
    body = _require(data, "action", "script entry")
    kind_name = _require(body, "kind", "script action")
    if kind_name not in _ACTION_BY_NAME:
        raise FormatError(f"unknown action kind {kind_name!r}")
    try:
        at = parse_time(_require(data, "t", "script entry"))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"script entry: {exc}")
    return WallAction(
        kind=_ACTION_BY_NAME[kind_name],
        actor=_require(data, "client", "script entry"),
        at=at,
        text=body.get("text"),
        topic=body.get("topic"),
        owner=body.get("owner"),
        subject=body.get("subject"),
    )


def delay_to_dict(delay: DelayModel) -> dict[str, Any]:
    return {
        "default": format_time(delay.default),
        "links": {
            f"{src}->{dst}": format_time(value)
            for (src, dst), value in sorted(delay.links.items())
        },
        "write_overrides": {
            wid: format_time(factor)
            for wid, factor in sorted(delay.write_overrides.items())
        },
        "jitter": [format_time(delay.jitter[0]), format_time(delay.jitter[1])],
    }


def delay_from_dict(data: Mapping[str, Any]) -> DelayModel:
    links: dict[tuple[str, str], Fraction] = {}
    for key, value in data.get("links", {}).items():
        if "->" not in key:
            raise FormatError(f"link key {key!r} is not 'src->dst'")
        src, dst = key.split("->", 1)
        links[(src, dst)] = parse_time(value)
    jitter_raw = data.get("jitter", ["0", "0"])
    if not isinstance(jitter_raw, list) or len(jitter_raw) != 2:
        raise FormatError("jitter must be a [lo, hi] pair")
    return DelayModel(
        default=parse_time(_require(data, "default", "delay model")),
        links=links,
        write_overrides={
            wid: parse_time(factor)
            for wid, factor in data.get("write_overrides", {}).items()
        },
        jitter=(parse_time(jitter_raw[0]), parse_time(jitter_raw[1])),
    )


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    data: dict[str, Any] = {
        "replicas": list(scenario.replicas),
        "clients": dict(sorted(scenario.homes.items())),
        "initial_friends": [list(pair) for pair in sorted(scenario.initial_friends)],
        "script": [action_to_dict(action) for action in scenario.script],
        "delay": delay_to_dict(scenario.delay),
        "protocol": scenario.protocol.value,
        "seed": scenario.seed,
    }
    if scenario.inter_graph is not None:
        data["inter_graph"] = inter_graph_to_dict(scenario.inter_graph)
    if scenario.inter_opts is not None:
        data["inter_opts"] = inter_options_to_dict(scenario.inter_opts)
    return data


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    protocol_name = _require(data, "protocol", "scenario")
    try:
        protocol = Protocol(protocol_name)
    except ValueError:
        raise FormatError(f"unknown protocol {protocol_name!r}")
    friends = set()
    for pair in data.get("initial_friends", []):
        if not isinstance(pair, list) or len(pair) != 2:
            raise FormatError(f"initial_friends entry {pair!r} is not a pair")
        a, b = pair
        friends.add((a, b) if a <= b else (b, a))
    inter_graph = None
    if data.get("inter_graph") is not None:
        inter_graph = inter_graph_from_dict(data["inter_graph"])
    inter_opts = None
    if data.get("inter_opts") is not None:
        inter_opts = inter_options_from_dict(data["inter_opts"])
    return Scenario(
        replicas=tuple(_require(data, "replicas", "scenario")),
        homes=dict(_require(data, "clients", "scenario")),
        script=tuple(
            action_from_dict(entry) for entry in _require(data, "script", "scenario")
        ),
        delay=delay_from_dict(_require(data, "delay", "scenario")),
        protocol=protocol,
        initial_friends=frozenset(friends),
        inter_graph=inter_graph,
        inter_opts=inter_opts,
        seed=int(data.get("seed", 0)),
    )


# ---------------------------------------------------------------- metrics


def run_result_to_dict(result: RunResult) -> dict[str, Any]:
    metrics = result.metrics
    return {
        "protocol": metrics.protocol.value,
        "visibility": [
            {
                "write": record.write,
                "replica": record.replica,
                "issued": format_time(record.issued),
                "visible": format_time(record.visible),
                "latency": float(record.latency),
            }
            for record in metrics.visibility
        ],
        "mean_latency": (
            None if metrics.mean_latency is None else float(metrics.mean_latency)
        ),
        "max_latency": (
            None if metrics.max_latency is None else float(metrics.max_latency)
        ),
        "dependencies": {
            wid: sorted(deps) for wid, deps in sorted(result.dependencies.items())
        },
        "mean_dependency_count": (
            None
            if metrics.mean_dependencies is None
            else float(metrics.mean_dependencies)
        ),
        "converged": metrics.converged,
    }


# ------------------------------------------------------------------ files


def load_json(path: str | Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})")


def dump_json(data: Any, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2, sort_keys=False)
        handle.write("\n")


def load_history(path: str | Path) -> History:
    return history_from_dict(load_json(path))


def dump_history(h: History, path: str | Path) -> None:
    dump_json(history_to_dict(h), path)


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(load_json(path))


def dump_scenario(scenario: Scenario, path: str | Path) -> None:
    dump_json(scenario_to_dict(scenario), path)
