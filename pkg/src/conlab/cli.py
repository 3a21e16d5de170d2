"""Command line interface.

Subcommands: check a history against a model, simulate a scenario,
compare protocols on one scenario (optionally rendering a report
directory), derive dependency graphs, and dump the built-in fixtures.

Exit codes: 0 on success (check: consistent), 1 when a check finds the
history inconsistent, 2 for anything that prevented an answer (bad
files, invalid histories, missing graphs, search bounds).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import fixtures as fixtures_mod
from .checkers import (
    GRAPH_MODELS,
    CheckerError,
    InvalidHistoryError,
    ModelId,
    SearchBoundExceeded,
    check,
)
from .depgraphs import GraphError, build_intra_graph, build_intra_graphs, chain_graph
from .history import HistoryError, TagKind
from .jsonio import (
    FormatError,
    dump_history,
    dump_json,
    inter_graph_from_dict,
    inter_graph_to_dict,
    inter_options_to_dict,
    intra_graph_from_dict,
    intra_graph_to_dict,
    load_history,
    load_json,
    load_scenario,
    run_result_to_dict,
    scenario_to_dict,
    verdict_to_dict,
)
from .orders import InterOrderOptions
from .sim import Protocol, RunResult, Scenario, SimulationError, run


def _dashed(name: str) -> str:
    return re.sub(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])", "-", name).lower()


_MODEL_BY_ALIAS = {}
for _model in ModelId:
    _MODEL_BY_ALIAS[_model.value.lower()] = _model
    _MODEL_BY_ALIAS[_dashed(_model.value)] = _model

MODEL_CHOICES = sorted({_dashed(m.value) for m in ModelId})
PROTOCOL_CHOICES = [p.value for p in Protocol]


class CliError(Exception):
    """Fatal usage or input problem; maps to exit code 2."""


def _parse_model(name: str) -> ModelId:
    model = _MODEL_BY_ALIAS.get(name.lower())
    if model is None:
        raise CliError(
            f"unknown model {name!r}; choose from {', '.join(MODEL_CHOICES)}"
        )
    return model


def _parse_d_by_kind(text: str) -> dict[TagKind, int]:
    table: dict[TagKind, int] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise CliError(f"--d-by-kind entry {item!r} is not kind=hops")
        kind_name, _, hops = item.partition("=")
        try:
            kind = TagKind(kind_name.strip())
        except ValueError:
            raise CliError(f"unknown tag kind {kind_name!r} in --d-by-kind")
        try:
            table[kind] = int(hops)
        except ValueError:
            raise CliError(f"--d-by-kind hops {hops!r} is not an integer")
    return table


def _load_graphs(path: str):
    data = load_json(path)
    if isinstance(data, dict) and "graphs" in data:
        data = data["graphs"]
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise CliError(f"{path}: expected an intra graph or a list of them")
    graphs = {}
    for entry in data:
        graph = intra_graph_from_dict(entry)
        graphs[graph.process] = graph
    return graphs


def _cmd_check(args: argparse.Namespace) -> int:
    model = _parse_model(args.model)
    h = load_history(args.history)
    graphs = None
    if model in GRAPH_MODELS:
        if args.graphs:
            graphs = _load_graphs(args.graphs)
        elif args.chain_graphs:
            graphs = {l.process: chain_graph(l) for l in h.locals}
        else:
            try:
                graphs = build_intra_graphs(h)
            except GraphError as exc:
                raise CliError(f"cannot derive dependency graphs: {exc}")
    inter_graph = None
    opts = None
    if model is ModelId.INTER_CAUSAL:
        if not args.inter_graph:
            raise CliError("inter-causal checking needs --inter-graph")
        inter_graph = inter_graph_from_dict(load_json(args.inter_graph))
        opts = InterOrderOptions(
            d=args.d,
            d_by_kind=_parse_d_by_kind(args.d_by_kind) if args.d_by_kind else {},
            multiplicity=args.m,
        )
    try:
        verdict = check(
            h,
            model,
            graphs=graphs,
            inter_graph=inter_graph,
            opts=opts,
            max_search=args.max_search,
        )
    except InvalidHistoryError as exc:
        lines = [f"invalid history ({len(exc.violations)} problems):"]
        lines += [f"  [{v.code}] {v.message}" for v in exc.violations]
        raise CliError("\n".join(lines))
    except SearchBoundExceeded as exc:
        raise CliError(f"{exc}; raise --max-search to allow a larger search")

    if args.format == "json":
        print(json.dumps(verdict_to_dict(verdict), indent=2))
    else:
        print(f"model: {verdict.model.value}")
        print(f"consistent: {'yes' if verdict.consistent else 'no'}")
        if verdict.violation is not None:
            cert = verdict.violation
            where = f" process={cert.process}" if cert.process else ""
            print(f"violation: {cert.kind}{where} ops={','.join(cert.ops)}")
            if cert.note:
                print(f"  {cert.note}")
        for process, witness in sorted(verdict.witnesses.items()):
            print(f"witness[{process}]: {' '.join(witness.ops)}")
        if verdict.witness is not None:
            print(f"witness: {' '.join(verdict.witness.ops)}")
    return 0 if verdict.consistent else 1


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    protocol = scenario.protocol
    if getattr(args, "protocol", None):
        protocol = Protocol(args.protocol)
    seed = scenario.seed if args.seed is None else args.seed
    return Scenario(
        replicas=scenario.replicas,
        homes=scenario.homes,
        script=scenario.script,
        delay=scenario.delay,
        protocol=protocol,
        initial_friends=scenario.initial_friends,
        inter_graph=scenario.inter_graph,
        inter_opts=scenario.inter_opts,
        seed=seed,
    )


def _print_run_text(result: RunResult) -> None:
    metrics = result.metrics
    print(f"protocol: {metrics.protocol.value}")
    print(f"converged: {'yes' if metrics.converged else 'no'}")
    if metrics.mean_latency is not None:
        print(f"mean latency: {float(metrics.mean_latency):g}")
        print(f"max latency: {float(metrics.max_latency):g}")
    print(f"writes: {len(result.dependencies)}")
    for record in metrics.visibility:
        print(
            f"  {record.write} @ {record.replica}: "
            f"issued {float(record.issued):g}, visible {float(record.visible):g} "
            f"(latency {float(record.latency):g})"
        )


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    result = run(scenario)
    if args.history_out:
        dump_history(result.history, args.history_out)
    if args.metrics_out:
        dump_json(run_result_to_dict(result), args.metrics_out)
    if args.format == "json":
        print(json.dumps(run_result_to_dict(result), indent=2))
    else:
        _print_run_text(result)
        if args.history_out:
            print(f"history written to {args.history_out}")
        if args.metrics_out:
            print(f"metrics written to {args.metrics_out}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    if args.protocols:
        try:
            protocols = [Protocol(p.strip()) for p in args.protocols.split(",") if p.strip()]
        except ValueError as exc:
            raise CliError(f"unknown protocol in --protocols: {exc}")
    else:
        protocols = list(Protocol)
    results: dict[Protocol, RunResult] = {}
    for protocol in protocols:
        results[protocol] = run(scenario.with_protocol(protocol))
    if args.format == "json":
        print(
            json.dumps(
                {p.value: run_result_to_dict(r) for p, r in results.items()}, indent=2
            )
        )
    else:
        header = f"{'protocol':<14} {'mean':>8} {'max':>8} {'deps':>6} converged"
        print(header)
        print("-" * len(header))
        for protocol, result in results.items():
            metrics = result.metrics
            mean = "-" if metrics.mean_latency is None else f"{float(metrics.mean_latency):.3f}"
            worst = "-" if metrics.max_latency is None else f"{float(metrics.max_latency):.3f}"
            deps = (
                "-"
                if metrics.mean_dependencies is None
                else f"{float(metrics.mean_dependencies):.2f}"
            )
            print(
                f"{protocol.value:<14} {mean:>8} {worst:>8} {deps:>6} "
                f"{'yes' if metrics.converged else 'no'}"
            )
    if args.report_dir:
        from .report import write_report

        paths = write_report(results, args.report_dir)
        for path in paths:
            print(f"wrote {path}")
    return 0


def _cmd_graph(args: argparse.Namespace) -> int:
    h = load_history(args.history)
    locals_ = list(h.locals)
    if args.process:
        try:
            locals_ = [h.local(args.process)]
        except KeyError:
            raise CliError(f"history has no process {args.process!r}")
    graphs = []
    for local in locals_:
        try:
            if args.kind == "chain":
                graphs.append(chain_graph(local))
            else:
                graphs.append(build_intra_graph(local, h))
        except GraphError as exc:
            raise CliError(f"cannot build graph for {local.process}: {exc}")
    payload = [intra_graph_to_dict(g) for g in graphs]
    body = payload[0] if len(payload) == 1 else payload
    if args.out:
        dump_json(body, args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(body, indent=2))
    return 0


def _cmd_fixtures(args: argparse.Namespace) -> int:
    if not args.dir:
        print("history fixtures: " + ", ".join(sorted(fixtures_mod.ALL_HISTORY_FIXTURES)) + ", fix-d")
        print("scenario fixtures: " + ", ".join(sorted(fixtures_mod.ALL_SCENARIO_FIXTURES)))
        print("pass --dir DIR to write them all as JSON files")
        return 0
    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, builder in sorted(fixtures_mod.ALL_HISTORY_FIXTURES.items()):
        path = out / f"{name}.history.json"
        dump_history(builder(), path)
        written.append(path)
    fix_d_history, fix_d_graph, fix_d_opts = fixtures_mod.fix_d()
    path = out / "fix-d.history.json"
    dump_history(fix_d_history, path)
    written.append(path)
    path = out / "fix-d.inter-graph.json"
    dump_json(inter_graph_to_dict(fix_d_graph), path)
    written.append(path)
    path = out / "fix-d.inter-opts.json"
    dump_json(inter_options_to_dict(fix_d_opts), path)
    written.append(path)
    for name, builder in sorted(fixtures_mod.ALL_SCENARIO_FIXTURES.items()):
        path = out / f"{name}.scenario.json"
        dump_json(scenario_to_dict(builder()), path)
        written.append(path)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conlab",
        description="Consistency laboratory: check histories, simulate "
        "replicated walls, and compare delivery protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="check a history against a model")
    p_check.add_argument("history", help="history JSON file")
    p_check.add_argument(
        "--model", required=True, help="one of: " + ", ".join(MODEL_CHOICES)
    )
    p_check.add_argument(
        "--graphs", help="intra dependency graphs JSON (default: derive from tags)"
    )
    p_check.add_argument(
        "--chain-graphs",
        action="store_true",
        help="use program-order chains instead of derived graphs",
    )
    p_check.add_argument("--inter-graph", help="inter-process graph JSON")
    p_check.add_argument("--d", type=int, default=1, help="hop budget (default 1)")
    p_check.add_argument(
        "--d-by-kind", help="per tag kind hop budgets, e.g. post=2,comment=1"
    )
    p_check.add_argument(
        "--m", type=int, default=None, help="shared-friend count that also keeps edges"
    )
    p_check.add_argument(
        "--max-search", type=int, default=16, help="largest ground set to search"
    )
    p_check.add_argument("--format", choices=["text", "json"], default="text")
    p_check.set_defaults(func=_cmd_check)

    p_sim = sub.add_parser("simulate", help="run a scenario to quiescence")
    p_sim.add_argument("scenario", help="scenario JSON file")
    p_sim.add_argument("--protocol", choices=PROTOCOL_CHOICES)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--history-out", help="write the observed history here")
    p_sim.add_argument("--metrics-out", help="write the run metrics here")
    p_sim.add_argument("--format", choices=["text", "json"], default="text")
    p_sim.set_defaults(func=_cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run one scenario under several protocols")
    p_cmp.add_argument("scenario", help="scenario JSON file")
    p_cmp.add_argument(
        "--protocols", help="comma-separated protocols (default: all four)"
    )
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument(
        "--report-dir", help="write metrics CSVs and figures into this directory"
    )
    p_cmp.add_argument("--format", choices=["text", "json"], default="text")
    p_cmp.set_defaults(func=_cmd_compare)

    p_graph = sub.add_parser("graph", help="derive dependency graphs from a history")
    p_graph.add_argument("history", help="history JSON file")
    p_graph.add_argument("--process", help="only this process")
    p_graph.add_argument("--kind", choices=["intra", "chain"], default="intra")
    p_graph.add_argument("--out", help="write JSON here instead of stdout")
    p_graph.set_defaults(func=_cmd_graph)

    p_fix = sub.add_parser("fixtures", help="list or write the built-in fixtures")
    p_fix.add_argument("--dir", help="directory to write fixture files into")
    p_fix.set_defaults(func=_cmd_fixtures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, HistoryError, CheckerError, SimulationError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
