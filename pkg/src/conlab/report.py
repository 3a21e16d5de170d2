"""Comparison reports: delimited metrics plus rendered figures.

A report directory receives, for one scenario run under several
protocols:

  metrics.csv      one row per (protocol, write, replica)
  summary.csv      one row per protocol
  latency.png      mean and worst visibility latency by protocol
  visibility.png   per-replica timelines from issue to visibility
  dependencies.png dependency count per write by protocol
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sim import Protocol, RunResult

_PROTOCOL_COLORS = {
    Protocol.EVENTUAL: "#999999",
    Protocol.CAUSAL: "#d62728",
    Protocol.INTRA_CAUSAL: "#1f77b4",
    Protocol.INTER_CAUSAL: "#2ca02c",
}


def write_metrics_csv(results: Mapping[Protocol, RunResult], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["protocol", "write", "replica", "issued", "visible", "latency", "dependencies"]
        )
        for protocol in results:
            result = results[protocol]
            for record in result.metrics.visibility:
                writer.writerow(
                    [
                        protocol.value,
                        record.write,
                        record.replica,
                        float(record.issued),
                        float(record.visible),
                        float(record.latency),
                        len(result.dependencies.get(record.write, ())),
                    ]
                )


def write_summary_csv(results: Mapping[Protocol, RunResult], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["protocol", "mean_latency", "max_latency", "mean_dependencies", "converged"]
        )
        for protocol, result in results.items():
            metrics = result.metrics
            writer.writerow(
                [
                    protocol.value,
                    "" if metrics.mean_latency is None else float(metrics.mean_latency),
                    "" if metrics.max_latency is None else float(metrics.max_latency),
                    ""
                    if metrics.mean_dependencies is None
                    else float(metrics.mean_dependencies),
                    metrics.converged,
                ]
            )


def render_latency_figure(results: Mapping[Protocol, RunResult], path: Path) -> None:
    protocols = list(results)
    means = [
        float(results[p].metrics.mean_latency or 0) for p in protocols
    ]
    maxes = [float(results[p].metrics.max_latency or 0) for p in protocols]
    positions = range(len(protocols))
    width = 0.38
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(
        [x - width / 2 for x in positions],
        means,
        width,
        label="mean",
        color=[_PROTOCOL_COLORS.get(p, "#555555") for p in protocols],
    )
    ax.bar(
        [x + width / 2 for x in positions],
        maxes,
        width,
        label="worst",
        color=[_PROTOCOL_COLORS.get(p, "#555555") for p in protocols],
        alpha=0.5,
    )
    ax.set_xticks(list(positions))
    ax.set_xticklabels([p.value for p in protocols])
    ax.set_ylabel("visibility latency")
    ax.set_title("Visibility latency by protocol")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_visibility_figure(results: Mapping[Protocol, RunResult], path: Path) -> None:
    protocols = list(results)
    fig, axes = plt.subplots(
        len(protocols), 1, figsize=(8, 2.2 * len(protocols)), sharex=True, squeeze=False
    )
    for ax, protocol in zip(axes[:, 0], protocols):
        result = results[protocol]
        records = sorted(
            result.metrics.visibility, key=lambda r: (r.replica, r.issued, r.write)
        )
        rows: dict[str, int] = {}
        for record in records:
            rows.setdefault(record.replica, len(rows))
        color = _PROTOCOL_COLORS.get(protocol, "#555555")
        for record in records:
            y = rows[record.replica]
            ax.plot(
                [float(record.issued), float(record.visible)],
                [y, y],
                color=color,
                linewidth=1.2,
                alpha=0.6,
            )
            ax.plot(float(record.visible), y, "o", color=color, markersize=4)
            ax.annotate(
                record.write,
                (float(record.visible), y),
                textcoords="offset points",
                xytext=(3, 4),
                fontsize=7,
            )
        ax.set_yticks(list(rows.values()))
        ax.set_yticklabels(list(rows))
        ax.set_ylabel(protocol.value, fontsize=9)
        ax.margins(y=0.4)
    axes[-1, 0].set_xlabel("time")
    fig.suptitle("When each write became visible")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_dependency_figure(results: Mapping[Protocol, RunResult], path: Path) -> None:
    protocols = list(results)
    write_ids = sorted(
        {wid for result in results.values() for wid in result.dependencies}
    )
    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(write_ids)), 4))
    width = 0.8 / max(1, len(protocols))
    for k, protocol in enumerate(protocols):
        deps = results[protocol].dependencies
        counts = [len(deps.get(wid, ())) for wid in write_ids]
        offsets = [i + (k - (len(protocols) - 1) / 2) * width for i in range(len(write_ids))]
        ax.bar(
            offsets,
            counts,
            width,
            label=protocol.value,
            color=_PROTOCOL_COLORS.get(protocol, "#555555"),
        )
    ax.set_xticks(range(len(write_ids)))
    ax.set_xticklabels(write_ids, rotation=45, ha="right")
    ax.set_ylabel("attached dependencies")
    ax.set_title("Dependency count per write")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_report(
    results: Mapping[Protocol, RunResult], directory: str | Path
) -> list[Path]:
    """Write every artifact into directory, creating it if needed, and
    return the paths written."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": out / "metrics.csv",
        "summary": out / "summary.csv",
        "latency": out / "latency.png",
        "visibility": out / "visibility.png",
        "dependencies": out / "dependencies.png",
    }
    write_metrics_csv(results, paths["metrics"])
    write_summary_csv(results, paths["summary"])
    render_latency_figure(results, paths["latency"])
    render_visibility_figure(results, paths["visibility"])
    render_dependency_figure(results, paths["dependencies"])
    return list(paths.values())
