"""Report artifacts: CSV content and rendered figures."""

from __future__ import annotations

import csv

from conlab import Protocol, run
from conlab.fixtures import slow_comment_scenario
from conlab.report import write_report

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_write_report_produces_all_artifacts(tmp_path):
    scenario = slow_comment_scenario()
    results = {p: run(scenario.with_protocol(p)) for p in Protocol}
    paths = write_report(results, tmp_path / "out")
    assert sorted(p.name for p in paths) == [
        "dependencies.png",
        "latency.png",
        "metrics.csv",
        "summary.csv",
        "visibility.png",
    ]
    by_name = {p.name: p for p in paths}

    with open(by_name["metrics.csv"], newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {row["protocol"] for row in rows} == {p.value for p in Protocol}
    # 4 writes on 2 replicas under 4 protocols
    assert len(rows) == 32
    assert all(float(row["latency"]) >= 0 for row in rows)

    with open(by_name["summary.csv"], newline="") as fh:
        summary = list(csv.DictReader(fh))
    assert len(summary) == 4
    assert all(row["converged"] == "True" for row in summary)

    for name in ("latency.png", "visibility.png", "dependencies.png"):
        data = by_name[name].read_bytes()
        assert data[:8] == PNG_MAGIC
        assert len(data) > 1000
