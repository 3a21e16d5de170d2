"""Generators feed the acceptance batteries; they must stay valid."""

from __future__ import annotations

import itertools
import random

from conlab import OpKind, run, validate_history
from conlab.generate import (
    enumerate_removal_histories,
    enumerate_small_histories,
    random_history,
    random_removal_scenario,
    random_scenario,
)


def test_enumerated_histories_are_valid():
    seen = 0
    for h in enumerate_small_histories(max_ops=4):
        assert validate_history(h) == []
        seen += 1
    assert seen == 522


def test_enumeration_is_deterministic():
    first = list(itertools.islice(enumerate_small_histories(max_ops=3), 200))
    second = list(itertools.islice(enumerate_small_histories(max_ops=3), 200))
    assert first == second


def test_random_histories_are_valid():
    rng = random.Random(42)
    for _ in range(60):
        assert validate_history(random_history(rng)) == []


def test_random_history_is_seed_deterministic():
    assert random_history(random.Random(7)) == random_history(random.Random(7))


def test_random_scenarios_run_and_converge():
    rng = random.Random(11)
    for _ in range(10):
        result = run(random_scenario(rng))
        assert result.metrics.converged
        assert validate_history(result.history) == []


def test_removal_histories_cover_read_patterns():
    histories = list(enumerate_removal_histories())
    assert len(histories) == 30
    for h in histories:
        assert validate_history(h) == []
        kinds = {op.kind for op in h.operations()}
        assert OpKind.WRITE in kinds


def test_random_removal_scenarios_run():
    rng = random.Random(3)
    for _ in range(10):
        result = run(random_removal_scenario(rng))
        assert result.metrics.converged
        assert validate_history(result.history) == []
