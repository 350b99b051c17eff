"""Shared fixtures and helpers for the test suite."""
from __future__ import annotations

import random

import pytest
from hypothesis import HealthCheck, settings

from pramdb.kernel import Machine, MachineConfig, WriteMode
from pramdb.relstore import dictionary_database

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("ci")


def machine(mode: str = "arbitrary", seed: int = 0) -> Machine:
    return Machine(MachineConfig(write_mode=WriteMode.parse(mode), arbitrary_seed=seed))


def random_rows(rng: random.Random, k: int, arity: int, dom: int) -> list:
    k = min(k, dom ** arity)
    rows: set = set()
    while len(rows) < k:
        rows.add(tuple(rng.randint(1, dom) for _ in range(arity)))
    return sorted(rows)


def dict_db(schemas: dict, data: dict, mode: str = "arbitrary", seed: int = 0, ordered_by=None):
    return dictionary_database(machine(mode, seed), schemas, data, ordered_by or {})


@pytest.fixture
def m() -> Machine:
    return machine()


# One line per acceptance criterion, printed again in the terminal summary.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
