from __future__ import annotations

import sys
from functools import lru_cache
from importlib import resources
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from tegr.datasets import bundled_path  # noqa: E402
from tegr.pddl import ground, parse_domain, parse_problem  # noqa: E402

settings.register_profile("tegr", max_examples=60, deadline=None)
settings.load_profile("tegr")

FIXTURES = Path(str(resources.files("tegr") / "fixtures"))


@lru_cache(maxsize=None)
def bundled_task(name: str, problem: str = "p01.pddl"):
    d = parse_domain(bundled_path(f"{name}/domain.pddl").read_text())
    p = parse_problem(bundled_path(f"{name}/{problem}").read_text())
    return d, p


def with_goal(name: str, goal: str):
    """The bundled problem with its goal replaced by ``goal`` (PDDL condition text)."""
    d, p = bundled_task(name)
    text = bundled_path(f"{name}/p01.pddl").read_text()
    head = text[: text.index("(:goal")]
    return d, parse_problem(head + f"(:goal {goal}))")


@pytest.fixture(scope="session")
def triangle():
    return bundled_task("triangle-tireworld")


@pytest.fixture(scope="session")
def triangle_22():
    d, p = with_goal("triangle-tireworld", "(vAt 22)")
    return d, p, ground(d, p)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
