from __future__ import annotations

from pathlib import Path

import pytest

from robustikit import corpus
from robustikit.transform import inject, robustify_preserving, robustify_repurposing

ROOT = Path(__file__).resolve().parent.parent
EXAMPLES = ROOT / "docs" / "examples"


@pytest.fixture(scope="session")
def ht0_source():
    return corpus.source("ht0")


@pytest.fixture(scope="session")
def ht0(ht0_source):
    return ht0_source.machines["ht0"]


@pytest.fixture(scope="session")
def eps0(ht0_source):
    return ht0_source.uncertainties["eps0"]


@pytest.fixture(scope="session")
def eps7(ht0_source):
    return ht0_source.uncertainties["eps7"]


@pytest.fixture(scope="session")
def ht1():
    return corpus.source("ht1").machines["ht1"]


@pytest.fixture(scope="session")
def epsdt():
    return corpus.source("ht1").uncertainties["epsdt"]


@pytest.fixture(scope="session")
def injected(ht0, eps0):
    return inject(ht0, eps0)


@pytest.fixture(scope="session")
def pr_outcome(injected):
    return robustify_preserving(injected)


@pytest.fixture(scope="session")
def rr_outcome(injected):
    return robustify_repurposing(injected)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.result_lines():
            terminalreporter.write_line(line)
