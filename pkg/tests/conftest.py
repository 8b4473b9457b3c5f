"""Shared fixtures.  The reference-grid solves are expensive (about 40 s per
scheme at h = 0.025), so the study cache is built once per session."""

import time

import pytest

from bateshoc.analysis import H_REF, STUDY_H_LIST, SolveCache
from bateshoc.grid import GridSpec
from bateshoc.model import BatesParams, ContractSpec


@pytest.fixture(scope="session")
def params():
    return BatesParams()


@pytest.fixture(scope="session")
def contract():
    return ContractSpec()


@pytest.fixture(scope="session")
def study_cache(params, contract):
    """Default-configuration solves for both schemes at every study mesh size."""
    cache = SolveCache(params, contract.T, GridSpec(T=contract.T))
    t0 = time.perf_counter()
    cache.prefetch([(s, h) for s in ("hoc4", "central2") for h in (*STUDY_H_LIST, H_REF)])
    cache.build_seconds = time.perf_counter() - t0
    return cache


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
