from fractions import Fraction

import pytest

from gapsched.platform import make_platform
from gapsched.workload import DagSpec, EdgeSpec, make_task

# Execution times per quality level (Q1, Q2), identical on V1 and V2.
TABLE_I = {"T1": (1, 2), "T2": (2, 3), "T3": (2, 3), "T4": (1, 2)}

# Our own diamond topology; the worked example's figure is not recoverable.
DIAMOND_EDGES = [("T1", "T2"), ("T1", "T3"), ("T2", "T4"), ("T3", "T4")]


def make_diamond(period=12, volume=1, vms=("V1", "V2")):
    tasks = tuple(make_task(tid, {vm: times for vm in vms}) for tid, times in TABLE_I.items())
    edges = tuple(EdgeSpec(a, b, Fraction(volume)) for a, b in DIAMOND_EDGES)
    return DagSpec("diamond", tasks, edges, period)


@pytest.fixture
def diamond():
    return make_diamond()


@pytest.fixture
def idle2():
    """Two fully idle VMs, unit bandwidth, background period 12."""
    return make_platform(["V1", "V2"], 12)


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def report_criterion(request):
    """Record one pass/fail line per acceptance criterion for the summary."""

    def record(number, ok, detail):
        request.config.acceptance_lines.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
