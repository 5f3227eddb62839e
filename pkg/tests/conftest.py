import re
from pathlib import Path

import pytest

from citeshift.ingest import align_years, drop_single_relations, parse_edge_list
from citeshift.synth import default_scenario, generate_pair, matthew_scenario

ROOT = Path(__file__).resolve().parents[1]

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    m = re.search(r"test_acceptance\.py::test_ac(\d+)_(\w+)", report.nodeid)
    if m:
        _acceptance[m.group(1)] = (m.group(2), "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_acceptance, key=int):
        name, status = _acceptance[num]
        terminalreporter.write_line(f"AC{int(num):02d} {status}  {name.replace('_', ' ')}")


@pytest.fixture(scope="session")
def default_pair():
    prior, post, truth = generate_pair(default_scenario())
    pair = align_years(drop_single_relations(prior), drop_single_relations(post))
    return pair, truth


@pytest.fixture(scope="session")
def matthew_pair():
    prior, post, truth = generate_pair(matthew_scenario())
    pair = align_years(drop_single_relations(prior), drop_single_relations(post))
    return pair, truth


@pytest.fixture
def four_line_fixture():
    return parse_edge_list(
        "citing,cited,count\n"
        "JA,JB,1\n"
        "JB,JA,2\n"
        "JC,JA,3\n"
        "JA,JC,4\n"
    )
