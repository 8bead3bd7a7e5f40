import json
import pathlib

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

CRITERIA = {
    "1": "cyclic-walk eigenvalue oracle",
    "2": "uniform gap over the prime sweep",
    "3": "chart roundtrips and norm identities",
    "4": "derivative-of-det valuation bound",
    "5": "grade-map bijection, additivity, equivariance",
    "6": "adjoint saturation certificate",
    "7": "coverage chain and fold count",
    "8": "central negative control",
    "9": "deterministic persistence and verify",
}


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def frozen(fixtures_dir):
    def load(name):
        return json.loads((fixtures_dir / name).read_text())

    return load


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in tr.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            marker = "test_acceptance.py::test_criterion_"
            if marker not in nodeid or rep.when != "call":
                continue
            num = nodeid.split(marker, 1)[1].split("[")[0]
            verdict = "PASS" if outcome == "passed" else "FAIL"
            lines.append((int(num), f"criterion {num}: {verdict} - {CRITERIA.get(num, '?')}"))
    if lines:
        tr.write_sep("-", "acceptance criteria")
        for _, text in sorted(lines):
            tr.write_line(text)
