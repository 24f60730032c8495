import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []
INVARIANT_OUTCOMES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: property test backing an invariant")
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criterion")


def pytest_collection_modifyitems(session, config, items):
    # Acceptance criteria run last so the invariant criterion can read this session's results.
    items.sort(key=lambda item: item.get_closest_marker("acceptance") is not None)


def pytest_runtest_logreport(report):
    if "invariant" in report.keywords and (report.when == "call" or report.outcome != "passed"):
        if INVARIANT_OUTCOMES.get(report.nodeid) != "failed":
            INVARIANT_OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
