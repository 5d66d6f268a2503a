import pytest


def pytest_configure(config):
    config.acceptance_results = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number}: {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        request.config.acceptance_results.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if config.acceptance_results:
        terminalreporter.section("acceptance criteria")
        for line in config.acceptance_results:
            terminalreporter.write_line(line)
