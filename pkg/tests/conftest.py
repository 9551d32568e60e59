import pytest

_VERDICTS = []


class Verdict:
    """Records one PASS/FAIL line per acceptance criterion."""

    def __init__(self, sink):
        self._sink = sink

    def __call__(self, label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        self._sink.append(line)
        print(line)
        return ok


@pytest.fixture
def verdict():
    return Verdict(_VERDICTS)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
