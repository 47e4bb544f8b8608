import time
from contextlib import contextmanager

import pytest

REPORT = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[REPORT] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(REPORT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line per acceptance criterion.

    The block fails if it raises or, when ``limit`` is given, runs too long.
    """
    lines = request.config.stash[REPORT]

    @contextmanager
    def run(num: int, title: str, limit: float | None = None):
        t0 = time.perf_counter()
        status = "FAIL"
        try:
            yield
            elapsed = time.perf_counter() - t0
            if limit is not None:
                assert elapsed < limit, f"runtime {elapsed:.1f}s exceeds {limit}s"
            status = "PASS"
        finally:
            elapsed = time.perf_counter() - t0
            cap = f", limit {limit:g}s" if limit is not None else ""
            line = f"{status} criterion {num}: {title} ({elapsed:.2f}s{cap})"
            print(line)
            lines.append(line)

    return run
