import pytest

from nonvanish.arith import cached_context
from nonvanish.characters import batch_gauss_sums
from nonvanish.kloosterman import build_table
from nonvanish.lfun import central_values

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ctx_for():
    return cached_context


@pytest.fixture(scope="session")
def lab():
    """Per-prime cache of the expensive tables shared across test modules."""
    cache = {}

    def get(p):
        if p not in cache:
            ctx = cached_context(p)
            cache[p] = dict(ctx=ctx, L=central_values(ctx), gauss=batch_gauss_sums(ctx), kl=build_table(ctx))
        return cache[p]

    return get


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
