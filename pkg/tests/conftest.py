import time

import pytest
from hypothesis import settings

from fitgadget import gadget as gd
from fitgadget.groups import builtin

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def S4():
    return builtin("S4")


@pytest.fixture(scope="session")
def S3():
    return builtin("S3")


@pytest.fixture(scope="session")
def ctx(S4):
    return gd.prepare_context(S4)


class Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.detail = ""
        self.t0 = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_failed = rep.failed


@pytest.fixture
def criterion(request):
    """Factory for an acceptance criterion; one PASS/FAIL line is emitted at teardown."""
    made = []

    def make(number: int, title: str) -> Criterion:
        made.append(Criterion(number, title))
        return made[-1]

    yield make
    failed = getattr(request.node, "call_failed", True)
    for c in made:
        line = f"criterion {c.number:>2}: {'FAIL' if failed else 'PASS'}  {c.title}  [{c.elapsed():.2f}s] {c.detail}"
        _ACCEPTANCE[c.number] = line.rstrip()
        print("\n" + _ACCEPTANCE[c.number])


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
