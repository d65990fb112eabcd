import time

import pytest

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


class Criterion:
    """Times one acceptance criterion and records a one-line verdict."""

    def __init__(self, number: int, title: str, budget_s: float):
        self.number, self.title, self.budget = number, title, budget_s
        self.metrics: dict[str, float] = {}
        self.start = time.perf_counter()

    def note(self, **values):
        self.metrics.update(values)

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start


@pytest.fixture
def criterion(request):
    holder = {}

    def make(number: int, title: str, budget_s: float) -> Criterion:
        holder["c"] = Criterion(number, title, budget_s)
        return holder["c"]

    yield make
    c = holder.get("c")
    if c is None:
        return
    rep = getattr(request.node, "rep_call", None)
    verdict = "PASS" if rep is not None and rep.passed else "FAIL"
    detail = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in c.metrics.items())
    _ACCEPTANCE[c.number] = (verdict, c.title, f"{detail}; {c.elapsed:.1f}s of {c.budget:.0f}s")


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        verdict, title, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{verdict}] {number:2d}. {title}: {detail}")
