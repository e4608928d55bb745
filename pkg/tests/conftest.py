import time

import pytest

# criterion number -> (passed, detail, seconds)
ACCEPTANCE: dict[int, tuple[bool, str, float]] = {}


class Criterion:
    def __init__(self, number: int, limit: float):
        self.number = number
        self.limit = limit
        self.start = time.perf_counter()
        self.detail = ""
        self.ok = False

    def done(self, ok: bool, detail: str):
        self.ok, self.detail = bool(ok), detail

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    number, limit = marker.args
    c = Criterion(number, limit)
    yield c
    t = c.elapsed
    within = t < limit
    ok = c.ok and within
    detail = c.detail or "did not complete"
    if not within:
        detail += f"; runtime {t:.1f}s over the {limit:g}s budget"
    ACCEPTANCE[number] = (ok, detail, t)
    print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({t:.1f}s) {detail}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, seconds): acceptance criterion with a runtime budget")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail, t = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({t:6.1f}s) {detail}")
