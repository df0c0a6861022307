from hypothesis import settings

# the first call of a numba kernel loads it from the cache, which can take
# longer than hypothesis's default per-example deadline
settings.register_profile("default", deadline=None)
settings.load_profile("default")


import pytest

_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL verdict for an acceptance criterion and assert it."""
    store = request.config.stash.setdefault(_VERDICTS, {})

    def record(number, ok, detail):
        store[number] = (bool(ok), detail)
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_VERDICTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        ok, detail = store[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
