import pytest

from ghsed.client import OwnerKeys
from ghsed.ght_store import GhtStore
from ghsed.owner_crypto import ExponentMode, keygen
from ghsed.server import GhsedServer

ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def key():
    return keygen(1024)


@pytest.fixture(scope="session")
def other_key():
    return keygen(1024)


@pytest.fixture(scope="session")
def keys(key):
    return OwnerKeys(key, ExponentMode.PUBLIC)


@pytest.fixture(scope="session")
def record_cache():
    # keyword -> HtRecord for the session key in public mode, 64-bit index
    return {}


@pytest.fixture
def server(key):
    srv = GhsedServer(("127.0.0.1", 0), GhtStore(), key.public).start_background()
    yield srv
    srv.close()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
