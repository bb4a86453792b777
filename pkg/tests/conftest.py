import numpy as np
import pytest

from randpf.kernels import BACKENDS

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_log(request):
    log = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, name, ok, detail=""):
        log[number] = (name, bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        name, ok, detail = log[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {name}: {detail}")
