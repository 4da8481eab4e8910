import numpy as np
import pytest

from isac_tsde.core import SystemConfig

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def cfg():
    """Reference numerology: 120 kHz spacing, K=1024, K1=32, n_cp=128."""
    return SystemConfig(120e3, 1024, 32)


@pytest.fixture
def small_cfg():
    return SystemConfig(15e3, 64, 8, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """Record one ``PASS``/``FAIL`` line per acceptance criterion."""
    log = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
        print(line)
        log.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(log):
        terminalreporter.write_line(line)
