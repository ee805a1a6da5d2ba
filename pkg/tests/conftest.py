import numpy as np
import pytest

from udnsim.channel import ChannelState, RadioParams, load_amc_table
from udnsim.topology import ClusterPlan

P_SUB = 10 ** (24 / 10) / 1000 / 100  # 24 dBm over 100 subchannels
N0 = 7.16e-16


@pytest.fixture(scope="session")
def table():
    return load_amc_table()


@pytest.fixture(scope="session")
def params():
    return RadioParams()


def make_state(gain, power=P_SUB, noise=N0):
    return ChannelState(gain=np.asarray(gain, dtype=float), noise_power_w=noise, subchannel_power_w=power)


def make_plan(labels):
    labels = np.asarray(labels)
    k = labels.max() + 1
    return ClusterPlan.from_labels(labels, np.zeros((k, 2)))


def random_instance(rng, max_bs=5, max_users=10):
    """Random micro-instance: gains spread over ~60 dB, random cluster labels."""
    n_bs = int(rng.integers(1, max_bs + 1))
    n_users = int(rng.integers(1, max_users + 1))
    gain = 10 ** rng.uniform(-14, -8, size=(n_users, n_bs))
    k = int(rng.integers(1, n_bs + 1))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n_bs - k)])
    rng.shuffle(labels)
    return make_state(gain), make_plan(labels)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion; returns the verdict."""

    def _report(number, ok, detail=""):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
