import numpy as np
import pytest

from irsifc.channel import ChannelSet, SystemConfig


def make_cs(h, G, f, P=1.0, sigma2=1.0):
    h = np.asarray(h, dtype=complex)
    K, _, M = h.shape
    N = np.asarray(G).shape[2]
    return ChannelSet(SystemConfig(K, M, N, P, sigma2), h, G, f)


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_cs(rng, K=2, M=2, N=3, P=1.0, sigma2=1.0, irs_scale=1.0):
    return make_cs(cn(rng, K, K, M), irs_scale * cn(rng, K, K, N, M), cn(rng, K, K, N), P, sigma2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
