import numpy as np
import pytest

from ezfsim.channel import ChannelSet, SystemConfig


def crandn(rng, *shape):
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def channel_from(h, n_bcu=1, tau=65, **kw):
    """Wrap a hand-built ``(K, N_R, N_T)`` array in a ChannelSet."""
    h = np.asarray(h, dtype=complex)
    k, n_r, n_t = h.shape
    l = kw.pop("n_streams", 1)
    cfg = SystemConfig(n_t, n_bcu, n_t // n_bcu, k, n_r, l, tau=tau, **kw)
    return ChannelSet(cfg, h)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
