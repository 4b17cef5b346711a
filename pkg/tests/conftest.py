import numpy as np
import pytest

from ris_aircomp.channel import ChannelRealization, complex_normal, make_rng


def unit_scale_channels(K, M, N, seed):
    """Channels with CN(0, 1) entries, convenient when physical scaling is irrelevant."""
    rng = make_rng(seed)
    return ChannelRealization(
        complex_normal(rng, (K, M)), complex_normal(rng, (M, N)), complex_normal(rng, (K, N))
    )


def random_unit_vector(n, rng):
    x = complex_normal(rng, n)
    return x / np.linalg.norm(x)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def report(number, passed, detail):
    """Record and print one acceptance verdict line."""
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
