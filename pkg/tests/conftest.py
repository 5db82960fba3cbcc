import numpy as np
import pytest

from glhtmfd.funcdata import Grid, SampleSet


def random_sampleset(rng, sizes=(6, 7, 8), p=2, M=9, scale=None):
    """Heteroscedastic Gaussian curves with smooth random means."""
    grid = Grid(0.0, 1.0, M)
    t = grid.points
    arrays = []
    for a, n in enumerate(sizes):
        mean = np.sin(np.outer(np.arange(1, p + 1), t) * (a + 1))
        L = rng.standard_normal((p, p)) + 2 * np.eye(p)
        noise = rng.standard_normal((n, M, p)) @ L.T
        s = 1.0 + a if scale is None else scale[a]
        arrays.append(mean[None] + s * np.transpose(noise, (0, 2, 1)))
    return SampleSet.from_arrays(arrays, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[num])
