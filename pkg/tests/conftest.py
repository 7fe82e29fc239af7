import numpy as np
import pytest

from infravac.grid import GridConfig, build_grid
from infravac.kpr import KprMap
from infravac.locnorm import LocalizationOps


@pytest.fixture(scope="session")
def cfg():
    return GridConfig()


@pytest.fixture(scope="session")
def grid(cfg):
    return build_grid(cfg)


@pytest.fixture(scope="session")
def grid_refined(cfg):
    return build_grid(cfg.refined(1.5))


@pytest.fixture(scope="session")
def small_grid():
    """Coarse grid for algebraic and property checks."""
    return build_grid(GridConfig(n_bands=6, pts_per_band=8, k_max=24.0, ell_max=6, r_pts=96))


@pytest.fixture(scope="session")
def kmap(grid):
    return KprMap(grid, 8)


@pytest.fixture(scope="session")
def loc(grid):
    return LocalizationOps(grid, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def normality(cfg, grid, grid_refined):
    from infravac.locnorm import check_normality

    return check_normality(cfg, grids=(grid, grid_refined))


@pytest.fixture(scope="session")
def smoothing(cfg, grid):
    from infravac.bounds import check_smoothing

    return check_smoothing(cfg, grid=grid)


@pytest.fixture(scope="session")
def infravacuum(grid):
    from infravac.symp import check_infravacuum

    return check_infravacuum(grid, n_test=50, n_pairs=100)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""
    return pytestconfig.stash.setdefault(_ACCEPTANCE_KEY, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        terminalreporter.write_line(log[number])
