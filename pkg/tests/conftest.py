import pytest

from satshare.channel import build_planner_csi
from satshare.config import ScenarioConfig
from satshare.features import planner_draws
from satshare.geometry import generate_topology

SMALL_SEED = 12345

# one "PASS criterion N: ..." / "FAIL criterion N: ..." line per
# acceptance test, echoed after the run summary (capture-proof)
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_config():
    """A 4-cell scenario small enough for exhaustive cross-checks."""
    cfg = ScenarioConfig().replace(
        n_tbs=4, tus_per_tbs=6, n_laa=8, n_carriers=4,
        planner_samples=50, eval_samples=100,
        n_topologies=2, master_seed=7)
    cfg.validate()
    return cfg


@pytest.fixture(scope="session")
def small_topology(small_config):
    return generate_topology(small_config, SMALL_SEED)


@pytest.fixture(scope="session")
def small_csi(small_config, small_topology):
    return build_planner_csi(small_topology, small_config)


@pytest.fixture(scope="session")
def small_draws(small_config, small_topology, small_csi):
    return planner_draws(small_csi, small_topology, small_config, SMALL_SEED)
