import numpy as np
import pytest

from pareto_consensus import fixtures
from pareto_consensus.engine import RunConfig
from pareto_consensus.graph import complete


def scenario1_config(row: int = 1, **overrides) -> RunConfig:
    """Two-agent configuration for priority setting ``row`` (1-based)."""
    kw = dict(
        graph=complete(2),
        objectives=fixtures.scenario1_objectives(),
        W0=np.array(fixtures.SCENARIO1_PRIORITIES[row - 1], dtype=float),
        x0=np.array(fixtures.SCENARIO1_X0)[:, None],
        alpha=fixtures.SCENARIO1_ALPHA,
        k_max=fixtures.SCENARIO1_K_MAX,
        record_every=100,
        name=f"scenario1-row{row}",
    )
    kw.update(overrides)
    return RunConfig(**kw)


@pytest.fixture
def s1_config():
    return scenario1_config


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
