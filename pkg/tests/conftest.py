"""Session-scoped campaign fixtures shared by the trend tests.

The three Monte-Carlo campaigns behind them take minutes, so they run
once per session and every test reads from the cached results.
"""

import pytest

from gobsim.harness.campaign import run_campaign
from gobsim.harness.config import ScenarioConfig


@pytest.fixture(scope="session")
def random_campaign():
    """500-drop default campaign: random UEs, three coherence times, TDD rows."""
    return run_campaign(ScenarioConfig(), workers=1, keep_drops=True)


@pytest.fixture(scope="session")
def closely_located_campaign():
    """500-drop shared-cluster campaign at the short coherence time."""
    cfg = ScenarioConfig(
        scenario="closely_located",
        tau=800,
        shared_cluster_probability=0.6,
        n_shared_clusters=5,
        t_coh_ms=(15.0,),
        include_tdd=False,
    )
    return run_campaign(cfg, workers=1, keep_drops=True)


@pytest.fixture(scope="session")
def quantization_campaign():
    """500-drop feedback-quantizer sweep at the short coherence time."""
    cfg = ScenarioConfig(t_coh_ms=(15.0,), q_bits=(0, 16, 8, 4, 2), include_tdd=False)
    return run_campaign(cfg, workers=1, keep_drops=True)
