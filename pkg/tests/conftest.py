"""Shared fixtures and the ``--runslow`` switch for long learning checks."""

import numpy as np
import pytest

from src.hvac_maac.building import default_building
from src.hvac_maac.traces import SynthSpec, TraceSet, synthesize_traces


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow learning tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running learning test (enable with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def _flat_traces(n_zones=2, days=1, slot_minutes=15, price=1.0, outdoor_temp=30.0,
                 outdoor_co2=400.0, occupancy=0):
    """Constant traces on the default 15-minute slot grid."""
    length = days * 1440 // slot_minutes
    return TraceSet(
        price=np.full(length, price),
        outdoor_temp=np.full(length, outdoor_temp),
        outdoor_co2=np.full(length, outdoor_co2),
        occupancy=np.full((length, n_zones), occupancy),
        slot_minutes=slot_minutes,
    )


@pytest.fixture
def building():
    return default_building(4)


@pytest.fixture
def small_traces():
    return synthesize_traces(SynthSpec(days=3, n_zones=4), seed=7)


@pytest.fixture
def flat_traces():
    return _flat_traces


TINY_EXPERIMENT = """\
building.zones = 2
synth.days = 3
split.train_days = 2
eval.days = 1
train.episodes = 2
train.slots_per_episode = 8
train.batch_size = 4
train.buffer_capacity = 64
train.actor_hidden = 8
train.critic_hidden = 8
train.attend_dim = 4
experiment.seeds = 0,1
experiment.out = out
"""


@pytest.fixture
def experiment_config_file(tmp_path):
    """Writes a tiny experiment config (plus ``extra`` lines) and returns its path."""
    def write(extra: str = "", name: str = "tiny.cfg") -> str:
        path = tmp_path / name
        path.write_text(TINY_EXPERIMENT + extra)
        return str(path)
    return write
