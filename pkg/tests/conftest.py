import numpy as np
import pytest

from rdsense.config import AppConfig
from rdsense.params import SystemConfig, derive
from rdsense.waveform import zadoff_chu


@pytest.fixture(scope="session")
def cfg():
    return AppConfig()


@pytest.fixture(scope="session")
def params(cfg):
    return derive(cfg.system)


@pytest.fixture(scope="session")
def reference(cfg):
    return zadoff_chu(cfg.system.sequence_length, cfg.system.zc_root)


@pytest.fixture(scope="session")
def small_system():
    """Reduced numerology for fast end-to-end tests; same physics."""
    return SystemConfig(sequence_length=1024, cpi_pulses=64)


@pytest.fixture(scope="session")
def small_cfg(small_system):
    return AppConfig(system=small_system)


@pytest.fixture(scope="session")
def small_params(small_system):
    return derive(small_system)


@pytest.fixture(scope="session")
def small_reference(small_system):
    return zadoff_chu(small_system.sequence_length, small_system.zc_root)


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
