import numpy as np
import pytest

from reporting import log
from subsurface_twin.acquisition import AcquisitionConfig
from subsurface_twin.grid import ImagingGrid


@pytest.fixture(autouse=True)
def log_to_tmp(tmp_path):
    log.configure(str(tmp_path / "log.txt"), log.NORMAL)
    yield
    log.configure()


@pytest.fixture
def small_config() -> AcquisitionConfig:
    """ 9 frequencies, 11 positions over 0.6 m """
    return AcquisitionConfig(scan_length_m=0.6, n_positions=11, f_min_hz=1.2e9,
                             f_max_hz=2.0e9, f_step_hz=1e8)


@pytest.fixture
def small_grid() -> ImagingGrid:
    """ 12 x 12 pixels of 5 cm x 2.5 cm below the small scan line """
    return ImagingGrid.reference(0.6, nx=12, nz=12, depth_m=0.3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
