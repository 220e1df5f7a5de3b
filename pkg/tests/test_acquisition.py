import numpy as np
import pytest

from subsurface_twin.acquisition import AcquisitionConfig, BandPlan, frequency_grid, \
    make_band_plan, scan_positions
from subsurface_twin.errors import ConfigurationError


def test_reference_sweep():
    config = AcquisitionConfig.reference()
    freqs = frequency_grid(config)
    assert config.n_frequencies == 104
    assert freqs[0] == 1.2e9
    assert freqs[-1] == pytest.approx(3.775e9)
    assert np.allclose(np.diff(freqs), 25e6)


def test_scan_positions_span_the_line(small_config):
    positions = scan_positions(small_config)
    assert positions.shape == (11,)
    assert positions[0] == 0.0
    assert positions[-1] == pytest.approx(0.6)


def test_single_frequency_sweep():
    config = AcquisitionConfig(f_min_hz=2e9, f_max_hz=2e9)
    assert config.n_frequencies == 1
    assert make_band_plan(config, n_bands=1, band_spacing_hz=0).n_frequencies == 1


@pytest.mark.parametrize("overrides", [
    {"f_step_hz": 0},
    {"f_min_hz": 3e9, "f_max_hz": 2e9},
    {"n_positions": 1},
    {"scan_length_m": 0},
    {"f_max_hz": 3.77e9},
])
def test_invalid_acquisitions(overrides):
    with pytest.raises(ConfigurationError):
        AcquisitionConfig.reference().with_overrides(**overrides)


def test_unknown_override():
    with pytest.raises(ConfigurationError):
        AcquisitionConfig.reference().with_overrides(bandwidth=1)


def test_frequency_step_override_snaps_f_max():
    config = AcquisitionConfig.reference().with_frequency_step(75e6)
    assert config.f_max_hz == pytest.approx(3.75e9)
    assert config.n_frequencies == 35


def test_configuration_document():
    config = AcquisitionConfig.reference().with_overrides(n_positions=23)
    assert AcquisitionConfig.from_dict(config.to_dict()) == config


def test_reference_band_plan():
    plan = make_band_plan(AcquisitionConfig.reference())
    bands = plan.bands()
    assert len(bands) == 16
    assert plan.bandwidth_hz == pytest.approx(2.425e9)
    assert bands[0].n_frequencies == 98
    assert bands[0].f_start_hz == 1.2e9
    assert bands[15].f_stop_hz == pytest.approx(3.775e9)
    assert all(band.f_stop_hz - band.f_start_hz == pytest.approx(plan.bandwidth_hz)
               for band in bands)


def test_wider_band_spacing():
    plan = make_band_plan(AcquisitionConfig.reference(), band_spacing_hz=50e6)
    assert plan.bandwidth_hz == pytest.approx(1.825e9)


def test_band_config_has_own_grid():
    config = AcquisitionConfig.reference()
    band = make_band_plan(config).band(3)
    band_config = band.config(config)
    assert band_config.f_min_hz == pytest.approx(1.23e9)
    assert band_config.n_frequencies == band.n_frequencies


def test_band_subsets(small_config):
    plan = make_band_plan(small_config, n_bands=4, band_spacing_hz=1e8)
    assert plan.subset("all") == [0, 1, 2, 3]
    assert plan.subset("lower") == [0, 1]
    assert plan.subset("upper") == [2, 3]
    with pytest.raises(ConfigurationError):
        plan.subset("middle")


@pytest.mark.parametrize("n_bands, spacing", [(0, 1e7), (2, 0), (2, -1e7), (9, 1e8)])
def test_invalid_band_plans(small_config, n_bands, spacing):
    with pytest.raises(ConfigurationError):
        make_band_plan(small_config, n_bands=n_bands, band_spacing_hz=spacing)


def test_band_plan_document(small_config):
    plan = make_band_plan(small_config, n_bands=3, band_spacing_hz=1e8)
    assert BandPlan.from_dict(plan.to_dict()) == plan
    with pytest.raises(ConfigurationError):
        plan.band(3)
