from collections import Counter

import numpy as np
import pytest

from subsurface_twin.acquisition import make_band_plan
from subsurface_twin.errors import ConfigurationError, DomainError
from subsurface_twin.forward import NoiseSpec
from subsurface_twin.imaging import Image
from subsurface_twin.grid import ImagingGrid
from moisture_learning.dataset import Dataset, LabeledSample, MoistureClassSet, PipelineSpec, \
    build_dataset, generate_dataset, load_dataset, save_dataset, split_dataset

TWO_CLASSES = MoistureClassSet((0.25, 0.75))


def _fake_samples(n_classes, per_class):
    grid = ImagingGrid.reference(1.2, nx=4, nz=4)
    image = Image(grid, np.zeros(grid.shape))
    return [LabeledSample(f"s-c{label}-b{band}", image, label, band, "s", 0)
            for label in range(n_classes) for band in range(per_class)]


def test_class_sets():
    assert MoistureClassSet.default().n_classes == 8
    dry = MoistureClassSet.with_dry_class()
    assert dry.n_classes == 9
    assert dry.level(0) == 0.0
    assert dry.level(8) == 1.0
    with pytest.raises(DomainError):
        dry.level(9)
    with pytest.raises(ConfigurationError):
        MoistureClassSet((0.5, 0.25))


def test_pipeline_grids(small_config):
    assert PipelineSpec("baa").grid_for(small_config).shape == (24, 24)
    assert PipelineSpec("bpa").grid_for(small_config).shape == (96, 96)
    with pytest.raises(ConfigurationError):
        PipelineSpec("fourier")


def test_pipeline_document():
    spec = PipelineSpec("baa", n_remove=2, wideband_first=True)
    assert PipelineSpec.from_dict(spec.to_dict()) == spec


def test_reference_split_sizes():
    samples = _fake_samples(8, 16)
    split = split_dataset(samples, seed=3)
    labels = {sample.sample_id: sample.label for sample in samples}

    assert (len(split.train), len(split.val), len(split.test)) == (80, 24, 24)
    for part, size in ((split.train, 10), (split.val, 3), (split.test, 3)):
        assert set(Counter(labels[sample_id] for sample_id in part).values()) == {size}


def test_split_is_a_seeded_partition():
    samples = _fake_samples(3, 10)
    first = split_dataset(samples, seed=1)
    ids = first.train + first.val + first.test
    assert sorted(ids) == sorted(sample.sample_id for sample in samples)
    assert first == split_dataset(samples, seed=1)
    assert first != split_dataset(samples, seed=2)


def test_unstratified_split():
    split = split_dataset(_fake_samples(2, 5), stratified=False)
    assert (len(split.train), len(split.val), len(split.test)) == (6, 2, 2)


def test_split_needs_enough_samples():
    with pytest.raises(ConfigurationError):
        split_dataset(_fake_samples(2, 2))
    with pytest.raises(ConfigurationError):
        split_dataset(_fake_samples(2, 5), ratios=(0.5, 0.5, 0.5))


def test_generated_samples(small_config):
    plan = make_band_plan(small_config, n_bands=3, band_spacing_hz=1e8)
    pipeline = PipelineSpec("bpa", image_size=16)
    samples = generate_dataset(TWO_CLASSES, small_config, plan, pipeline, seed=5)

    assert len(samples) == 6
    assert [sample.label for sample in samples] == [0, 0, 0, 1, 1, 1]
    assert [sample.band_index for sample in samples] == [0, 1, 2, 0, 1, 2]
    assert len({sample.sample_id for sample in samples}) == 6
    for sample in samples:
        assert sample.image.values.shape == (16, 16)
        assert sample.image.values.max() == pytest.approx(1.0)
        assert sample.image.source_band == sample.band_index


def test_generation_is_reproducible(small_config):
    plan = make_band_plan(small_config, n_bands=2, band_spacing_hz=1e8)
    pipeline = PipelineSpec("clutter_reduced", image_size=8)
    first = generate_dataset(TWO_CLASSES, small_config, plan, pipeline, seed=5)
    second = generate_dataset(TWO_CLASSES, small_config, plan, pipeline, seed=5)
    for a, b in zip(first, second):
        assert np.array_equal(a.image.values, b.image.values)


def test_band_subset_matches_full_generation(small_config):
    plan = make_band_plan(small_config, n_bands=3, band_spacing_hz=1e8)
    pipeline = PipelineSpec("bpa", image_size=8)
    full = generate_dataset(TWO_CLASSES, small_config, plan, pipeline, seed=5)
    subset = generate_dataset(TWO_CLASSES, small_config, plan, pipeline, seed=5,
                              band_indices=[2])

    expected = [sample for sample in full if sample.band_index == 2]
    assert [sample.sample_id for sample in subset] == [sample.sample_id for sample in expected]
    for a, b in zip(subset, expected):
        assert np.array_equal(a.image.values, b.image.values)


@pytest.mark.parametrize("stage", ["raw", "baa"])
def test_other_stages(small_config, stage):
    plan = make_band_plan(small_config, n_bands=2, band_spacing_hz=1e8)
    pipeline = PipelineSpec(stage, image_size=8)
    samples = generate_dataset(TWO_CLASSES, small_config, plan, pipeline, seed=2,
                               noise=NoiseSpec(snr_db=30.0))
    assert all(sample.image.values.shape == (8, 8) for sample in samples)


def test_wideband_first(small_config):
    plan = make_band_plan(small_config, n_bands=3, band_spacing_hz=1e8)
    pipeline = PipelineSpec("bpa", wideband_first=True, image_size=8)
    samples = generate_dataset(TWO_CLASSES, small_config, plan, pipeline, seed=2)
    assert len(samples) == 6


def test_dataset_directory(tmp_path, small_config):
    plan = make_band_plan(small_config, n_bands=5, band_spacing_hz=1e8)
    dataset = build_dataset(TWO_CLASSES, small_config, plan, PipelineSpec(image_size=8), seed=4)
    assert isinstance(dataset, Dataset)
    assert [len(dataset.part(name)) for name in ("train", "val", "test")] == [6, 2, 2]

    save_dataset(dataset, str(tmp_path))
    loaded = load_dataset(str(tmp_path))

    assert loaded.split == dataset.split
    assert loaded.classes == dataset.classes
    assert loaded.band_plan == dataset.band_plan
    assert np.array_equal(loaded.samples[3].image.values, dataset.samples[3].image.values)
