import numpy as np
import pytest

from moisture_learning.cnn import CnnModel, TrainConfig
from moisture_learning.dataset import MoistureClassSet, PipelineSpec, build_dataset
from moisture_learning.knn import KnnModel, save_knn
from moisture_learning.learn import classify, cnn_inputs, fit_learner, load_model, predict_sm, \
    save_model, to_feature_vector
from subsurface_twin.acquisition import make_band_plan
from subsurface_twin.errors import ConfigurationError, DomainError, FileFormatError

LOW = np.array([[1.0, 0.0], [0.0, 0.0]])
HIGH = np.array([[0.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def two_level_knn():
    return KnnModel.fit([to_feature_vector(LOW), to_feature_vector(HIGH)], [1, 2], k=1)


def test_moisture_estimate_averages_band_predictions(two_level_knn):
    images = [HIGH] * 11 + [LOW] * 5
    estimate = predict_sm(two_level_knn, images, MoistureClassSet.default(), n_bands=16)
    assert estimate == pytest.approx(0.3359375)


def test_moisture_estimate_needs_every_band(two_level_knn):
    classes = MoistureClassSet.default()
    with pytest.raises(DomainError):
        predict_sm(two_level_knn, [HIGH] * 15, classes, n_bands=16)
    with pytest.raises(DomainError):
        predict_sm(two_level_knn, [], classes)


def test_cnn_inputs_are_resampled():
    batch = cnn_inputs([np.ones((12, 12)) * 3, np.eye(8)], 8)
    assert batch.shape == (2, 8, 8)
    assert batch.max() == pytest.approx(1.0)


def test_classify_with_cnn():
    model = CnnModel(3, seed=1, input_size=8)
    labels = classify(model, [np.eye(16), np.ones((8, 8))])
    assert len(labels) == 2
    assert all(0 <= label < 3 for label in labels)
    assert classify(model, []) == []


@pytest.fixture
def small_dataset():
    from subsurface_twin.acquisition import AcquisitionConfig

    config = AcquisitionConfig(scan_length_m=0.6, n_positions=11, f_min_hz=1.2e9,
                               f_max_hz=2.0e9, f_step_hz=1e8)
    plan = make_band_plan(config, n_bands=5, band_spacing_hz=1e8)
    return build_dataset(MoistureClassSet((0.25, 0.75)), config, plan,
                         PipelineSpec(image_size=8), seed=3)


def test_fit_knn(small_dataset):
    model, history = fit_learner("knn", small_dataset, k=3)
    assert isinstance(model, KnnModel)
    assert model.train_features.shape == (6, 64)
    assert history == []


def test_fit_cnn(small_dataset):
    model, history = fit_learner("cnn", small_dataset, seed=2,
                                 train_config=TrainConfig(max_epochs=2, seed=2))
    assert isinstance(model, CnnModel)
    assert model.input_size == 8
    assert len(history) == 2


def test_unknown_learner(small_dataset):
    with pytest.raises(ConfigurationError):
        fit_learner("svm", small_dataset)


@pytest.mark.parametrize("learner", ["knn", "cnn"])
def test_saved_model_keeps_training_context(tmp_path, small_dataset, learner):
    config = TrainConfig(max_epochs=1, seed=2)
    model, _ = fit_learner(learner, small_dataset, seed=2, train_config=config, k=3)
    path = str(tmp_path / "model.bin")
    save_model(model, small_dataset, path, config)

    saved = load_model(path)
    assert saved.has_training_context
    assert type(saved.model) is type(model)
    assert saved.classes == small_dataset.classes
    assert saved.pipeline == small_dataset.pipeline
    assert saved.band_plan.to_dict() == small_dataset.band_plan.to_dict()
    assert saved.config == small_dataset.config

    images = [sample.image for sample in small_dataset.part("test")]
    assert classify(saved.model, images) == classify(model, images)


def test_model_file_without_training_context(tmp_path, two_level_knn):
    path = str(tmp_path / "model.mwkn")
    save_knn(two_level_knn, [0.25, 0.75], path)
    saved = load_model(path)
    assert not saved.has_training_context
    assert saved.pipeline is None
    assert saved.classes.levels == (0.25, 0.75)


def test_model_file_needs_classes(tmp_path, two_level_knn):
    path = str(tmp_path / "model.mwkn")
    save_knn(two_level_knn, [], path)
    with pytest.raises(FileFormatError):
        load_model(path)
