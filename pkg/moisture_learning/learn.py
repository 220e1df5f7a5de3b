"""
Common entry points of the two classifiers: fitting on a dataset and moisture prediction
"""

from dataclasses import dataclass
from typing import Any, Optional, Sequence, Union

import numpy as np

from moisture_learning.cnn import CnnModel, EpochStats, TrainConfig, cnn_from_record, cnn_train, \
    save_cnn
from moisture_learning.dataset import Dataset, MoistureClassSet, PipelineSpec
from moisture_learning.features import FeatureVector, normalized_pixels, to_feature_vector
from moisture_learning.knn import KnnModel, knn_from_record, knn_predict_batch, save_knn
from reporting import log
from scan_files.protocol import CnnRecord, KnnRecord, read_record
from subsurface_twin import constants
from subsurface_twin.acquisition import AcquisitionConfig, BandPlan
from subsurface_twin.errors import ConfigurationError, DomainError, FileFormatError
from subsurface_twin.imaging import Image, resample_values

__all__ = ["FeatureVector", "to_feature_vector", "Model", "LEARNERS", "SavedModel", "cnn_inputs",
           "classify", "fit_learner", "predict_sm", "training_context", "save_model",
           "load_model"]

Model = Union[KnnModel, CnnModel]

LEARNERS = ("cnn", "knn")
""" The classifier kinds """


def cnn_inputs(images: Sequence[Union[Image, np.ndarray]], input_size: int) -> np.ndarray:
    """
    :param images: Images of any size
    :param input_size: The side of the network input
    :return: The normalised images resampled to the network input, shape (N, s, s)
    """
    batch = []
    for image in images:
        values = normalized_pixels(image)
        if values.shape != (input_size, input_size):
            values = normalized_pixels(resample_values(values, (input_size, input_size)))
        batch.append(values)
    return np.stack(batch) if batch else np.zeros((0, input_size, input_size))


def classify(model: Model, images: Sequence[Union[Image, np.ndarray]]) -> list[int]:
    """
    :param model: A fitted KNN or a trained CNN
    :param images: The images being classified
    :return: The class index of every image
    """
    if len(images) == 0:
        return []
    if isinstance(model, KnnModel):
        return knn_predict_batch(model, [to_feature_vector(image) for image in images])
    return [int(label) for label in model.predict(cnn_inputs(images, model.input_size))]


def fit_learner(learner: str, dataset: Dataset, seed: int = constants.DEFAULT_SEED,
                train_config: Optional[TrainConfig] = None, k: int = constants.KNN_K) \
        -> tuple[Model, list[EpochStats]]:
    """
    Fits a classifier on the training part of a dataset, the CNN validates on the val part

    :param learner: "cnn" or "knn"
    :param dataset: The split dataset
    :param seed: The seed of the CNN initialisation
    :param train_config: The CNN training settings, its seed defaults to the given seed
    :param k: The KNN neighbour count
    :return: The model and the CNN history, empty for KNN
    """
    train = dataset.part("train")
    if not train:
        raise ConfigurationError("the training split is empty")

    if learner == "knn":
        model = KnnModel.fit([to_feature_vector(sample.image) for sample in train],
                             [sample.label for sample in train], min(k, len(train)))
        log.log(f"[Learn] KNN fitted on {len(train)} samples, k = {model.k}")
        return model, []

    if learner != "cnn":
        raise ConfigurationError(f"unknown learner {learner!r}, expected {LEARNERS}")

    val = dataset.part("val") or train
    size = dataset.pipeline.image_size
    size -= size % 4
    config = train_config if train_config is not None else TrainConfig(seed=seed)

    model, history = cnn_train(CnnModel(dataset.classes.n_classes, seed, size),
                               cnn_inputs([sample.image for sample in train], size),
                               [sample.label for sample in train],
                               cnn_inputs([sample.image for sample in val], size),
                               [sample.label for sample in val], config)
    log.log(f"[Learn] CNN trained for {len(history)} epochs, best val accuracy "
            f"{max((stats.val_accuracy for stats in history), default=0.0):.3f}")
    return model, history


def predict_sm(model: Model, images: Sequence[Union[Image, np.ndarray]],
               classes: MoistureClassSet, n_bands: Optional[int] = None) -> float:
    """
    Classifies the image of every band and averages the moisture levels of the predictions

    :param model: The classifier
    :param images: One image per band
    :param classes: The moisture classes the model predicts
    :param n_bands: The expected number of bands
    :return: The soil moisture estimate as a fraction
    """
    if len(images) == 0:
        raise DomainError("need at least one band image")
    if n_bands is not None and len(images) != n_bands:
        raise DomainError(f"expected {n_bands} band images, got {len(images)}")

    return float(np.mean([classes.level(label) for label in classify(model, images)]))


@dataclass(frozen=True, eq=False)
class SavedModel:
    """
    A classifier read back from its file with what it was trained on

    ...

    Attributes
    ----------

    model: Model
        The fitted KNN or trained CNN

    classes: MoistureClassSet
        The moisture level of every class

    pipeline: Optional[PipelineSpec]
        The processing of the training images, None for files that do not record it

    config: Optional[AcquisitionConfig]
        The acquisition of the training data

    band_plan: Optional[BandPlan]
        The bands of the training data

    """

    model: Model
    classes: MoistureClassSet
    pipeline: Optional[PipelineSpec] = None
    config: Optional[AcquisitionConfig] = None
    band_plan: Optional[BandPlan] = None

    @property
    def has_training_context(self) -> bool:
        return self.pipeline is not None and self.band_plan is not None


def training_context(dataset: Dataset) -> dict[str, Any]:
    """
    :param dataset: The dataset a model is fitted on
    :return: The pipeline, band plan and acquisition inputs must match at prediction time
    """
    return {"pipeline": dataset.pipeline.to_dict(), "band_plan": dataset.band_plan.to_dict(),
            "acquisition": dataset.config.to_dict()}


def save_model(model: Model, dataset: Dataset, path: str,
               train_config: Optional[TrainConfig] = None):
    """
    Writes an MWKN or MWNN file holding the model, its classes and its training context

    :param model: The fitted classifier
    :param dataset: The dataset it was fitted on
    :param path: The destination file
    :param train_config: The CNN training settings
    """
    levels = list(dataset.classes.levels)
    if isinstance(model, KnnModel):
        save_knn(model, levels, path, training_context(dataset))
    else:
        save_cnn(model, path, train_config, levels, training_context(dataset))


def load_model(path: str) -> SavedModel:
    """
    :param path: An MWKN or MWNN file
    :return: The classifier, its classes and its training context when the file records it
    """
    record = read_record(path)
    if isinstance(record, CnnRecord):
        model, levels = cnn_from_record(record, path)
        training = record.meta.get("training")
    elif isinstance(record, KnnRecord):
        model, levels = knn_from_record(record)
        training = record.training
    else:
        raise FileFormatError(f"{path} does not hold a model")

    if not levels:
        raise FileFormatError(f"{path} does not record its moisture classes")
    classes = MoistureClassSet(tuple(levels))

    if not training:
        return SavedModel(model, classes)

    try:
        return SavedModel(model, classes, PipelineSpec.from_dict(training["pipeline"]),
                          AcquisitionConfig.from_dict(training["acquisition"]),
                          BandPlan.from_dict(training["band_plan"]))
    except (KeyError, TypeError, ConfigurationError) as error:
        raise FileFormatError(f"{path}: bad training context: {error}") from error
