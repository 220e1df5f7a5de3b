"""
K nearest neighbours classification by exhaustive search
"""

from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from moisture_learning.features import FeatureVector
from scan_files.protocol import KnnRecord, read_record, write_record
from subsurface_twin import constants
from subsurface_twin.errors import DomainError


@dataclass(frozen=True, eq=False)
class KnnModel:
    """
    The stored training set of a KNN classifier

    ...

    Attributes
    ----------

    train_features: np.ndarray
        One feature vector per row

    train_labels: np.ndarray
        The class index of every row

    k: int
        The number of neighbours that vote

    """

    train_features: np.ndarray
    train_labels: np.ndarray
    k: int = constants.KNN_K

    def __post_init__(self):
        features = np.asarray(self.train_features, dtype=float)
        labels = np.asarray(self.train_labels, dtype=int)

        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise DomainError(f"{labels.size} labels for a {features.shape} feature matrix")
        if not 1 <= self.k <= features.shape[0]:
            raise DomainError(f"k must lie in [1, {features.shape[0]}], got {self.k}")

        object.__setattr__(self, "train_features", features)
        object.__setattr__(self, "train_labels", labels)

    @staticmethod
    def fit(features: Sequence[FeatureVector], labels: Sequence[int],
            k: int = constants.KNN_K) -> "KnnModel":
        """
        :param features: The training feature vectors
        :param labels: Their class indices
        :param k: The number of voting neighbours
        :return: The model
        """
        if len(features) == 0:
            raise DomainError("cannot fit a KNN model without training samples")
        return KnnModel(np.stack([feature.values for feature in features]), np.asarray(labels), k)

    @property
    def dim(self) -> int:
        return self.train_features.shape[1]


def knn_predict(model: KnnModel, query: FeatureVector) -> int:
    """
    Majority vote of the k nearest training points

    Equal distances favour the lower training index; equal vote counts favour the label of
    the nearest neighbour among the tied labels

    :param model: The trained model
    :param query: The feature vector being classified
    :return: The predicted class index
    """
    if query.dim != model.dim:
        raise DomainError(f"query has dimension {query.dim}, model expects {model.dim}")

    distances = np.linalg.norm(model.train_features - query.values[None, :], axis=1)
    order = np.lexsort((np.arange(distances.size), distances))
    nearest = model.train_labels[order[:model.k]]

    labels, counts = np.unique(nearest, return_counts=True)
    tied = set(labels[counts == counts.max()].tolist())

    return next(int(label) for label in nearest if int(label) in tied)


def knn_predict_batch(model: KnnModel, queries: Sequence[FeatureVector]) -> list[int]:
    return [knn_predict(model, query) for query in queries]


def save_knn(model: KnnModel, classes: Sequence[float], path: str,
             training: Optional[dict[str, Any]] = None):
    """
    :param model: The model
    :param classes: The moisture level of every class
    :param path: The MWKN file
    :param training: The pipeline, band plan and acquisition the features came from
    """
    write_record(KnnRecord(model.train_features, model.train_labels, model.k, list(classes),
                           training), path)


def knn_from_record(record: KnnRecord) -> tuple[KnnModel, list[float]]:
    """
    :param record: A decoded MWKN record
    :return: The model and the moisture level of every class
    """
    return KnnModel(record.features, record.labels, record.k), record.classes


def load_knn(path: str) -> tuple[KnnModel, list[float]]:
    """
    :param path: An MWKN file
    :return: The model and the moisture level of every class
    """
    return knn_from_record(read_record(path, KnnRecord))
