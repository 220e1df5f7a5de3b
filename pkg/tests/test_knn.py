import numpy as np
import pytest

from moisture_learning.features import FeatureVector, normalized_pixels, to_feature_vector
from moisture_learning.knn import KnnModel, knn_predict, knn_predict_batch, load_knn, save_knn
from subsurface_twin.errors import DomainError


def _vectors(*values):
    return [FeatureVector(np.atleast_1d(value)) for value in values]


def test_feature_vector_is_max_normalised():
    vector = to_feature_vector(np.array([[2.0, -4.0], [1.0, 0.0]]))
    assert vector.dim == 4
    assert np.allclose(vector.values, [0.5, 1.0, 0.25, 0.0])
    assert not np.any(normalized_pixels(np.zeros((2, 2))))


def test_nearest_neighbour():
    model = KnnModel.fit(_vectors(0.0, 1.0, 5.0), [0, 1, 2], k=1)
    assert knn_predict_batch(model, _vectors(0.2, 0.9, 4.0)) == [0, 1, 2]


def test_majority_vote():
    model = KnnModel.fit(_vectors(0.0, 0.1, 0.2, 0.3), [2, 1, 1, 0], k=3)
    assert knn_predict(model, FeatureVector(np.array([0.0]))) == 1


def test_vote_tie_goes_to_nearest_label():
    model = KnnModel.fit(_vectors(0.0, 1.0, -1.0, 2.0), [0, 1, 1, 0], k=4)
    assert knn_predict(model, FeatureVector(np.array([0.1]))) == 0


def test_distance_tie_goes_to_lower_index():
    model = KnnModel.fit(_vectors(1.0, -1.0), [1, 0], k=1)
    assert knn_predict(model, FeatureVector(np.array([0.0]))) == 1


def test_invalid_models_and_queries():
    model = KnnModel.fit(_vectors(0.0, 1.0), [0, 1], k=1)
    with pytest.raises(DomainError):
        knn_predict(model, FeatureVector(np.zeros(2)))
    with pytest.raises(DomainError):
        KnnModel.fit(_vectors(0.0, 1.0), [0, 1], k=3)
    with pytest.raises(DomainError):
        KnnModel.fit([], [])


def test_knn_file(tmp_path, rng):
    model = KnnModel(rng.standard_normal((6, 4)), [0, 1, 2, 0, 1, 2], k=3)
    path = str(tmp_path / "model.mwkn")
    save_knn(model, [0.25, 0.5, 0.75], path)

    loaded, classes = load_knn(path)
    assert classes == [0.25, 0.5, 0.75]
    assert loaded.k == 3
    assert np.array_equal(loaded.train_features, model.train_features)
    assert np.array_equal(loaded.train_labels, model.train_labels)


def _exhaustive_oracle(features, labels, k, query):
    scored = sorted((float(np.sum((row - query) ** 2)), index)
                    for index, row in enumerate(features))
    nearest = [labels[index] for _, index in scored[:k]]
    votes = {label: nearest.count(label) for label in nearest}
    best = max(votes.values())
    return next(label for label in nearest if votes[label] == best)


def test_matches_exhaustive_oracle(rng):
    for _ in range(100):
        n_train = int(rng.integers(1, 20))
        dim = int(rng.integers(1, 6))
        k = int(rng.integers(1, n_train + 1))
        features = rng.integers(0, 3, (n_train, dim)).astype(float)
        labels = rng.integers(0, 4, n_train).tolist()
        query = rng.integers(0, 3, dim).astype(float)

        model = KnnModel(features, labels, k)
        assert knn_predict(model, FeatureVector(query)) == \
            _exhaustive_oracle(features, labels, k, query)


@pytest.mark.parametrize("gain", [0.125, 4.0, 1024.0])
def test_predictions_ignore_image_gain(rng, gain):
    images = rng.uniform(0, 1, (12, 6, 6))
    labels = np.arange(12) % 3
    model = KnnModel.fit([to_feature_vector(image) for image in images], labels, k=3)
    queries = rng.uniform(0, 1, (8, 6, 6))

    plain = knn_predict_batch(model, [to_feature_vector(query) for query in queries])
    scaled = knn_predict_batch(model, [to_feature_vector(gain * query) for query in queries])
    assert scaled == plain

    rescaled = KnnModel.fit([to_feature_vector(gain * image) for image in images], labels, k=3)
    assert knn_predict_batch(rescaled, [to_feature_vector(query) for query in queries]) == plain
