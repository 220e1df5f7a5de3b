"""
Turns images into the Euclidean feature vectors the classifiers compare
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from subsurface_twin.errors import DomainError
from subsurface_twin.imaging import Image
from subsurface_twin.maths_helper import max_normalize


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """ A flattened image scaled so its largest magnitude is 1 """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise DomainError("feature vector contains non finite values")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size


def normalized_pixels(image: Union[Image, np.ndarray]) -> np.ndarray:
    """
    :param image: An image or a 2D array
    :return: The 2D values scaled to a peak magnitude of 1
    """
    values = image.values if isinstance(image, Image) else np.asarray(image, dtype=float)
    return np.abs(max_normalize(values))


def to_feature_vector(image: Union[Image, np.ndarray]) -> FeatureVector:
    """
    :param image: An image or a 2D array
    :return: The per-image max-abs normalised, flattened pixels
    """
    return FeatureVector(normalized_pixels(image))
