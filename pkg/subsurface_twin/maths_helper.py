"""
Helper file for maths functions
"""

import numpy as np

from subsurface_twin.errors import DomainError


def antenna_distances(pos_m: np.ndarray, height_m: float,
                      pixel_x: np.ndarray, pixel_z: np.ndarray) -> np.ndarray:
    """
    Gets the distance between every antenna position and every pixel

    The antennas slide along the surface (z = -height) and the pixels lie below it (z > 0)

    :param pos_m: The antenna positions along the scan line in meters, shape (N_s,)
    :param height_m: The height of the antenna above the surface in meters
    :param pixel_x: The x coordinates of the pixels in meters, shape (P,)
    :param pixel_z: The depths of the pixels in meters, shape (P,)
    :return: The distances in meters, shape (N_s, P)
    """
    dx = np.asarray(pos_m, dtype=float)[:, None] - np.asarray(pixel_x, dtype=float)[None, :]
    dz = np.asarray(pixel_z, dtype=float)[None, :] + height_m

    distances = np.hypot(dx, dz)

    if np.any(distances == 0):
        raise DomainError("an antenna is collocated with a pixel centre (r = 0)")

    return distances


def rms(values: np.ndarray) -> float:
    """
    :param values: Real or complex samples
    :return: The root mean square magnitude of the samples, 0 for an empty array
    """
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.abs(values) ** 2)))


def normalized_correlation(first: np.ndarray, second: np.ndarray) -> float:
    """
    :param first: A real or complex array
    :param second: An array of the same shape
    :return: |<first, second>| / (|first| |second|), 0 if either array is zero
    """
    first = np.ravel(first)
    second = np.ravel(second)
    norm = np.linalg.norm(first) * np.linalg.norm(second)
    if norm == 0:
        return 0.0
    return float(np.abs(np.vdot(first, second)) / norm)


def max_normalize(values: np.ndarray) -> np.ndarray:
    """
    Scales the values so the largest magnitude is 1, an all-zero array is returned unchanged

    :param values: The values being scaled
    :return: A scaled copy of the values
    """
    values = np.array(values, dtype=float)
    peak = np.max(np.abs(values)) if values.size else 0.0

    if peak > 0:
        values /= peak

    return values
