"""
SVD clutter reduction of B-scan matrices
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from subsurface_twin import constants
from subsurface_twin.errors import DomainError
from subsurface_twin.forward import BScan


@dataclass(frozen=True)
class ClutterReductionSpec:
    """ How many leading singular components of the B-scan are treated as clutter """

    n_remove: int = constants.DEFAULT_N_REMOVE
    """ The number of leading singular components subtracted """
    wideband_first: bool = False
    """ Reduce the full sweep once and cut the bands from it, instead of reducing each band """

    def __post_init__(self):
        if self.n_remove < 0:
            raise DomainError(f"n_remove must be >= 0, got {self.n_remove}")


def singular_values(bscan: BScan) -> np.ndarray:
    """
    :param bscan: The B-scan
    :return: Its singular values in descending order
    """
    return scipy.linalg.svdvals(bscan.data)


def svd_clutter_reduce(bscan: BScan, spec: ClutterReductionSpec) -> BScan:
    """
    Subtracts the leading singular components of the B-scan

    With S = Σ σ_n u_n v_nᴴ, returns S - Σ_{n ≤ n_remove} σ_n u_n v_nᴴ on the same axes.
    Equal singular values keep the order the decomposition returns them in.

    :param bscan: The B-scan
    :param spec: The number of components to remove
    :return: The clutter reduced B-scan
    """
    n_remove = spec.n_remove
    limit = min(bscan.shape)

    if n_remove > limit:
        raise DomainError(f"cannot remove {n_remove} components from a {bscan.shape} B-scan")

    provenance = f"{bscan.provenance}; svd reduced ({n_remove})"

    if n_remove == 0:
        return bscan.with_data(bscan.data.copy(), provenance)
    if n_remove == limit:
        return bscan.with_data(np.zeros_like(bscan.data), provenance)

    u, s, vh = scipy.linalg.svd(bscan.data, full_matrices=False)
    clutter = (u[:, :n_remove] * s[:n_remove]) @ vh[:n_remove]

    return bscan.with_data(bscan.data - clutter, provenance)


reduce_clutter = svd_clutter_reduce


def select_rows(bscan: BScan, freq_hz: np.ndarray) -> BScan:
    """
    Cuts a band out of a wideband B-scan by taking the nearest measured frequency rows

    :param bscan: The wideband B-scan
    :param freq_hz: The frequencies of the band
    :return: The band B-scan, labelled with the measured frequencies
    """
    freq_hz = np.asarray(freq_hz, dtype=float)
    if freq_hz.min() < bscan.freq_hz[0] - 1.0 or freq_hz.max() > bscan.freq_hz[-1] + 1.0:
        raise DomainError("band frequencies lie outside the B-scan")

    rows = np.abs(bscan.freq_hz[None, :] - freq_hz[:, None]).argmin(axis=1)

    return BScan(bscan.data[rows], bscan.freq_hz[rows], bscan.pos_m.copy(),
                 f"{bscan.provenance}; rows {rows[0]}-{rows[-1]}")
