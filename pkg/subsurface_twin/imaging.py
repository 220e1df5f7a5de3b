"""
Forms cross-sectional images from B-scans: phase compensated back-projection (BPA) and the
truncated SVD Born inversion (BAA)
"""

import threading
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.linalg
from PIL import Image as PilImage

from reporting import log
from subsurface_twin import constants
from subsurface_twin.acquisition import AcquisitionConfig, frequency_grid, scan_positions
from subsurface_twin.errors import ConfigurationError, DomainError
from subsurface_twin.forward import BScan, background_wavenumber, round_trip_kernel
from subsurface_twin.grid import ImagingGrid
from subsurface_twin.maths_helper import antenna_distances, max_normalize

__all__ = ["ImagingGrid", "Image", "TruncationSpec", "TruncatedSolve", "BornOperator",
           "bpa_focal_sum", "bpa_image", "assemble_born_operator", "truncated_svd_solve",
           "baa_image", "resample_image", "export_pgm"]


@dataclass(frozen=True, eq=False)
class Image:
    """ A magnitude image on a grid """

    grid: ImagingGrid
    values: np.ndarray
    """ Non-negative magnitudes, shape (nz, nx) """
    source_band: Optional[int] = None
    pipeline: dict[str, Any] = field(default_factory=dict)
    """ The options of the pipeline that produced the image """

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise DomainError(f"image shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("image values must be finite and non-negative")
        object.__setattr__(self, "values", values)

    def argmax(self) -> tuple[int, int]:
        """
        :return: The (iz, ix) index of the brightest pixel
        """
        return np.unravel_index(int(np.argmax(self.values)), self.values.shape)


@dataclass(frozen=True)
class TruncationSpec:
    """ Which singular components the Born inversion keeps """

    mode: str = "relative_threshold"
    """ "rank" or "relative_threshold" """
    rank: Optional[int] = None
    tau: Optional[float] = constants.DEFAULT_TAU

    def __post_init__(self):
        if self.mode == "rank":
            if self.rank is None or self.rank < 1:
                raise ConfigurationError(f"rank truncation needs rank >= 1, got {self.rank}")
        elif self.mode == "relative_threshold":
            if self.tau is None or not 0 < self.tau <= 1:
                raise ConfigurationError(f"tau must lie in (0, 1], got {self.tau}")
        else:
            raise ConfigurationError(f"unknown truncation mode {self.mode!r}")

    @staticmethod
    def keep_rank(rank: int) -> "TruncationSpec":
        return TruncationSpec("rank", rank=rank, tau=None)

    @staticmethod
    def threshold(tau: float) -> "TruncationSpec":
        return TruncationSpec("relative_threshold", tau=tau)

    def kept(self, singular_values: np.ndarray) -> int:
        """
        :param singular_values: Singular values in descending order
        :return: How many leading components are kept
        """
        if singular_values.size == 0 or singular_values[0] == 0:
            return 0
        if self.mode == "rank":
            return min(self.rank, int(np.count_nonzero(singular_values > 0)))
        return int(np.count_nonzero(singular_values >= self.tau * singular_values[0]))

    def to_dict(self) -> dict[str, Any]:
        return {"mode": self.mode, "rank": self.rank, "tau": self.tau}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "TruncationSpec":
        try:
            return TruncationSpec(data.get("mode", "relative_threshold"), data.get("rank"),
                                  data.get("tau"))
        except AttributeError as error:
            raise ConfigurationError(f"malformed truncation document: {error}") from error


@dataclass(frozen=True, eq=False)
class TruncatedSolve:
    """ The result of a truncated SVD solve """

    x: np.ndarray
    kept_rank: int
    empty: bool
    """ True when every singular value fell below the threshold and x is zero """


def _solve_from_svd(u: np.ndarray, s: np.ndarray, vh: np.ndarray, b: np.ndarray,
                    spec: TruncationSpec) -> TruncatedSolve:
    b = np.asarray(b, dtype=complex).ravel()
    if b.size != u.shape[0]:
        raise DomainError(f"right hand side has {b.size} entries, operator has {u.shape[0]} rows")

    kept = spec.kept(s)
    if kept == 0:
        return TruncatedSolve(np.zeros(vh.shape[1], dtype=complex), 0, True)

    coefficients = (u[:, :kept].conj().T @ b) / s[:kept]
    return TruncatedSolve(vh[:kept].conj().T @ coefficients, kept, False)


def truncated_svd_solve(a: np.ndarray, b: np.ndarray, spec: TruncationSpec) -> TruncatedSolve:
    """
    Solves A x = b keeping only the leading singular components

    x = Σ_{n kept} (u_nᴴ b / σ_n) v_n

    :param a: The operator, shape (M, P)
    :param b: The data, M entries
    :param spec: The truncation
    :return: The solution with the kept rank, a zero solution is flagged as empty
    """
    a = np.asarray(a, dtype=complex)
    u, s, vh = scipy.linalg.svd(a, full_matrices=False)
    return _solve_from_svd(u, s, vh, b, spec)


def assemble_born_operator(grid: ImagingGrid, config: AcquisitionConfig,
                           eps_bg: complex) -> np.ndarray:
    """
    Assembles the Born operator A with A[(i, a), p] = G(r_ap; k_i)² ΔA, row i N_s + a

    :param grid: The unknown contrast mesh
    :param config: The acquisition
    :param eps_bg: The background permittivity
    :return: The complex matrix of shape (N_f N_s, nx nz)
    """
    freq_hz = frequency_grid(config)
    pos_m = scan_positions(config)
    pixel_x, pixel_z = grid.pixel_coordinates()

    kernel = round_trip_kernel(freq_hz, pos_m, config.antenna_height_m, eps_bg,
                               pixel_x, pixel_z, grid.cell_area)

    return kernel.reshape(freq_hz.size * pos_m.size, grid.n_pixels)


class BornOperator:
    """
    An assembled Born operator and its thin SVD, computed once and shared by every B-scan
    of the same acquisition

    ...

    Attributes
    ----------

    matrix: np.ndarray
        The operator, never mutated after assembly

    grid: ImagingGrid
        The contrast mesh

    config: AcquisitionConfig
        The acquisition the operator describes

    Methods
    -------

    solve(b, spec)
        Solves for the contrast with a truncated SVD

    """

    def __init__(self, matrix: np.ndarray, grid: ImagingGrid, config: AcquisitionConfig):
        self.matrix = matrix
        self.grid = grid
        self.config = config
        self._svd: Optional[tuple[np.ndarray, np.ndarray, np.ndarray]] = None
        self._lock = threading.Lock()

    @staticmethod
    def assemble(grid: ImagingGrid, config: AcquisitionConfig, eps_bg: complex) -> "BornOperator":
        return BornOperator(assemble_born_operator(grid, config, eps_bg), grid, config)

    def svd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        :return: The thin SVD (U, σ, Vᴴ) of the operator
        """
        with self._lock:
            if self._svd is None:
                self._svd = scipy.linalg.svd(self.matrix, full_matrices=False)
            return self._svd

    def check_bscan(self, bscan: BScan):
        """
        Raises a DomainError when the B-scan axes do not match the operator's acquisition
        """
        freq_hz = frequency_grid(self.config)
        pos_m = scan_positions(self.config)
        if bscan.shape != (freq_hz.size, pos_m.size) \
                or not np.allclose(bscan.freq_hz, freq_hz, rtol=0, atol=1.0) \
                or not np.allclose(bscan.pos_m, pos_m, rtol=0, atol=1e-9):
            raise DomainError("B-scan axes do not match the Born operator's acquisition")

    def solve(self, b: np.ndarray, spec: TruncationSpec) -> TruncatedSolve:
        u, s, vh = self.svd()
        return _solve_from_svd(u, s, vh, b, spec)


def bpa_focal_sum(bscan: BScan, grid: ImagingGrid, eps_bg: complex,
                  spreading_comp: bool = False,
                  antenna_height_m: float = constants.ANTENNA_HEIGHT_M) -> np.ndarray:
    """
    The complex back-projection sum Σ_i Σ_a S(f_i, x_a) w(r_ap) exp(+j 2 Re(k_i) r_ap)

    :param bscan: The B-scan
    :param grid: The image grid
    :param eps_bg: The background permittivity
    :param spreading_comp: Weight each term by (4πr)² to undo the round trip spreading
    :param antenna_height_m: The height of the antenna above the surface
    :return: Complex sums, shape (nz, nx)
    """
    pixel_x, pixel_z = grid.pixel_coordinates()
    distances = antenna_distances(bscan.pos_m, antenna_height_m, pixel_x, pixel_z)
    two_k = 2 * np.real(np.atleast_1d(background_wavenumber(bscan.freq_hz, eps_bg)))

    focal = np.zeros(grid.n_pixels, dtype=complex)

    # One antenna at a time keeps the phase table at (N_f, P)
    for a in range(bscan.pos_m.size):
        phase = np.exp(1j * np.outer(two_k, distances[a]))
        contribution = bscan.data[:, a] @ phase
        if spreading_comp:
            contribution *= (4 * np.pi * distances[a]) ** 2
        focal += contribution

    return focal.reshape(grid.shape)


def bpa_image(bscan: BScan, grid: ImagingGrid, eps_bg: complex, spreading_comp: bool = False,
              antenna_height_m: float = constants.ANTENNA_HEIGHT_M) -> Image:
    """
    Forms the back-projection image, the modulus of the focal sums normalised to a peak of 1

    :param bscan: The B-scan
    :param grid: The image grid
    :param eps_bg: The background permittivity
    :param spreading_comp: Compensate the round trip spreading
    :param antenna_height_m: The height of the antenna above the surface
    :return: The image
    """
    focal = bpa_focal_sum(bscan, grid, eps_bg, spreading_comp, antenna_height_m)
    return Image(grid, max_normalize(np.abs(focal)),
                 pipeline={"imaging": "bpa", "spreading_comp": spreading_comp})


def baa_image(bscan: BScan, grid: ImagingGrid, config: AcquisitionConfig, eps_bg: complex,
              spec: TruncationSpec, operator: Optional[BornOperator] = None) -> Image:
    """
    Forms the Born inversion image |x| with x the truncated SVD solution of A x = vec(S)

    :param bscan: The B-scan, on the acquisition's axes
    :param grid: The contrast mesh
    :param config: The acquisition
    :param eps_bg: The background permittivity
    :param spec: The truncation
    :param operator: A pre-assembled operator for this grid and acquisition
    :return: The image normalised to a peak of 1
    """
    if operator is None:
        operator = BornOperator.assemble(grid, config, eps_bg)
    elif operator.grid != grid:
        raise DomainError("the Born operator was assembled on another grid")

    operator.check_bscan(bscan)
    result = operator.solve(bscan.data.ravel(), spec)

    if result.empty:
        log.warn("[Imaging] every singular value fell below the truncation threshold")

    return Image(grid, max_normalize(np.abs(result.x).reshape(grid.shape)),
                 pipeline={"imaging": "baa", "kept_rank": result.kept_rank,
                           "truncation": spec.to_dict()})


def resample_values(values: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """
    :param values: A real 2D array
    :param shape: The (rows, columns) output shape
    :return: The bilinearly resampled array
    """
    values = np.asarray(values, dtype=np.float32)
    if values.shape == tuple(shape):
        return values.astype(float)

    picture = PilImage.fromarray(values)
    resized = picture.resize((shape[1], shape[0]), PilImage.Resampling.BILINEAR)

    return np.asarray(resized, dtype=float)


def resample_image(image: Image, shape: tuple[int, int]) -> Image:
    """
    :param image: The image
    :param shape: The (nz, nx) output shape
    :return: The image resampled over the same extent, normalised to a peak of 1
    """
    grid = image.grid
    new_grid = ImagingGrid(grid.x_min_m, grid.x_max_m, grid.z_min_m, grid.z_max_m,
                           shape[1], shape[0])
    values = np.clip(resample_values(image.values, shape), 0.0, None)

    return Image(new_grid, max_normalize(values), image.source_band, dict(image.pipeline))


def export_pgm(image: Image, path: str):
    """
    Writes the image as an 8-bit grayscale PGM

    :param image: The image
    :param path: The output file
    """
    pixels = np.round(max_normalize(image.values) * 255).astype(np.uint8)
    PilImage.fromarray(pixels).save(path, format="PPM")
