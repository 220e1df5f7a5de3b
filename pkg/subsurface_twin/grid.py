"""
The pixel grid of the subsurface cross-section
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from subsurface_twin import constants
from subsurface_twin.errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class ImagingGrid:
    """
    A regular grid of pixels over the (x, z) cross-section below the scan line

    Pixel (iz, ix) is the cell [x_min + ix dx, x_min + (ix + 1) dx] x [z_min + iz dz, ...],
    represented by its centre. Pixels are flattened row-major, p = iz * nx + ix.
    """

    x_min_m: float
    """ The left edge of the grid in meters """
    x_max_m: float
    """ The right edge of the grid in meters """
    z_min_m: float
    """ The top edge of the grid in meters, 0 is the soil surface """
    z_max_m: float
    """ The bottom edge of the grid in meters """
    nx: int
    """ The number of pixel columns """
    nz: int
    """ The number of pixel rows """

    def __post_init__(self):
        if self.nx < 2 or self.nz < 2:
            raise ConfigurationError(f"grid needs at least 2x2 pixels, got {self.nx}x{self.nz}")
        if self.z_min_m < 0:
            raise ConfigurationError(f"grid must lie below the surface, z_min = {self.z_min_m}")
        if self.x_max_m <= self.x_min_m or self.z_max_m <= self.z_min_m:
            raise ConfigurationError("grid bounds must be increasing")

    @staticmethod
    def reference(scan_length_m: float, nx: int = constants.IMAGE_PIXELS,
                  nz: int = constants.IMAGE_PIXELS,
                  depth_m: float = constants.IMAGE_DEPTH_M) -> "ImagingGrid":
        """
        :param scan_length_m: The length of the scan line the grid spans
        :param nx: The number of pixel columns
        :param nz: The number of pixel rows
        :param depth_m: The depth of the imaging area
        :return: The default imaging grid below a scan line
        """
        return ImagingGrid(0.0, float(scan_length_m), 0.0, float(depth_m), nx, nz)

    @staticmethod
    def baa_default(scan_length_m: float) -> "ImagingGrid":
        """
        :param scan_length_m: The length of the scan line the grid spans
        :return: The coarser mesh the Born inversion solves on
        """
        return ImagingGrid.reference(scan_length_m, constants.BAA_PIXELS, constants.BAA_PIXELS)

    @property
    def dx(self) -> float:
        """ The width of a pixel in meters """
        return (self.x_max_m - self.x_min_m) / self.nx

    @property
    def dz(self) -> float:
        """ The height of a pixel in meters """
        return (self.z_max_m - self.z_min_m) / self.nz

    @property
    def cell_area(self) -> float:
        """ The area of a pixel in square meters """
        return self.dx * self.dz

    @property
    def shape(self) -> tuple[int, int]:
        """ The (rows, columns) shape of images on this grid """
        return self.nz, self.nx

    @property
    def n_pixels(self) -> int:
        """ The total number of pixels """
        return self.nx * self.nz

    def x_centers(self) -> np.ndarray:
        """
        :return: The x coordinate of each pixel column
        """
        return self.x_min_m + (np.arange(self.nx) + 0.5) * self.dx

    def z_centers(self) -> np.ndarray:
        """
        :return: The depth of each pixel row
        """
        return self.z_min_m + (np.arange(self.nz) + 0.5) * self.dz

    def pixel_coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """
        :return: The flattened (x, z) coordinates of every pixel centre
        """
        grid_x, grid_z = np.meshgrid(self.x_centers(), self.z_centers())
        return grid_x.ravel(), grid_z.ravel()

    def contains(self, x_m: float, z_m: float) -> bool:
        """
        :param x_m: x coordinate in meters
        :param z_m: depth in meters
        :return: True if the point lies inside the grid bounds
        """
        return self.x_min_m <= x_m <= self.x_max_m and self.z_min_m <= z_m <= self.z_max_m

    def cell_index(self, x_m: float, z_m: float) -> tuple[int, int]:
        """
        :param x_m: x coordinate in meters
        :param z_m: depth in meters
        :return: The (iz, ix) index of the pixel containing the point
        """
        if not self.contains(x_m, z_m):
            raise DomainError(f"point ({x_m}, {z_m}) lies outside the grid")

        ix = min(int(np.floor((x_m - self.x_min_m) / self.dx)), self.nx - 1)
        iz = min(int(np.floor((z_m - self.z_min_m) / self.dz)), self.nz - 1)

        return iz, ix

    def pixel_center(self, iz: int, ix: int) -> tuple[float, float]:
        """
        :param iz: The pixel row
        :param ix: The pixel column
        :return: The (x, z) centre of the pixel
        """
        return (self.x_min_m + (ix + 0.5) * self.dx,
                self.z_min_m + (iz + 0.5) * self.dz)

    def to_dict(self) -> dict[str, Any]:
        """
        :return: The grid as a JSON compatible dictionary
        """
        return {"x_min_m": self.x_min_m, "x_max_m": self.x_max_m,
                "z_min_m": self.z_min_m, "z_max_m": self.z_max_m,
                "nx": self.nx, "nz": self.nz}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "ImagingGrid":
        """
        :param data: A dictionary produced by to_dict
        :return: The grid described by the dictionary
        """
        try:
            return ImagingGrid(float(data["x_min_m"]), float(data["x_max_m"]),
                               float(data["z_min_m"]), float(data["z_max_m"]),
                               int(data["nx"]), int(data["nz"]))
        except (KeyError, TypeError) as error:
            raise ConfigurationError(f"malformed grid document: {error}") from error
