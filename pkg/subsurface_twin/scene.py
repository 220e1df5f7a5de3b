"""
Handles the subsurface scene the radar scans: soil, pipe, moist region and medium clutter
"""

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from subsurface_twin import constants
from subsurface_twin.errors import DomainError
from subsurface_twin.grid import ImagingGrid


class ScattererKind(enum.Enum):
    """ The kinds of discrete scatterers buried in the soil """

    PEBBLE = "pebble"
    """ A soil pebble, drier than the surrounding soil """
    ROOT = "root"
    """ A plant root, holding water """


class ClutterDensity(enum.Enum):
    """ The qualitative densities of medium clutter """

    NONE = "none"
    LOW = "low"
    MODERATE = "moderate"
    HIGH = "high"

    def count(self) -> int:
        """
        :return: The number of clutter points added for this density
        """
        return constants.CLUTTER_DENSITY_COUNTS[self.value]


def moisture_to_permittivity(sm_fraction: float,
                             loss_tangent_bg: float = constants.SOIL_LOSS_TANGENT) -> complex:
    """
    Maps soil moisture to complex relative permittivity with the Topp polynomial

    θ = 0.4 sm, ε' = 3.03 + 9.3 θ + 146 θ² - 76.7 θ³, ε'' = ε' (tan δ + 0.3 θ)

    :param sm_fraction: The soil moisture as a fraction of saturation, in [0, 1]
    :param loss_tangent_bg: The loss tangent of the dry soil
    :return: The complex relative permittivity ε' - j ε''
    """
    if not 0.0 <= sm_fraction <= 1.0:
        raise DomainError(f"soil moisture must lie in [0, 1], got {sm_fraction}")

    theta = constants.SATURATION_WATER_CONTENT * sm_fraction
    real = 3.03 + 9.3 * theta + 146.0 * theta ** 2 - 76.7 * theta ** 3
    imag = real * (loss_tangent_bg + constants.WATER_LOSS_FACTOR * theta)

    return complex(real, -imag)


@dataclass(frozen=True)
class SoilModel:
    """ The dielectric model of the background soil """

    eps_bg_real: float = constants.DRY_SOIL_PERMITTIVITY
    """ The relative permittivity of dry background soil """
    loss_tangent_bg: float = constants.SOIL_LOSS_TANGENT
    """ The loss tangent of dry background soil """
    moisture_map_kind: str = "topp_polynomial"
    """ The moisture to permittivity mapping, only the Topp polynomial is supported """

    def __post_init__(self):
        if self.eps_bg_real < 1:
            raise DomainError(f"background permittivity must be >= 1, got {self.eps_bg_real}")
        if self.loss_tangent_bg < 0:
            raise DomainError(f"loss tangent must be >= 0, got {self.loss_tangent_bg}")
        if self.moisture_map_kind != "topp_polynomial":
            raise DomainError(f"unknown moisture mapping {self.moisture_map_kind!r}")

    def background_permittivity(self) -> complex:
        """
        :return: The complex permittivity of the dry background soil
        """
        return complex(self.eps_bg_real, -self.eps_bg_real * self.loss_tangent_bg)

    def moisture_to_permittivity(self, sm_fraction: float) -> complex:
        """
        :param sm_fraction: The soil moisture in [0, 1]
        :return: The permittivity of soil with this moisture
        """
        return moisture_to_permittivity(sm_fraction, self.loss_tangent_bg)


@dataclass(frozen=True)
class MoistRegion:
    """ A disk of wet soil, the surrogate of a moist soil bag or a leak plume """

    center_x_m: float
    center_z_m: float
    radius_m: float
    sm_fraction: float

    def __post_init__(self):
        if self.radius_m <= 0:
            raise DomainError(f"moist region radius must be > 0, got {self.radius_m}")
        if not 0.0 <= self.sm_fraction <= 1.0:
            raise DomainError(f"soil moisture must lie in [0, 1], got {self.sm_fraction}")
        if self.center_z_m <= 0:
            raise DomainError("moist region must lie below the surface")


@dataclass(frozen=True)
class ClutterPoint:
    """ A pebble or root cross-section """

    x_m: float
    z_m: float
    contrast: complex
    kind: ScattererKind
    radius_m: float = 0.0
    """ The radius of the scatterer, 0 occupies the single pixel containing the point """

    def __post_init__(self):
        if self.z_m <= 0:
            raise DomainError(f"clutter point must lie below the surface, z = {self.z_m}")
        if self.radius_m < 0:
            raise DomainError(f"clutter radius must be >= 0, got {self.radius_m}")


@dataclass(frozen=True)
class Scene:
    """
    The parametric ground truth below the scan line

    ...

    Attributes
    ----------

    soil: SoilModel
        The background soil

    pipe_depth_m, pipe_diameter_m, pipe_x_m: float
        The depth of the pipe centre, its diameter (0 for no pipe) and its position along
        the scan line

    moist_region: Optional[MoistRegion]
        The wet soil disk, None for dry soil

    clutter_points: tuple[ClutterPoint]
        Pebbles and roots

    """

    soil: SoilModel = field(default_factory=SoilModel)
    pipe_depth_m: float = constants.PIPE_DEPTH_M
    pipe_diameter_m: float = constants.PIPE_DIAMETER_M
    pipe_x_m: float = constants.SCAN_LENGTH_M / 2
    pipe_water_filled: bool = True
    moist_region: Optional[MoistRegion] = None
    clutter_points: tuple[ClutterPoint, ...] = ()
    rng_seed: int = 0

    def __post_init__(self):
        if self.pipe_depth_m <= 0:
            raise DomainError(f"pipe depth must be > 0, got {self.pipe_depth_m}")
        if self.pipe_diameter_m < 0:
            raise DomainError(f"pipe diameter must be >= 0, got {self.pipe_diameter_m}")
        object.__setattr__(self, "clutter_points", tuple(self.clutter_points))

    def has_pipe(self) -> bool:
        """
        :return: True if the scene contains a pipe
        """
        return self.pipe_diameter_m > 0

    def pipe_contrast(self) -> float:
        """
        :return: The contrast of the pipe disk, depending on whether it carries water
        """
        return constants.PIPE_CONTRAST_WET if self.pipe_water_filled \
            else constants.PIPE_CONTRAST_DRY


@dataclass(frozen=True, eq=False)
class ContrastMap:
    """ The contrast χ = ε / ε_bg - 1 of every pixel of a grid """

    grid: ImagingGrid
    chi: np.ndarray
    """ Complex contrast, shape (nz, nx) """
    eps_bg: complex
    """ The background permittivity the contrast is relative to """

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=complex)
        if chi.shape != self.grid.shape:
            raise DomainError(f"contrast shape {chi.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "chi", chi)

    @staticmethod
    def empty(grid: ImagingGrid, eps_bg: complex) -> "ContrastMap":
        """
        :param grid: The grid of the map
        :param eps_bg: The background permittivity
        :return: A map without any scatterer
        """
        return ContrastMap(grid, np.zeros(grid.shape, dtype=complex), eps_bg)

    def support(self) -> np.ndarray:
        """
        :return: Boolean mask of the pixels with non-zero contrast
        """
        return self.chi != 0

    def __add__(self, other: "ContrastMap") -> "ContrastMap":
        if other.grid != self.grid or other.eps_bg != self.eps_bg:
            raise DomainError("contrast maps must share grid and background")
        return ContrastMap(self.grid, self.chi + other.chi, self.eps_bg)


def _disk_mask(grid: ImagingGrid, center_x: float, center_z: float, radius: float) \
        -> np.ndarray:
    """
    :return: The pixels whose centre lies inside the disk
    """
    grid_x, grid_z = np.meshgrid(grid.x_centers(), grid.z_centers())
    return (grid_x - center_x) ** 2 + (grid_z - center_z) ** 2 <= radius ** 2


def _check_inside(grid: ImagingGrid, x_m: float, z_m: float, what: str):
    if not grid.contains(x_m, z_m):
        raise DomainError(f"{what} at ({x_m}, {z_m}) lies outside the imaging grid")


def rasterize_scene(scene: Scene, grid: ImagingGrid) -> ContrastMap:
    """
    Samples the scene's contrast on each pixel of the grid

    Overlapping components are painted in the order moist region, pipe, clutter, so the
    later ones win

    :param scene: The scene being rasterized
    :param grid: The pixel grid
    :return: The contrast map of the scene
    """
    eps_bg = scene.soil.background_permittivity()
    chi = np.zeros(grid.shape, dtype=complex)

    region = scene.moist_region
    if region is not None:
        _check_inside(grid, region.center_x_m, region.center_z_m, "moist region")
        eps_moist = scene.soil.moisture_to_permittivity(region.sm_fraction)
        chi[_disk_mask(grid, region.center_x_m, region.center_z_m, region.radius_m)] = \
            eps_moist / eps_bg - 1

    if scene.has_pipe():
        _check_inside(grid, scene.pipe_x_m, scene.pipe_depth_m, "pipe")
        chi[_disk_mask(grid, scene.pipe_x_m, scene.pipe_depth_m, scene.pipe_diameter_m / 2)] = \
            scene.pipe_contrast()

    for point in scene.clutter_points:
        _check_inside(grid, point.x_m, point.z_m, f"{point.kind.value}")
        if point.radius_m > 0:
            chi[_disk_mask(grid, point.x_m, point.z_m, point.radius_m)] = point.contrast
        chi[grid.cell_index(point.x_m, point.z_m)] = point.contrast

    return ContrastMap(grid, chi, eps_bg)


def add_medium_clutter(scene: Scene, kind: ScattererKind, density: ClutterDensity, seed: int,
                       grid: Optional[ImagingGrid] = None) -> Scene:
    """
    Scatters pebbles or roots uniformly over the grid footprint

    :param scene: The scene receiving the clutter
    :param kind: The kind of the scatterers
    :param density: The qualitative density, which fixes the number of points
    :param seed: The seed of the positions and radii
    :param grid: The footprint the points are drawn in, defaults to the reference grid
    :return: A copy of the scene with the points appended
    """
    kind = ScattererKind(kind)
    density = ClutterDensity(density)

    if grid is None:
        grid = ImagingGrid.reference(constants.SCAN_LENGTH_M)

    count = density.count()
    if count == 0:
        return scene

    rng = np.random.default_rng(seed)

    # Points stay half a cell inside the grid so their own pixel is inside as well
    xs = rng.uniform(grid.x_min_m + grid.dx / 2, grid.x_max_m - grid.dx / 2, size=count)
    zs = rng.uniform(grid.z_min_m + grid.dz / 2, grid.z_max_m - grid.dz / 2, size=count)

    if kind == ScattererKind.PEBBLE:
        radii = rng.uniform(*constants.PEBBLE_RADIUS_RANGE_M, size=count)
        contrast = constants.PEBBLE_CONTRAST
    else:
        radii = rng.uniform(*constants.ROOT_RADIUS_RANGE_M, size=count)
        contrast = constants.ROOT_CONTRAST

    points = [ClutterPoint(float(x), float(z), contrast, kind, float(radius))
              for x, z, radius in zip(xs, zs, radii)]

    return dataclasses.replace(scene, clutter_points=scene.clutter_points + tuple(points))


def make_reference_scene(sm_fraction: float, scan_length_m: float = constants.SCAN_LENGTH_M,
                         soil: Optional[SoilModel] = None, seed: int = 0) -> Scene:
    """
    Builds the bag-over-pipe scene: the water carrying pipe under a moist soil bag

    :param sm_fraction: The moisture of the bag, 0 leaves the soil dry
    :param scan_length_m: The length of the scan line, the pipe lies below its middle
    :param soil: The background soil, defaults to dry Topp soil
    :param seed: The seed recorded on the scene
    :return: The scene
    """
    soil = soil if soil is not None else SoilModel()
    center_x = scan_length_m / 2

    region = None
    if sm_fraction > 0:
        region = MoistRegion(center_x, constants.PIPE_DEPTH_M,
                             constants.MOIST_REGION_RADIUS_M, sm_fraction)

    return Scene(soil=soil, pipe_x_m=center_x, moist_region=region, rng_seed=seed)


def make_leak_scene(radius_m: float, sm_fraction: float = constants.LEAK_SM_FRACTION,
                    scan_length_m: float = constants.SCAN_LENGTH_M, seed: int = 0) -> Scene:
    """
    Builds a punctured pipe scene, the plume spreads around the pipe as it grows

    :param radius_m: The radius of the wet plume
    :param sm_fraction: The moisture of the wet soil
    :param scan_length_m: The length of the scan line
    :param seed: The seed recorded on the scene
    :return: The scene
    """
    center_x = scan_length_m / 2
    region = MoistRegion(center_x, constants.PIPE_DEPTH_M, radius_m, sm_fraction)
    return Scene(pipe_x_m=center_x, moist_region=region, rng_seed=seed)
