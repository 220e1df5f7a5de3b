"""
Simulates the stepped frequency B-scans the laboratory rig would record, under the Born
approximation with rank-1 direct coupling clutter and receiver noise
"""

import math
from dataclasses import dataclass

import numpy as np

from subsurface_twin import constants
from subsurface_twin.acquisition import AcquisitionConfig, Band, frequency_grid, scan_positions
from subsurface_twin.errors import ConfigurationError, DomainError
from subsurface_twin.maths_helper import antenna_distances, rms
from subsurface_twin.scene import ContrastMap


@dataclass(frozen=True, eq=False)
class BScan:
    """
    A complex B-scan: one row per swept frequency, one column per antenna position

    ...

    Attributes
    ----------

    data: np.ndarray
        Complex samples, shape (N_f, N_s)

    freq_hz: np.ndarray
        The frequency of every row

    pos_m: np.ndarray
        The antenna position of every column

    provenance: str
        A free text description of where the data comes from

    """

    data: np.ndarray
    freq_hz: np.ndarray
    pos_m: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        freq_hz = np.asarray(self.freq_hz, dtype=float)
        pos_m = np.asarray(self.pos_m, dtype=float)

        if data.ndim != 2 or data.shape != (freq_hz.size, pos_m.size):
            raise DomainError(f"B-scan shape {data.shape} does not match axes "
                              f"({freq_hz.size}, {pos_m.size})")
        if not np.all(np.isfinite(data)):
            raise DomainError("B-scan contains non finite samples")

        object.__setattr__(self, "data", data)
        object.__setattr__(self, "freq_hz", freq_hz)
        object.__setattr__(self, "pos_m", pos_m)

    @property
    def shape(self) -> tuple[int, int]:
        """ (N_f, N_s) """
        return self.data.shape

    def with_data(self, data: np.ndarray, provenance: str) -> "BScan":
        """
        :param data: The new samples, same shape
        :param provenance: The new provenance
        :return: A B-scan on the same axes
        """
        return BScan(data, self.freq_hz.copy(), self.pos_m.copy(), provenance)


@dataclass(frozen=True)
class NoiseSpec:
    """ Clutter and noise added on top of the scattered field """

    snr_db: float = constants.DEFAULT_SNR_DB
    """ Scattered RMS over noise RMS in decibels, inf disables noise """
    clutter_gain: float = constants.DEFAULT_CLUTTER_GAIN
    """ The amplitude of the rank-1 clutter term """
    rng_seed: int = constants.DEFAULT_SEED

    def __post_init__(self):
        if self.clutter_gain < 0:
            raise DomainError(f"clutter gain must be >= 0, got {self.clutter_gain}")
        if math.isnan(self.snr_db):
            raise DomainError("snr must be a number")

    @staticmethod
    def clean() -> "NoiseSpec":
        """
        :return: No clutter and no noise
        """
        return NoiseSpec(snr_db=math.inf, clutter_gain=0.0, rng_seed=0)

    def to_dict(self) -> dict:
        return {"snr_db": None if math.isinf(self.snr_db) else self.snr_db,
                "clutter_gain": self.clutter_gain, "rng_seed": self.rng_seed}

    @staticmethod
    def from_dict(data: dict) -> "NoiseSpec":
        try:
            snr = data.get("snr_db", constants.DEFAULT_SNR_DB)
            return NoiseSpec(math.inf if snr is None else float(snr),
                             float(data.get("clutter_gain", constants.DEFAULT_CLUTTER_GAIN)),
                             int(data.get("rng_seed", constants.DEFAULT_SEED)))
        except (TypeError, ValueError, AttributeError) as error:
            raise ConfigurationError(f"malformed noise document: {error}") from error


def background_wavenumber(f_hz, eps_bg: complex):
    """
    :param f_hz: One frequency or an array of frequencies in hertz, all > 0
    :param eps_bg: The complex relative permittivity of the background
    :return: k = 2πf √ε / c in rad/m, principal root so Im(k) < 0 in lossy soil
    """
    f_hz = np.asarray(f_hz, dtype=float)
    if np.any(f_hz <= 0):
        raise DomainError("frequencies must be > 0")

    k = 2 * np.pi * f_hz * np.sqrt(complex(eps_bg)) / constants.SPEED_OF_LIGHT

    return complex(k) if k.ndim == 0 else k


def round_trip_kernel(freq_hz: np.ndarray, pos_m: np.ndarray, height_m: float,
                      eps_bg: complex, pixel_x: np.ndarray, pixel_z: np.ndarray,
                      cell_area: float) -> np.ndarray:
    """
    The monostatic Born kernel G(r; k)² ΔA with G(r; k) = exp(-jkr) / (4πr)

    Shared by the simulator and the Born operator so both describe the same physics

    :return: Complex kernel of shape (N_f, N_s, P)
    """
    k = np.atleast_1d(background_wavenumber(freq_hz, eps_bg))
    distances = antenna_distances(pos_m, height_m, pixel_x, pixel_z)

    phase = np.exp(-2j * k[:, None, None] * distances[None, :, :])
    spreading = cell_area / (4 * np.pi * distances) ** 2

    return phase * spreading[None, :, :]


def clutter_profile(freq_hz: np.ndarray) -> np.ndarray:
    """
    The smooth frequency profile of the direct coupling clutter, a raised cosine on a
    pedestal across the sweep, scaled to unit norm

    :param freq_hz: The frequency axis
    :return: The profile, same length as the axis
    """
    freq_hz = np.asarray(freq_hz, dtype=float)
    span = freq_hz[-1] - freq_hz[0]
    u = (freq_hz - freq_hz[0]) / span if span > 0 else np.zeros_like(freq_hz)

    profile = 1.0 - 0.5 * np.cos(2 * np.pi * u)

    return profile / np.linalg.norm(profile)


def scattered_field(contrast: ContrastMap, freq_hz: np.ndarray, pos_m: np.ndarray,
                    height_m: float) -> np.ndarray:
    """
    Sums the Born kernel over the pixels with non-zero contrast, in chunks of pixels

    :return: The clean scattered field, shape (N_f, N_s)
    """
    grid = contrast.grid
    chi = contrast.chi.ravel()
    support = np.flatnonzero(chi)

    field = np.zeros((freq_hz.size, pos_m.size), dtype=complex)
    if support.size == 0:
        return field

    pixel_x, pixel_z = grid.pixel_coordinates()

    for start in range(0, support.size, constants.PIXEL_CHUNK):
        chunk = support[start:start + constants.PIXEL_CHUNK]
        kernel = round_trip_kernel(freq_hz, pos_m, height_m, contrast.eps_bg,
                                   pixel_x[chunk], pixel_z[chunk], grid.cell_area)
        field += kernel @ chi[chunk]

    return field


def _simulate(contrast: ContrastMap, config: AcquisitionConfig, noise: NoiseSpec,
              seed: int, provenance: str) -> BScan:
    freq_hz = frequency_grid(config)
    pos_m = scan_positions(config)

    data = scattered_field(contrast, freq_hz, pos_m, config.antenna_height_m)
    signal_rms = rms(data)

    if noise.clutter_gain > 0:
        data = data + noise.clutter_gain * np.outer(clutter_profile(freq_hz),
                                                    np.ones(pos_m.size))

    if math.isfinite(noise.snr_db) and signal_rms > 0:
        rng = np.random.default_rng(seed)
        sigma = signal_rms / 10 ** (noise.snr_db / 20)
        data = data + sigma * (rng.standard_normal(data.shape)
                               + 1j * rng.standard_normal(data.shape)) / np.sqrt(2)

    return BScan(data, freq_hz, pos_m, provenance)


def simulate_bscan(contrast: ContrastMap, config: AcquisitionConfig,
                   noise: NoiseSpec) -> BScan:
    """
    Simulates the B-scan of a contrast map

    S(f, x) = Σ_p χ(p) G(r; k)² ΔA + clutter_gain c(f) + n(f, x)

    :param contrast: The rasterized scene
    :param config: The acquisition
    :param noise: The clutter gain, the SNR relative to the scattered RMS and the seed
    :return: The simulated B-scan
    """
    return _simulate(contrast, config, noise, noise.rng_seed,
                     f"simulated {config.f_min_hz / 1e9:.4g}-{config.f_max_hz / 1e9:.4g} GHz, "
                     f"gain {noise.clutter_gain:g}, snr {noise.snr_db:g} dB, "
                     f"seed {noise.rng_seed}")


def simulate_band(contrast: ContrastMap, band: Band, config: AcquisitionConfig,
                  noise: NoiseSpec) -> BScan:
    """
    Simulates the B-scan of one band, on the band's own frequency grid

    The noise stream of band b is seeded with rng_seed + b, so band 0 of a single band
    plan matches simulate_bscan

    :param contrast: The rasterized scene
    :param band: The band of a plan made from config
    :param config: The wideband acquisition
    :param noise: The clutter and noise of the scene
    :return: The band B-scan
    """
    tolerance = constants.FREQUENCY_TOLERANCE * config.f_step_hz
    if band.f_start_hz < config.f_min_hz - tolerance or \
            band.f_stop_hz > config.f_max_hz + tolerance:
        raise ConfigurationError(f"band {band.index} [{band.f_start_hz}, {band.f_stop_hz}] Hz "
                                 f"lies outside the configured sweep")

    band_config = band.config(config)

    return _simulate(contrast, band_config, noise, noise.rng_seed + band.index,
                     f"band {band.index} {band.f_start_hz / 1e9:.4g}-"
                     f"{band.f_stop_hz / 1e9:.4g} GHz, gain {noise.clutter_gain:g}, "
                     f"snr {noise.snr_db:g} dB, seed {noise.rng_seed}")


slice_band = simulate_band


def bscan_to_time(bscan: BScan) -> np.ndarray:
    """
    :param bscan: A B-scan on a uniform frequency grid
    :return: The synthesized time domain traces, inverse FFT along frequency, shape (N_f, N_s)
    """
    return np.fft.ifft(bscan.data, axis=0)
