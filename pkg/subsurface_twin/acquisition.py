"""
Handles the scan geometry, the frequency sweep and the multi-band plan
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from subsurface_twin import constants
from subsurface_twin.errors import ConfigurationError


@dataclass(frozen=True)
class AcquisitionMetadata:
    """ Link budget values of the rig, recorded but never applied to simulated fields """

    tx_power_dbm: float = constants.TX_POWER_DBM
    gain_tx_db: float = constants.ANTENNA_GAIN_DB
    gain_rx_db: float = constants.ANTENNA_GAIN_DB
    gain_lna_db: float = constants.LNA_GAIN_DB
    scan_duration_min: float = constants.SCAN_DURATION_MIN


def _point_count(span_hz: float, step_hz: float) -> int:
    """
    :return: The number of points of the progression 0, step, ..., span
    """
    ratio = span_hz / step_hz
    count = round(ratio)

    if abs(ratio - count) > constants.FREQUENCY_TOLERANCE:
        raise ConfigurationError(f"span {span_hz} Hz is not a multiple of the step {step_hz} Hz")

    return int(count) + 1


@dataclass(frozen=True)
class AcquisitionConfig:
    """
    The SFCW acquisition: a monostatic antenna stepped along a scan line, sweeping
    f_min, f_min + Δf, ..., f_max at every position
    """

    scan_length_m: float = constants.SCAN_LENGTH_M
    """ The length of the scan line in meters """
    n_positions: int = constants.N_POSITIONS
    """ The number of antenna positions """
    f_min_hz: float = constants.F_MIN_HZ
    """ The first swept frequency in hertz """
    f_max_hz: float = constants.F_MAX_HZ
    """ The last swept frequency in hertz """
    f_step_hz: float = constants.F_STEP_HZ
    """ The frequency step in hertz """
    antenna_height_m: float = constants.ANTENNA_HEIGHT_M
    """ The height of the antenna above the soil in meters """
    metadata: AcquisitionMetadata = field(default_factory=AcquisitionMetadata)

    def __post_init__(self):
        if self.f_step_hz <= 0:
            raise ConfigurationError(f"frequency step must be > 0, got {self.f_step_hz}")
        if self.f_min_hz <= 0 or self.f_max_hz < self.f_min_hz:
            raise ConfigurationError(
                f"invalid frequency span [{self.f_min_hz}, {self.f_max_hz}] Hz")
        if self.n_positions < 2:
            raise ConfigurationError(f"need at least 2 positions, got {self.n_positions}")
        if self.scan_length_m <= 0:
            raise ConfigurationError(f"scan length must be > 0, got {self.scan_length_m}")
        if self.antenna_height_m < 0:
            raise ConfigurationError("the antenna cannot be below the surface")

        _point_count(self.f_max_hz - self.f_min_hz, self.f_step_hz)

    @staticmethod
    def reference() -> "AcquisitionConfig":
        """
        :return: The laboratory reference acquisition
        """
        return AcquisitionConfig()

    @property
    def n_frequencies(self) -> int:
        """ The number of swept frequencies """
        return _point_count(self.f_max_hz - self.f_min_hz, self.f_step_hz)

    def with_overrides(self, **overrides: Any) -> "AcquisitionConfig":
        """
        :param overrides: Field values replacing the current ones
        :return: A validated copy of the configuration
        """
        try:
            return dataclasses.replace(self, **overrides)
        except TypeError as error:
            raise ConfigurationError(str(error)) from error

    def with_frequency_step(self, f_step_hz: float) -> "AcquisitionConfig":
        """
        Changes the frequency step, moving f_max down onto the new grid if needed

        :param f_step_hz: The new frequency step in hertz
        :return: The new configuration
        """
        if f_step_hz <= 0:
            raise ConfigurationError(f"frequency step must be > 0, got {f_step_hz}")

        steps = math.floor((self.f_max_hz - self.f_min_hz) / f_step_hz
                           + constants.FREQUENCY_TOLERANCE)

        return self.with_overrides(f_step_hz=f_step_hz,
                                   f_max_hz=self.f_min_hz + steps * f_step_hz)

    def to_dict(self) -> dict[str, Any]:
        """
        :return: The configuration as a JSON compatible dictionary, frequencies as integers
        """
        return {
            "scan_length_m": self.scan_length_m,
            "n_positions": self.n_positions,
            "f_min_hz": int(round(self.f_min_hz)),
            "f_max_hz": int(round(self.f_max_hz)),
            "f_step_hz": int(round(self.f_step_hz)),
            "antenna_height_m": self.antenna_height_m,
            "metadata": dataclasses.asdict(self.metadata),
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "AcquisitionConfig":
        """
        :param data: A dictionary produced by to_dict, missing fields take their defaults
        :return: The configuration
        """
        try:
            values = dict(data)
            metadata = AcquisitionMetadata(**values.pop("metadata", {}))
            return AcquisitionConfig(metadata=metadata, **values)
        except TypeError as error:
            raise ConfigurationError(f"malformed acquisition document: {error}") from error


def frequency_grid(config: AcquisitionConfig) -> np.ndarray:
    """
    :param config: The acquisition
    :return: The swept frequencies f_min, f_min + Δf, ..., f_max in hertz
    """
    return config.f_min_hz + np.arange(config.n_frequencies) * config.f_step_hz


def scan_positions(config: AcquisitionConfig) -> np.ndarray:
    """
    :param config: The acquisition
    :return: The antenna positions, uniformly spaced over [0, L], in meters
    """
    return np.linspace(0.0, config.scan_length_m, config.n_positions)


@dataclass(frozen=True)
class Band:
    """ One frequency band of a band plan """

    index: int
    """ The position of the band in the plan, 0 has the lowest start frequency """
    f_start_hz: float
    f_stop_hz: float
    n_frequencies: int
    """ The number of frequency points sampled in the band """

    def config(self, base: AcquisitionConfig) -> AcquisitionConfig:
        """
        :param base: The wideband acquisition the band is cut from
        :return: The acquisition restricted to the band's own frequency grid
        """
        f_max = self.f_start_hz + (self.n_frequencies - 1) * base.f_step_hz
        return base.with_overrides(f_min_hz=self.f_start_hz, f_max_hz=f_max)

    def to_dict(self) -> dict[str, Any]:
        """
        :return: The band as a JSON compatible dictionary
        """
        return {"index": self.index, "f_start_hz": int(round(self.f_start_hz)),
                "f_stop_hz": int(round(self.f_stop_hz)), "n_frequencies": self.n_frequencies}


@dataclass(frozen=True)
class BandPlan:
    """
    Equal bandwidth windows sliding over the sweep, band b spans
    [f_min + b δf, f_max - (n_bands - 1 - b) δf]
    """

    n_bands: int
    band_spacing_hz: float
    f_min_hz: float
    f_max_hz: float
    f_step_hz: float

    @property
    def bandwidth_hz(self) -> float:
        """ The common bandwidth of every band """
        return self.f_max_hz - self.f_min_hz - (self.n_bands - 1) * self.band_spacing_hz

    @property
    def n_frequencies(self) -> int:
        """ The number of frequency points of every band """
        return math.floor(self.bandwidth_hz / self.f_step_hz + constants.FREQUENCY_TOLERANCE) + 1

    def band(self, index: int) -> Band:
        """
        :param index: The band index
        :return: The band
        """
        if not 0 <= index < self.n_bands:
            raise ConfigurationError(f"band {index} is not in a plan of {self.n_bands} bands")

        start = self.f_min_hz + index * self.band_spacing_hz
        stop = self.f_max_hz - (self.n_bands - 1 - index) * self.band_spacing_hz

        return Band(index, start, stop, self.n_frequencies)

    def bands(self) -> list[Band]:
        """
        :return: Every band of the plan, lowest start frequency first
        """
        return [self.band(index) for index in range(self.n_bands)]

    def subset(self, name: str) -> list[int]:
        """
        :param name: "all", "lower" (first half of the bands) or "upper" (second half)
        :return: The indices of the selected bands
        """
        half = self.n_bands // 2
        if name == "all":
            return list(range(self.n_bands))
        if name == "lower":
            return list(range(half))
        if name == "upper":
            return list(range(half, self.n_bands))
        raise ConfigurationError(f"unknown band subset {name!r}")

    def to_dict(self) -> dict[str, Any]:
        """
        :return: The plan and its derived bands as a JSON compatible dictionary
        """
        return {"n_bands": self.n_bands, "band_spacing_hz": int(round(self.band_spacing_hz)),
                "f_min_hz": int(round(self.f_min_hz)), "f_max_hz": int(round(self.f_max_hz)),
                "f_step_hz": int(round(self.f_step_hz)),
                "bands": [band.to_dict() for band in self.bands()]}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "BandPlan":
        """
        :param data: A dictionary produced by to_dict
        :return: The plan
        """
        try:
            return BandPlan(int(data["n_bands"]), float(data["band_spacing_hz"]),
                            float(data["f_min_hz"]), float(data["f_max_hz"]),
                            float(data["f_step_hz"]))
        except (KeyError, TypeError) as error:
            raise ConfigurationError(f"malformed band plan document: {error}") from error


def make_band_plan(config: AcquisitionConfig, n_bands: int = constants.N_BANDS,
                   band_spacing_hz: float = constants.BAND_SPACING_HZ) -> BandPlan:
    """
    Slices the sweep into equal bandwidth bands offset by δf

    :param config: The wideband acquisition
    :param n_bands: The number of bands
    :param band_spacing_hz: The offset δf between consecutive band starts
    :return: The band plan
    """
    if n_bands < 1:
        raise ConfigurationError(f"need at least one band, got {n_bands}")
    if band_spacing_hz < 0:
        raise ConfigurationError(f"band spacing must be >= 0, got {band_spacing_hz}")
    if n_bands > 1 and band_spacing_hz == 0:
        raise ConfigurationError("bands of a multi-band plan need a positive spacing")

    span = config.f_max_hz - config.f_min_hz
    if n_bands > 1 and (n_bands - 1) * band_spacing_hz >= span:
        raise ConfigurationError(
            f"{n_bands} bands spaced by {band_spacing_hz} Hz leave no bandwidth in {span} Hz")

    return BandPlan(n_bands, float(band_spacing_hz), float(config.f_min_hz),
                    float(config.f_max_hz), float(config.f_step_hz))
