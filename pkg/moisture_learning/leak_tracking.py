"""
Follows the soil moisture around a punctured pipe over consecutive scans
"""

import dataclasses
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from moisture_learning.dataset import MoistureClassSet, PipelineSpec, band_images
from moisture_learning.learn import Model, predict_sm
from reporting import log
from subsurface_twin import constants
from subsurface_twin.acquisition import AcquisitionConfig, BandPlan
from subsurface_twin.errors import DomainError
from subsurface_twin.forward import NoiseSpec
from subsurface_twin.imaging import Image
from subsurface_twin.scene import make_leak_scene
from subsurface_twin.threadproc import BandWorkerPool


@dataclass(frozen=True)
class LeakTrack:
    """ Moisture estimates over time and their least squares line """

    times_min: tuple[float, ...]
    sm_estimates: tuple[float, ...]
    slope_per_min: float
    intercept: float
    reference_sm: Optional[float] = None
    """ An independently measured moisture, reported alongside """

    def fitted(self, time_min: float) -> float:
        """
        :param time_min: A time in minutes
        :return: The value of the fitted line
        """
        return self.intercept + self.slope_per_min * time_min

    def to_dict(self) -> dict[str, Any]:
        return {"times_min": list(self.times_min), "sm_estimates": list(self.sm_estimates),
                "fit": {"slope_per_min": self.slope_per_min, "intercept": self.intercept},
                "reference_sm": self.reference_sm}


def fit_track(times_min: Sequence[float], sm_estimates: Sequence[float],
              reference_sm: Optional[float] = None) -> LeakTrack:
    """
    Fits the ordinary least squares line through the estimates

    :param times_min: The scan times in minutes
    :param sm_estimates: The moisture estimate of every scan
    :param reference_sm: An independently measured moisture
    :return: The track
    """
    times = np.asarray(times_min, dtype=float)
    estimates = np.asarray(sm_estimates, dtype=float)

    if times.size != estimates.size:
        raise DomainError(f"{times.size} times for {estimates.size} estimates")
    if times.size < 2:
        raise DomainError("a leak track needs at least two scans")
    if np.ptp(times) == 0:
        raise DomainError("the scans must not all share the same time")

    fit = stats.linregress(times, estimates)

    return LeakTrack(tuple(times.tolist()), tuple(estimates.tolist()), float(fit.slope),
                     float(fit.intercept), reference_sm)


def track_leak(scans: Sequence[Sequence[Image]], model: Model, classes: MoistureClassSet,
               times_min: Optional[Sequence[float]] = None,
               reference_sm: Optional[float] = None) -> LeakTrack:
    """
    Estimates the moisture of every scan from its band images and fits a line over time

    :param scans: The band images of every scan, in time order
    :param model: The classifier
    :param classes: The classes of the model
    :param times_min: The scan times, every scan lasts SCAN_DURATION_MIN by default
    :param reference_sm: An independently measured moisture
    :return: The track
    """
    if len(scans) < 2:
        raise DomainError("a leak track needs at least two scans")
    if times_min is None:
        times_min = [(index + 1) * constants.SCAN_DURATION_MIN for index in range(len(scans))]

    n_bands = len(scans[0])
    estimates = [predict_sm(model, images, classes, n_bands) for images in scans]

    return fit_track(times_min, estimates, reference_sm)


def simulate_leak_series(config: AcquisitionConfig, band_plan: BandPlan, pipeline: PipelineSpec,
                         seed: int, n_scans: int = constants.LEAK_SCANS,
                         noise: Optional[NoiseSpec] = None,
                         pool: Optional[BandWorkerPool] = None) -> list[list[Image]]:
    """
    Images a wet plume growing around a punctured pipe, its radius growing linearly per scan

    :param config: The acquisition
    :param band_plan: The bands
    :param pipeline: The processing of the classifier
    :param seed: The seed of the per-scan noise
    :param n_scans: The number of scans
    :param noise: The clutter gain and SNR
    :param pool: The worker pool
    :return: The band images of every scan
    """
    noise = noise if noise is not None else NoiseSpec()
    scan_seeds = np.random.default_rng(seed).integers(0, 2 ** 31 - 1, size=n_scans)

    scans = []
    for index in range(n_scans):
        radius = constants.LEAK_START_RADIUS_M + index * constants.LEAK_GROWTH_M
        scene = make_leak_scene(radius, scan_length_m=config.scan_length_m, seed=seed)
        log.progress(f"[Leak] scan {index + 1}/{n_scans}, plume radius {radius * 100:.1f} cm")
        scans.append(band_images(scene, config, band_plan, pipeline,
                                 dataclasses.replace(noise, rng_seed=int(scan_seeds[index])),
                                 pool=pool))

    return scans
