"""
Generates the labelled multi-band image dataset and its train / validation / test splits
"""

import dataclasses
import os
import threading
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from reporting import log
from scan_files.files import load_image, save_image
from subsurface_twin import constants
from subsurface_twin.acquisition import AcquisitionConfig, Band, BandPlan, make_band_plan
from subsurface_twin.documents import load_document, save_document
from subsurface_twin.errors import ConfigurationError, DomainError
from subsurface_twin.forward import BScan, NoiseSpec, simulate_band, simulate_bscan
from subsurface_twin.grid import ImagingGrid
from subsurface_twin.imaging import (BornOperator, Image, TruncationSpec, baa_image, bpa_image,
                                     resample_image)
from subsurface_twin.preproc import ClutterReductionSpec, reduce_clutter, select_rows
from subsurface_twin.scene import Scene, make_reference_scene, rasterize_scene
from subsurface_twin.threadproc import BandWorkerPool

STAGES = ("raw", "clutter_reduced", "bpa", "baa")
""" The pipeline stages a dataset can be built from """


@dataclass(frozen=True)
class MoistureClassSet:
    """ The moisture levels the classifiers choose from, class i is levels[i] """

    levels: tuple[float, ...] = constants.MOISTURE_LEVELS

    def __post_init__(self):
        levels = tuple(float(level) for level in self.levels)
        if len(levels) < 2:
            raise ConfigurationError("need at least two moisture classes")
        if any(not 0.0 <= level <= 1.0 for level in levels):
            raise ConfigurationError(f"moisture levels must lie in [0, 1], got {levels}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigurationError(f"moisture levels must be strictly increasing, got {levels}")
        object.__setattr__(self, "levels", levels)

    @staticmethod
    def default() -> "MoistureClassSet":
        """
        :return: The eight bag moistures 12.5 % to 100 %
        """
        return MoistureClassSet()

    @staticmethod
    def with_dry_class() -> "MoistureClassSet":
        """
        :return: The eight bag moistures plus dry soil as class 0
        """
        return MoistureClassSet((0.0,) + constants.MOISTURE_LEVELS)

    @property
    def n_classes(self) -> int:
        return len(self.levels)

    def level(self, label: int) -> float:
        """
        :param label: A class index
        :return: The moisture of the class
        """
        if not 0 <= label < self.n_classes:
            raise DomainError(f"label {label} is not one of {self.n_classes} classes")
        return self.levels[label]

    def to_dict(self) -> dict[str, Any]:
        return {"levels": list(self.levels)}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "MoistureClassSet":
        try:
            return MoistureClassSet(tuple(data["levels"]))
        except (KeyError, TypeError) as error:
            raise ConfigurationError(f"malformed class document: {error}") from error


@dataclass(frozen=True)
class PipelineSpec:
    """
    The processing from B-scan to classifier input

    ...

    Attributes
    ----------

    stage: str
        raw and clutter_reduced keep the magnitude B-scan, bpa and baa form an image

    n_remove: int
        The singular components removed before every stage but raw

    truncation: TruncationSpec
        The BAA truncation

    imaging_grid: Optional[ImagingGrid]
        The image grid, None uses the default grid of the stage

    wideband_first: bool
        Reduce the full sweep once and cut the bands from it

    image_size: int
        The side of the square classifier input

    """

    stage: str = "bpa"
    n_remove: int = constants.DEFAULT_N_REMOVE
    truncation: TruncationSpec = field(default_factory=TruncationSpec)
    imaging_grid: Optional[ImagingGrid] = None
    wideband_first: bool = False
    image_size: int = constants.CLASSIFIER_PIXELS
    spreading_comp: bool = False

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ConfigurationError(f"unknown pipeline stage {self.stage!r}, expected {STAGES}")
        if self.n_remove < 0:
            raise ConfigurationError(f"n_remove must be >= 0, got {self.n_remove}")
        if self.image_size < 4:
            raise ConfigurationError(f"image size must be >= 4, got {self.image_size}")

    def grid_for(self, config: AcquisitionConfig) -> ImagingGrid:
        """
        :param config: The acquisition
        :return: The grid the stage forms images on
        """
        if self.imaging_grid is not None:
            return self.imaging_grid
        if self.stage == "baa":
            return ImagingGrid.baa_default(config.scan_length_m)
        return ImagingGrid.reference(config.scan_length_m)

    def to_dict(self) -> dict[str, Any]:
        return {"stage": self.stage, "n_remove": self.n_remove,
                "truncation": self.truncation.to_dict(),
                "imaging_grid": None if self.imaging_grid is None else self.imaging_grid.to_dict(),
                "wideband_first": self.wideband_first, "image_size": self.image_size,
                "spreading_comp": self.spreading_comp}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "PipelineSpec":
        try:
            values = dict(data)
            if "truncation" in values:
                values["truncation"] = TruncationSpec.from_dict(values["truncation"])
            if values.get("imaging_grid") is not None:
                values["imaging_grid"] = ImagingGrid.from_dict(values["imaging_grid"])
            return PipelineSpec(**values)
        except TypeError as error:
            raise ConfigurationError(f"malformed pipeline document: {error}") from error


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """ One classifier input with its moisture class """

    sample_id: str
    image: Image
    label: int
    band_index: int
    scenario_id: str
    scene_seed: int


@dataclass(frozen=True)
class SplitManifest:
    """ Disjoint train / validation / test sample ids covering a dataset """

    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    ratios: tuple[float, float, float]
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return {"train": list(self.train), "val": list(self.val), "test": list(self.test),
                "ratios": list(self.ratios), "seed": self.seed}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "SplitManifest":
        try:
            return SplitManifest(tuple(data["train"]), tuple(data["val"]), tuple(data["test"]),
                                 tuple(data["ratios"]), int(data["seed"]))
        except (KeyError, TypeError) as error:
            raise ConfigurationError(f"malformed split document: {error}") from error


class OperatorCache:
    """
    Born operators shared by every sample of the same band, assembled once per key
    """

    def __init__(self):
        self._operators: dict[tuple, BornOperator] = {}
        self._lock = threading.Lock()

    def get(self, grid: ImagingGrid, config: AcquisitionConfig, eps_bg: complex) -> BornOperator:
        key = (grid, config.f_min_hz, config.f_max_hz, config.f_step_hz, config.n_positions,
               config.scan_length_m, config.antenna_height_m, complex(eps_bg))
        with self._lock:
            if key not in self._operators:
                self._operators[key] = BornOperator.assemble(grid, config, eps_bg)
            return self._operators[key]


def _magnitude_image(bscan: BScan, scan_length_m: float) -> Image:
    """
    Wraps the magnitude B-scan in an image, one row per frequency and one column per position
    """
    values = np.abs(bscan.data)
    if values.shape[0] < 2:
        values = np.repeat(values, 2, axis=0)
    grid = ImagingGrid.reference(scan_length_m, nx=values.shape[1], nz=values.shape[0])
    return Image(grid, values)


def process_bscan(bscan: BScan, band_config: AcquisitionConfig, pipeline: PipelineSpec,
                  eps_bg: complex, operators: Optional[OperatorCache] = None,
                  reduced: bool = False) -> Image:
    """
    Runs one pipeline stage on a band B-scan and resamples the result for the classifiers

    :param bscan: The band B-scan
    :param band_config: The acquisition of the band
    :param pipeline: The stage and its options
    :param eps_bg: The background permittivity
    :param operators: The shared Born operators
    :param reduced: The B-scan has already been clutter reduced
    :return: The classifier input image
    """
    if pipeline.stage != "raw" and not reduced:
        bscan = reduce_clutter(bscan, ClutterReductionSpec(pipeline.n_remove))

    if pipeline.stage in ("raw", "clutter_reduced"):
        image = _magnitude_image(bscan, band_config.scan_length_m)
    elif pipeline.stage == "bpa":
        image = bpa_image(bscan, pipeline.grid_for(band_config), eps_bg, pipeline.spreading_comp,
                          band_config.antenna_height_m)
    else:
        grid = pipeline.grid_for(band_config)
        operator = (operators or OperatorCache()).get(grid, band_config, eps_bg)
        image = baa_image(bscan, grid, band_config, eps_bg, pipeline.truncation, operator)

    return resample_image(image, (pipeline.image_size, pipeline.image_size))


def band_images(scene: Scene, config: AcquisitionConfig, band_plan: BandPlan,
                pipeline: PipelineSpec, noise: NoiseSpec, band_gains: Optional[list[float]] = None,
                pool: Optional[BandWorkerPool] = None,
                operators: Optional[OperatorCache] = None,
                band_indices: Optional[Sequence[int]] = None) -> list[Image]:
    """
    Simulates a scene in the bands of a plan and turns each band B-scan into an image

    :param scene: The scene
    :param config: The wideband acquisition
    :param band_plan: The bands
    :param pipeline: The processing
    :param noise: The clutter gain, SNR and seed
    :param band_gains: A clutter gain per band replacing the noise gain; with wideband_first
        the first gain is used for the whole sweep
    :param pool: The worker pool the bands run on
    :param operators: The shared Born operators
    :param band_indices: The bands to simulate, every band of the plan by default
    :return: One image per simulated band, in the order of band_indices
    """
    pool = pool or BandWorkerPool()
    operators = operators or OperatorCache()
    bands = band_plan.bands() if band_indices is None else \
        [band_plan.band(index) for index in band_indices]
    gains = band_gains if band_gains is not None else [noise.clutter_gain] * band_plan.n_bands

    if len(gains) != band_plan.n_bands:
        raise DomainError(f"{len(gains)} clutter gains for {band_plan.n_bands} bands")

    eps_bg = scene.soil.background_permittivity()
    contrast = rasterize_scene(scene, ImagingGrid.reference(config.scan_length_m))

    if pipeline.wideband_first and pipeline.stage != "raw":
        full = simulate_bscan(contrast, config, dataclasses.replace(noise, clutter_gain=gains[0]))
        full = reduce_clutter(full, ClutterReductionSpec(pipeline.n_remove, True))

        def job(band: Band) -> Image:
            bscan = select_rows(full, band.f_start_hz
                                + np.arange(band.n_frequencies) * config.f_step_hz)
            band_config = config.with_overrides(f_min_hz=float(bscan.freq_hz[0]),
                                                f_max_hz=float(bscan.freq_hz[-1]))
            image = process_bscan(bscan, band_config, pipeline, eps_bg, operators, reduced=True)
            return dataclasses.replace(image, source_band=band.index)
    else:
        def job(band: Band) -> Image:
            band_noise = dataclasses.replace(noise, clutter_gain=gains[band.index])
            bscan = simulate_band(contrast, band, config, band_noise)
            image = process_bscan(bscan, band.config(config), pipeline, eps_bg, operators)
            return dataclasses.replace(image, source_band=band.index)

    return pool.map(job, bands)


def sample_id(scenario_id: str, label: int, band_index: int) -> str:
    return f"{scenario_id}-c{label}-b{band_index}"


def generate_dataset(classes: MoistureClassSet, config: AcquisitionConfig, band_plan: BandPlan,
                     pipeline: PipelineSpec, seed: int, noise: Optional[NoiseSpec] = None,
                     scenario_id: str = "dataset",
                     pool: Optional[BandWorkerPool] = None,
                     band_indices: Optional[Sequence[int]] = None) -> list[LabeledSample]:
    """
    Builds one reference scene per moisture class and images it in the selected bands

    Each (class, band) sample draws its clutter gain uniformly in gain [0.5, 1.5], so the
    rank-1 coupling varies from bag to bag

    :param classes: The moisture classes
    :param config: The wideband acquisition
    :param band_plan: The bands
    :param pipeline: The processing
    :param seed: The dataset seed
    :param noise: The clutter gain and SNR, its seed is replaced by per-class seeds
    :param scenario_id: The prefix of the sample ids
    :param pool: The worker pool
    :param band_indices: The bands to image, every band of the plan by default
    :return: classes x selected bands samples, class major
    """
    noise = noise if noise is not None else NoiseSpec()
    pool = pool or BandWorkerPool()
    operators = OperatorCache()

    rng = np.random.default_rng(seed)
    scene_seeds = rng.integers(0, 2 ** 31 - 1, size=classes.n_classes)
    jitter = constants.CLUTTER_GAIN_JITTER
    gains = noise.clutter_gain * rng.uniform(1 - jitter, 1 + jitter,
                                             size=(classes.n_classes, band_plan.n_bands))

    samples = []
    for label, level in enumerate(classes.levels):
        scene_seed = int(scene_seeds[label])
        scene = make_reference_scene(level, config.scan_length_m, seed=scene_seed)
        class_noise = dataclasses.replace(noise, rng_seed=scene_seed)

        log.progress(f"[Dataset] class {label + 1}/{classes.n_classes} ({level:.3f})")
        images = band_images(scene, config, band_plan, pipeline, class_noise,
                             gains[label].tolist(), pool, operators, band_indices)

        for image in images:
            samples.append(LabeledSample(sample_id(scenario_id, label, image.source_band),
                                         image, label, image.source_band, scenario_id,
                                         scene_seed))

    return samples


def _allocate(count: int, ratios: tuple[float, ...]) -> list[int]:
    """
    Largest remainder allocation of count items to the parts, ties go to the earlier part
    """
    exact = [count * ratio for ratio in ratios]
    sizes = [int(np.floor(value)) for value in exact]
    order = sorted(range(len(ratios)), key=lambda part: (-(exact[part] - sizes[part]), part))

    for part in order[:count - sum(sizes)]:
        sizes[part] += 1

    return sizes


def split_dataset(samples: list[LabeledSample],
                  ratios: tuple[float, float, float] = constants.SPLIT_RATIOS,
                  seed: int = constants.DEFAULT_SEED, stratified: bool = True) -> SplitManifest:
    """
    Splits the samples into train, validation and test ids

    :param samples: The dataset
    :param ratios: The train, validation and test fractions
    :param seed: The seed of the permutation
    :param stratified: Split every class separately so the proportions hold per class
    :return: The split
    """
    ratios = tuple(float(ratio) for ratio in ratios)
    if len(ratios) != 3 or any(ratio < 0 for ratio in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise ConfigurationError(f"split ratios must be 3 non-negative values summing to 1, "
                                 f"got {ratios}")

    n_parts = sum(ratio > 0 for ratio in ratios)
    rng = np.random.default_rng(seed)

    if stratified:
        groups: dict[int, list[str]] = {}
        for sample in samples:
            groups.setdefault(sample.label, []).append(sample.sample_id)
        ordered = [groups[label] for label in sorted(groups)]
    else:
        ordered = [[sample.sample_id for sample in samples]]

    parts: list[list[str]] = [[], [], []]
    for ids in ordered:
        if len(ids) < n_parts:
            raise ConfigurationError(f"{len(ids)} samples cannot fill {n_parts} split parts")

        permuted = [ids[index] for index in rng.permutation(len(ids))]
        start = 0
        for part, size in enumerate(_allocate(len(ids), ratios)):
            parts[part].extend(permuted[start:start + size])
            start += size

    return SplitManifest(tuple(parts[0]), tuple(parts[1]), tuple(parts[2]), ratios, seed)


@dataclass(frozen=True, eq=False)
class Dataset:
    """ A generated dataset with its split and the configuration that produced it """

    samples: list[LabeledSample]
    split: SplitManifest
    classes: MoistureClassSet
    pipeline: PipelineSpec
    config: AcquisitionConfig
    band_plan: BandPlan
    seed: int

    def by_id(self) -> dict[str, LabeledSample]:
        return {sample.sample_id: sample for sample in self.samples}

    def part(self, name: str) -> list[LabeledSample]:
        """
        :param name: "train", "val" or "test"
        :return: The samples of the split part, in split order
        """
        samples = self.by_id()
        return [samples[sample_id] for sample_id in getattr(self.split, name)]


def build_dataset(classes: MoistureClassSet, config: AcquisitionConfig, band_plan: BandPlan,
                  pipeline: PipelineSpec, seed: int, noise: Optional[NoiseSpec] = None,
                  scenario_id: str = "dataset",
                  pool: Optional[BandWorkerPool] = None) -> Dataset:
    """
    Generates and splits a dataset with the default ratios
    """
    samples = generate_dataset(classes, config, band_plan, pipeline, seed, noise, scenario_id,
                               pool)
    return Dataset(samples, split_dataset(samples, seed=seed), classes, pipeline, config,
                   band_plan, seed)


def save_dataset(dataset: Dataset, directory: str) -> str:
    """
    Writes manifest.json and one MWIM file per sample

    :param dataset: The dataset
    :param directory: The dataset directory
    :return: The path of the manifest
    """
    entries = []
    for sample in dataset.samples:
        relative = f"samples/{sample.sample_id}.mwim"
        save_image(sample.image, os.path.join(directory, relative))
        entries.append({"id": sample.sample_id, "file": relative, "label": sample.label,
                        "band_index": sample.band_index, "scenario_id": sample.scenario_id,
                        "scene_seed": sample.scene_seed})

    manifest = {"samples": entries, "splits": dataset.split.to_dict(),
                "classes": dataset.classes.to_dict(), "pipeline": dataset.pipeline.to_dict(),
                "acquisition": dataset.config.to_dict(), "band_plan": dataset.band_plan.to_dict(),
                "seed": dataset.seed}
    path = os.path.join(directory, "manifest.json")
    save_document(manifest, path)

    return path


def load_dataset(directory: str) -> Dataset:
    """
    :param directory: A directory written by save_dataset
    :return: The dataset
    """
    manifest = load_document(os.path.join(directory, "manifest.json"))

    try:
        samples = [LabeledSample(entry["id"], load_image(os.path.join(directory, entry["file"])),
                                 int(entry["label"]), int(entry["band_index"]),
                                 entry["scenario_id"], int(entry["scene_seed"]))
                   for entry in manifest["samples"]]
        plan = manifest["band_plan"]
        config = AcquisitionConfig.from_dict(manifest["acquisition"])
        band_plan = make_band_plan(config, int(plan["n_bands"]), float(plan["band_spacing_hz"]))
        return Dataset(samples, SplitManifest.from_dict(manifest["splits"]),
                       MoistureClassSet.from_dict(manifest["classes"]),
                       PipelineSpec.from_dict(manifest["pipeline"]), config, band_plan,
                       int(manifest["seed"]))
    except (KeyError, TypeError) as error:
        raise ConfigurationError(f"malformed dataset manifest in {directory}: {error}") from error
