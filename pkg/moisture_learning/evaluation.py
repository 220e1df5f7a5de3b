"""
Confusion matrices, the accuracy scenarios and the clutter robustness runs
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from moisture_learning.cnn import TrainConfig
from moisture_learning.dataset import (Dataset, MoistureClassSet, PipelineSpec, band_images,
                                       generate_dataset, split_dataset)
from moisture_learning.learn import Model, classify, fit_learner, predict_sm
from reporting import log
from subsurface_twin import constants
from subsurface_twin.acquisition import AcquisitionConfig, BandPlan, make_band_plan
from subsurface_twin.errors import ConfigurationError, DomainError
from subsurface_twin.forward import NoiseSpec
from subsurface_twin.grid import ImagingGrid
from subsurface_twin.scene import (ClutterDensity, ScattererKind, add_medium_clutter,
                                   make_reference_scene)
from subsurface_twin.threadproc import BandWorkerPool

IMAGING = ("bpa", "baa")
""" The imaging methods a scenario can use """


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """ Prediction counts, rows are the actual classes and columns the predicted ones """

    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_normalized(self) -> np.ndarray:
        """
        :return: Every row divided by its sum, rows without samples stay 0
        """
        sums = self.counts.sum(axis=1, keepdims=True)
        return np.divide(self.counts, sums, out=np.zeros(self.counts.shape), where=sums > 0)

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {"counts": self.counts.tolist(),
                "row_normalized": self.row_normalized().round(6).tolist()}


def confusion_and_accuracy(preds: Sequence[int], labels: Sequence[int],
                           n_classes: int) -> tuple[ConfusionMatrix, float]:
    """
    :param preds: The predicted class indices
    :param labels: The actual class indices
    :param n_classes: The number of classes
    :return: The confusion matrix and the fraction of correct predictions
    """
    preds = np.asarray(preds, dtype=int).ravel()
    labels = np.asarray(labels, dtype=int).ravel()

    if preds.size != labels.size:
        raise DomainError(f"{preds.size} predictions for {labels.size} labels")
    for name, values in (("label", labels), ("prediction", preds)):
        if np.any(values < 0) or np.any(values >= n_classes):
            raise DomainError(f"every {name} must lie in [0, {n_classes})")

    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (labels, preds), 1)
    matrix = ConfusionMatrix(counts)

    return matrix, matrix.accuracy()


@dataclass(frozen=True)
class ScenarioSpec:
    """
    One row of the accuracy table: a pipeline stage and the acquisition overrides

    ...

    Attributes
    ----------

    stage: str
        raw, clutter_reduced, or image to use the imaging method the scenario is run with

    band_subset: str
        all, lower or upper

    f_step_hz, n_positions, scan_length_m, band_spacing_hz: Optional
        Overrides of the reference acquisition and band plan

    """

    scenario_id: str
    stage: str = "image"
    n_remove: int = constants.DEFAULT_N_REMOVE
    band_subset: str = "all"
    f_step_hz: Optional[float] = None
    n_positions: Optional[int] = None
    scan_length_m: Optional[float] = None
    band_spacing_hz: Optional[float] = None
    description: str = ""

    def __post_init__(self):
        if self.stage not in ("raw", "clutter_reduced", "image"):
            raise ConfigurationError(f"unknown scenario stage {self.stage!r}")
        if self.band_subset not in ("all", "lower", "upper"):
            raise ConfigurationError(f"unknown band subset {self.band_subset!r}")

    def acquisition(self, base: AcquisitionConfig) -> AcquisitionConfig:
        """
        :param base: The reference acquisition
        :return: The acquisition with the scenario overrides, f_max snapped onto a new step
        """
        config = base
        if self.f_step_hz is not None:
            config = config.with_frequency_step(self.f_step_hz)
        if self.n_positions is not None:
            config = config.with_overrides(n_positions=self.n_positions)
        if self.scan_length_m is not None:
            config = config.with_overrides(scan_length_m=self.scan_length_m)
        return config

    def band_plan(self, config: AcquisitionConfig, n_bands: int = constants.N_BANDS) -> BandPlan:
        spacing = self.band_spacing_hz if self.band_spacing_hz is not None \
            else constants.BAND_SPACING_HZ
        return make_band_plan(config, n_bands, spacing)

    def pipeline(self, imaging: str) -> PipelineSpec:
        if imaging not in IMAGING:
            raise ConfigurationError(f"unknown imaging method {imaging!r}, expected {IMAGING}")
        stage = imaging if self.stage == "image" else self.stage
        return PipelineSpec(stage=stage, n_remove=self.n_remove)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


SCENARIOS: dict[str, ScenarioSpec] = {spec.scenario_id: spec for spec in (
    ScenarioSpec("raw", "raw", description="Raw data"),
    ScenarioSpec("clutter_reduced", "clutter_reduced", description="Clutter-reduced data"),
    ScenarioSpec("reference", description="Reference acquisition"),
    ScenarioSpec("lower_bands", band_subset="lower", description="Eight lower frequency bands"),
    ScenarioSpec("upper_bands", band_subset="upper", description="Eight upper frequency bands"),
    ScenarioSpec("freq_step_75", f_step_hz=75_000_000, description="Δf = 75 MHz"),
    ScenarioSpec("ns_23", n_positions=23, description="N_s = 23"),
    ScenarioSpec("l_0_6", scan_length_m=0.6, description="L = 0.6 m"),
    ScenarioSpec("band_spacing_50", band_spacing_hz=50_000_000, description="δf = 50 MHz"),
    ScenarioSpec("reference_remove_2", n_remove=2, description="Two singular components removed"),
)}
""" The accuracy scenarios by id """


@dataclass(frozen=True, eq=False)
class ScenarioReport:
    """ The test accuracy of one learner on one scenario """

    scenario_id: str
    learner: str
    imaging: str
    accuracy: float
    confusion: ConfusionMatrix
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"scenario_id": self.scenario_id, "learner": self.learner,
                "imaging": self.imaging, "accuracy": self.accuracy,
                "confusion": self.confusion.to_dict(), "config": self.config}


def run_scenario(spec: ScenarioSpec, learner: str, imaging: str, seed: int,
                 base_config: Optional[AcquisitionConfig] = None,
                 classes: Optional[MoistureClassSet] = None, noise: Optional[NoiseSpec] = None,
                 n_bands: int = constants.N_BANDS, train_config: Optional[TrainConfig] = None,
                 pool: Optional[BandWorkerPool] = None) -> tuple[ScenarioReport, Dataset, Model]:
    """
    Regenerates the dataset of a scenario, fits the learner and scores it on the test split

    :param spec: The scenario
    :param learner: "cnn" or "knn"
    :param imaging: "bpa" or "baa", used when the scenario forms images
    :param seed: The seed of the dataset, the split and the training
    :param base_config: The acquisition the overrides apply to, the reference by default
    :param classes: The moisture classes
    :param noise: The clutter gain and SNR
    :param n_bands: The number of bands of the plan
    :param train_config: The CNN training settings
    :param pool: The worker pool
    :return: The report, the dataset it was scored on and the fitted model
    """
    classes = classes if classes is not None else MoistureClassSet.default()
    config = spec.acquisition(base_config if base_config is not None
                              else AcquisitionConfig.reference())
    plan = spec.band_plan(config, n_bands)
    pipeline = spec.pipeline(imaging)

    log.log(f"[Scenario] {spec.scenario_id}: {learner} on {pipeline.stage}")
    samples = generate_dataset(classes, config, plan, pipeline, seed, noise, spec.scenario_id,
                               pool, plan.subset(spec.band_subset))
    dataset = Dataset(samples, split_dataset(samples, seed=seed), classes, pipeline, config,
                      plan, seed)

    model, history = fit_learner(learner, dataset, seed, train_config)
    test = dataset.part("test")
    confusion, accuracy = confusion_and_accuracy(classify(model, [s.image for s in test]),
                                                 [s.label for s in test], classes.n_classes)

    echo = {"scenario": spec.to_dict(), "acquisition": config.to_dict(),
            "band_plan": plan.to_dict(), "pipeline": pipeline.to_dict(),
            "classes": classes.to_dict(), "seed": seed, "epochs": len(history),
            "noise": (noise if noise is not None else NoiseSpec()).to_dict()}
    log.success(f"[Scenario] {spec.scenario_id} {learner}/{imaging}: accuracy {accuracy:.3f}")

    return ScenarioReport(spec.scenario_id, learner, imaging, accuracy, confusion, echo), \
        dataset, model


CLUTTER_CASES: tuple[tuple[float, ScattererKind, ClutterDensity], ...] = (
    (0.0, ScattererKind.ROOT, ClutterDensity.LOW),
    (0.0, ScattererKind.ROOT, ClutterDensity.HIGH),
    (0.0, ScattererKind.PEBBLE, ClutterDensity.LOW),
    (0.0, ScattererKind.PEBBLE, ClutterDensity.HIGH),
    (0.6, ScattererKind.ROOT, ClutterDensity.MODERATE),
    (0.6, ScattererKind.PEBBLE, ClutterDensity.MODERATE),
)
""" The (moisture, kind, density) cases of the clutter robustness table """


def run_clutter_robustness(sm_truth: float, kind: ScattererKind, density: ClutterDensity,
                           model: Model, classes: MoistureClassSet, pipeline: PipelineSpec,
                           config: AcquisitionConfig, band_plan: BandPlan, seed: int,
                           noise: Optional[NoiseSpec] = None,
                           pool: Optional[BandWorkerPool] = None) -> float:
    """
    Estimates the moisture of a reference scene cluttered with pebbles or roots

    :param sm_truth: The moisture of the soil bag, 0 for dry soil
    :param kind: The clutter kind
    :param density: The clutter density
    :param model: A classifier trained without clutter
    :param classes: The classes of the model
    :param pipeline: The processing the model was trained on
    :param config: The acquisition
    :param band_plan: The bands
    :param seed: The seed of the clutter positions and the noise
    :param noise: The clutter gain and SNR
    :param pool: The worker pool
    :return: The estimated moisture fraction
    """
    noise = dataclasses.replace(noise if noise is not None else NoiseSpec(), rng_seed=seed)
    scene = make_reference_scene(sm_truth, config.scan_length_m, seed=seed)
    scene = add_medium_clutter(scene, kind, density, seed,
                               ImagingGrid.reference(config.scan_length_m))

    images = band_images(scene, config, band_plan, pipeline, noise, pool=pool)
    return predict_sm(model, images, classes, band_plan.n_bands)


@dataclass(frozen=True)
class ClutterRow:
    """ One line of the clutter robustness table """

    sm_truth: float
    kind: str
    density: str
    predicted: float
    clutter_free: float
    """ The estimate of the same scene without clutter """


def run_clutter_table(model: Model, classes: MoistureClassSet, pipeline: PipelineSpec,
                      config: AcquisitionConfig, band_plan: BandPlan, seed: int,
                      noise: Optional[NoiseSpec] = None,
                      pool: Optional[BandWorkerPool] = None) -> list[ClutterRow]:
    """
    Runs every clutter case next to the clutter-free estimate of its soil

    :return: One row per case
    """
    clutter_free: dict[float, float] = {}
    rows = []

    for sm_truth, kind, density in CLUTTER_CASES:
        if sm_truth not in clutter_free:
            clutter_free[sm_truth] = run_clutter_robustness(
                sm_truth, kind, ClutterDensity.NONE, model, classes, pipeline, config,
                band_plan, seed, noise, pool)

        predicted = run_clutter_robustness(sm_truth, kind, density, model, classes, pipeline,
                                           config, band_plan, seed, noise, pool)
        log.log(f"[Clutter] {sm_truth:.0%} soil, {density.value} {kind.value}: "
                f"estimated {predicted:.3f}")
        rows.append(ClutterRow(sm_truth, kind.value, density.value, predicted,
                               clutter_free[sm_truth]))

    return rows
