"""
End to end checks on the reference acquisition, minutes long: run with -m slow
"""
import numpy as np
import pytest

from moisture_learning.dataset import Dataset, MoistureClassSet, PipelineSpec, generate_dataset, \
    split_dataset
from moisture_learning.evaluation import confusion_and_accuracy, run_clutter_robustness
from moisture_learning.learn import classify, fit_learner
from subsurface_twin.acquisition import AcquisitionConfig, make_band_plan
from subsurface_twin.forward import NoiseSpec, simulate_bscan
from subsurface_twin.grid import ImagingGrid
from subsurface_twin.imaging import BornOperator, TruncationSpec, bpa_image
from subsurface_twin.scene import ClutterDensity, ContrastMap, ScattererKind

pytestmark = pytest.mark.slow

SEEDS = (1, 2, 3)


def test_bpa_focuses_random_point_scatterers(rng):
    config = AcquisitionConfig.reference()
    grid = ImagingGrid.reference(config.scan_length_m)
    eps_bg = 3.03 - 0.0303j

    for _ in range(10):
        iz, ix = int(rng.integers(10, grid.nz)), int(rng.integers(5, grid.nx - 5))
        chi = np.zeros(grid.shape, dtype=complex)
        chi[iz, ix] = 0.5
        bscan = simulate_bscan(ContrastMap(grid, chi, eps_bg), config, NoiseSpec.clean())
        found = bpa_image(bscan, grid, eps_bg).argmax()
        assert abs(found[0] - iz) <= 1 and abs(found[1] - ix) <= 1


def test_full_rank_born_inversion_recovers_support():
    config = AcquisitionConfig.reference()
    grid = ImagingGrid.reference(config.scan_length_m, nx=12, nz=12)
    chi = np.zeros(grid.shape, dtype=complex)
    chi[3:5, 3:10] = 0.3
    truth = set(np.flatnonzero(chi))

    bscan = simulate_bscan(ContrastMap(grid, chi, 3.03), config, NoiseSpec.clean())
    operator = BornOperator.assemble(grid, config, 3.03)
    solve = operator.solve(bscan.data.ravel(), TruncationSpec.keep_rank(grid.n_pixels))

    top = set(np.argsort(-np.abs(solve.x))[:grid.n_pixels // 10].tolist())
    assert len(top & truth) / len(top | truth) >= 0.5


def _accuracy(stage, learner, seed):
    config = AcquisitionConfig.reference()
    plan = make_band_plan(config)
    classes = MoistureClassSet.default()
    pipeline = PipelineSpec(stage=stage)
    samples = generate_dataset(classes, config, plan, pipeline, seed)
    dataset = Dataset(samples, split_dataset(samples, seed=seed), classes, pipeline, config,
                      plan, seed)
    model, _ = fit_learner(learner, dataset, seed)
    test = dataset.part("test")
    _, accuracy = confusion_and_accuracy(classify(model, [s.image for s in test]),
                                         [s.label for s in test], classes.n_classes)
    return accuracy, model, dataset


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("learner", ["knn", "cnn"])
def test_processing_improves_accuracy(seed, learner):
    raw, _, _ = _accuracy("raw", learner, seed)
    reduced, _, _ = _accuracy("clutter_reduced", learner, seed)
    imaged, _, _ = _accuracy("bpa", learner, seed)

    assert raw < reduced <= imaged
    if learner == "cnn":
        assert imaged >= 0.95


@pytest.mark.parametrize("seed", SEEDS)
def test_clutter_biases_estimates(seed):
    _, model, dataset = _accuracy("bpa", "cnn", seed)
    arguments = (model, dataset.classes, dataset.pipeline, dataset.config, dataset.band_plan,
                 seed)

    dry = run_clutter_robustness(0.0, ScattererKind.ROOT, ClutterDensity.HIGH, *arguments)
    wet = run_clutter_robustness(0.6, ScattererKind.PEBBLE, ClutterDensity.HIGH, *arguments)

    assert dry > 0
    assert wet < 0.6
