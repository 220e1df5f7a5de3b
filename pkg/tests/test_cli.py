import json
import os

import numpy as np
import pytest

from cli_handler import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main, resolve_seed
from moisture_learning.knn import KnnModel, save_knn
from scan_files.files import load_bscan, load_image, save_bscan
from subsurface_twin import constants
from subsurface_twin.documents import save_document
from subsurface_twin.errors import ConfigurationError
from subsurface_twin.forward import BScan


@pytest.fixture
def config_file(tmp_path, small_config):
    path = str(tmp_path / "acquisition.json")
    save_document(small_config.to_dict(), path)
    return path


def _run_record(out):
    with open(os.path.join(out, "run.json")) as f:
        return json.load(f)


def test_seed_resolution(monkeypatch):
    monkeypatch.delenv(constants.SEED_ENV_VAR, raising=False)
    assert resolve_seed(7) == 7
    assert resolve_seed(None) == constants.DEFAULT_SEED
    monkeypatch.setenv(constants.SEED_ENV_VAR, "42")
    assert resolve_seed(None) == 42
    monkeypatch.setenv(constants.SEED_ENV_VAR, "many")
    with pytest.raises(ConfigurationError):
        resolve_seed(None)


def test_simulate_reduce_image(tmp_path, config_file):
    out = str(tmp_path / "out")

    assert main(["--out-dir", out, "--seed", "5", "simulate", "--config", config_file,
                 "--pgm"]) == EXIT_OK
    record = _run_record(out)
    assert record["status"] == "ok"
    assert record["seed"] == 5
    assert record["version"] == constants.VERSION
    assert os.path.exists(os.path.join(out, "bscan_time.pgm"))
    assert load_bscan(os.path.join(out, "bscan.mwbs")).shape == (9, 11)

    assert main(["--out-dir", out, "reduce", "--in", os.path.join(out, "bscan.mwbs")]) == EXIT_OK
    reduced = os.path.join(out, "reduced.mwbs")
    assert "svd reduced (1)" in load_bscan(reduced).provenance

    assert main(["--out-dir", out, "image", "--in", reduced, "--method", "baa",
                 "--nx", "8"]) == EXIT_OK
    image = load_image(os.path.join(out, "image.mwim"))
    assert image.values.shape == (8, 8)
    assert image.pipeline["imaging"] == "baa"

    assert main(["--out-dir", out, "image", "--in", os.path.join(out, "bscan.mwbs"),
                 "--n-remove", "1", "--nx", "16", "--pgm"]) == EXIT_OK
    assert os.path.exists(os.path.join(out, "image.pgm"))


def test_simulate_single_band(tmp_path, config_file):
    out = str(tmp_path / "out")
    assert main(["--out-dir", out, "simulate", "--config", config_file, "--band", "2",
                 "--bands", "3", "--band-spacing", "1e8"]) == EXIT_OK
    assert load_bscan(os.path.join(out, "bscan.mwbs")).shape == (7, 11)


def test_dataset_train_track(tmp_path, config_file):
    out = str(tmp_path / "out")
    dataset = os.path.join(out, "dataset")

    assert main(["--out-dir", out, "--seed", "3", "dataset", "--config", config_file,
                 "--bands", "5", "--band-spacing", "1e8"]) == EXIT_OK
    with open(os.path.join(dataset, "manifest.json")) as f:
        manifest = json.load(f)
    assert len(manifest["samples"]) == 40
    assert len(manifest["splits"]["train"]) == 24

    assert main(["--out-dir", out, "train", "--dataset", dataset, "--learner", "knn"]) == EXIT_OK
    model = os.path.join(out, "model.mwkn")
    assert os.path.exists(model)

    assert main(["--out-dir", out, "track", "--model", model, "--config", config_file,
                 "--bands", "5", "--n-scans", "3", "--reference-sm", "0.25"]) == EXIT_OK
    with open(os.path.join(out, "track.json")) as f:
        track = json.load(f)
    assert track["times_min"] == [14.0, 28.0, 42.0]
    assert track["reference_sm"] == 0.25
    assert os.path.exists(os.path.join(out, "track.csv"))


def test_eval_reports(tmp_path, config_file):
    out = str(tmp_path / "out")
    assert main(["--out-dir", out, "eval", "--scenario", "reference", "--learner", "knn",
                 "--config", config_file, "--bands", "5"]) == EXIT_OK
    for name in ("report.json", "report.txt", "confusion_reference.csv",
                 "confusion_reference.pgm"):
        assert os.path.exists(os.path.join(out, name))


def test_usage_errors(tmp_path, capsys):
    out = str(tmp_path / "out")
    assert main(["--out-dir", out, "simulate", "--bogus"]) == EXIT_VALIDATION
    assert main(["teleport"]) == EXIT_VALIDATION
    assert "usage" in capsys.readouterr().err


def test_validation_errors(tmp_path, config_file):
    out = str(tmp_path / "out")
    assert main(["--out-dir", out, "dataset", "--config", config_file, "--classes", "7"]) \
        == EXIT_VALIDATION
    assert _run_record(out)["status"] == "failed"

    assert main(["--out-dir", out, "simulate", "--config", config_file]) == EXIT_OK
    assert main(["--out-dir", out, "reduce", "--in", os.path.join(out, "bscan.mwbs"),
                 "--n-remove", "99"]) == EXIT_VALIDATION
    assert main(["--out-dir", out, "eval", "--scenario", "unknown"]) == EXIT_VALIDATION


def test_runtime_errors(tmp_path):
    out = str(tmp_path / "out")
    assert main(["--out-dir", out, "reduce", "--in", str(tmp_path / "missing.mwbs")]) \
        == EXIT_RUNTIME


def test_track_restores_the_trained_pipeline(tmp_path, config_file):
    out = str(tmp_path / "out")
    dataset = os.path.join(out, "dataset")
    model = os.path.join(out, "model.mwkn")

    assert main(["--out-dir", out, "--seed", "3", "dataset", "--config", config_file,
                 "--bands", "5", "--band-spacing", "1e8", "--stage", "baa"]) == EXIT_OK
    assert main(["--out-dir", out, "train", "--dataset", dataset, "--learner", "knn",
                 "--k", "1"]) == EXIT_OK

    assert main(["--out-dir", out, "track", "--model", model, "--imaging", "bpa",
                 "--n-scans", "2"]) == EXIT_VALIDATION

    assert main(["--out-dir", out, "track", "--model", model, "--n-scans", "2"]) == EXIT_OK
    resolved = _run_record(out)["resolved"]
    assert resolved["pipeline"]["stage"] == "baa"
    assert resolved["band_plan"]["n_bands"] == 5
    assert resolved["band_plan"]["band_spacing_hz"] == 1e8
    assert resolved["acquisition"]["n_positions"] == 11


def test_track_needs_imaging_for_models_without_training_context(tmp_path, config_file, rng):
    out = str(tmp_path / "out")
    model = str(tmp_path / "legacy.mwkn")
    save_knn(KnnModel(rng.uniform(0, 1, (4, 48 * 48)), [0, 1, 0, 1], k=1), [0.25, 0.75], model)

    assert main(["--out-dir", out, "track", "--model", model, "--config", config_file,
                 "--bands", "2", "--n-scans", "2"]) == EXIT_VALIDATION
    assert main(["--out-dir", out, "track", "--model", model, "--config", config_file,
                 "--bands", "2", "--n-scans", "2", "--imaging", "bpa"]) == EXIT_OK
    assert _run_record(out)["resolved"]["pipeline"]["stage"] == "bpa"


def test_image_single_frequency_scan(tmp_path, rng):
    out = str(tmp_path / "out")
    path = str(tmp_path / "single.mwbs")
    data = rng.standard_normal((1, 11)) + 1j * rng.standard_normal((1, 11))
    save_bscan(BScan(data, [1.5e9], np.linspace(0, 0.6, 11)), path)

    assert main(["--out-dir", out, "image", "--in", path, "--nx", "8"]) == EXIT_OK
    assert load_image(os.path.join(out, "image.mwim")).values.shape == (8, 8)
    assert main(["--out-dir", out, "image", "--in", path, "--method", "baa",
                 "--nx", "8"]) == EXIT_VALIDATION


@pytest.mark.parametrize("method", ["bpa", "baa"])
def test_image_keeps_scan_line_offset(tmp_path, config_file, method):
    out = str(tmp_path / "out")
    assert main(["--out-dir", out, "simulate", "--config", config_file]) == EXIT_OK
    bscan = load_bscan(os.path.join(out, "bscan.mwbs"))
    shifted = str(tmp_path / "shifted.mwbs")
    save_bscan(BScan(bscan.data, bscan.freq_hz, bscan.pos_m + 0.4, bscan.provenance), shifted)

    assert main(["--out-dir", out, "image", "--in", os.path.join(out, "bscan.mwbs"),
                 "--method", method, "--nx", "8", "--out", str(tmp_path / "a.mwim")]) == EXIT_OK
    assert main(["--out-dir", out, "image", "--in", shifted, "--method", method,
                 "--nx", "8", "--out", str(tmp_path / "b.mwim")]) == EXIT_OK

    image = load_image(str(tmp_path / "a.mwim"))
    moved = load_image(str(tmp_path / "b.mwim"))
    assert moved.grid.x_min_m == pytest.approx(0.4)
    assert moved.grid.x_max_m == pytest.approx(1.0)
    assert np.allclose(moved.values, image.values, atol=1e-6)
