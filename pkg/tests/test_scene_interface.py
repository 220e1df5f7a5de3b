import json

import pytest

from subsurface_twin.errors import ConfigurationError
from subsurface_twin.scene import ClutterDensity, ScattererKind, add_medium_clutter, \
    make_reference_scene
from subsurface_twin.scene_interface import load_scene, save_scene, scene_from_dict, \
    scene_to_dict


def test_scene_survives_a_document(tmp_path):
    scene = add_medium_clutter(make_reference_scene(0.5), ScattererKind.ROOT,
                               ClutterDensity.LOW, seed=5)
    path = str(tmp_path / "scene.json")
    save_scene(scene, path)
    assert load_scene(path) == scene


def test_missing_fields_take_defaults():
    scene = scene_from_dict({"pipe_depth_m": 0.2})
    assert scene.pipe_depth_m == 0.2
    assert scene.moist_region is None
    assert scene.clutter_points == ()


def test_complex_contrast_as_string():
    data = scene_to_dict(add_medium_clutter(make_reference_scene(0.0), "root", "low", seed=1))
    data["clutter_points"][0]["contrast"] = "1.5+0.3j"
    assert scene_from_dict(data).clutter_points[0].contrast == 1.5 + 0.3j


@pytest.mark.parametrize("data", [
    {"moist_region": {"center_x_m": 0.6}},
    {"pipe_depth_m": -1.0},
    {"soil": {"moisture_map_kind": "dobson"}},
    {"clutter_points": [{"x_m": 0.1, "z_m": 0.1, "contrast": 0.5, "kind": "rock"}]},
])
def test_malformed_scene_documents(data):
    with pytest.raises(ConfigurationError):
        scene_from_dict(data)


def test_load_rejects_non_mapping(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(ConfigurationError):
        load_scene(str(path))
