"""
Loads a scene from a configuration document
"""

from typing import Any

from subsurface_twin.documents import complex_from_value, complex_to_list, load_document, \
    save_document
from subsurface_twin.errors import ConfigurationError
from subsurface_twin.scene import ClutterPoint, MoistRegion, ScattererKind, Scene, SoilModel


def scene_to_dict(scene: Scene) -> dict[str, Any]:
    """
    :param scene: The scene being exported
    :return: The scene as a JSON compatible dictionary, all lengths in meters
    """
    region = scene.moist_region

    return {
        "soil": {
            "eps_bg_real": scene.soil.eps_bg_real,
            "loss_tangent_bg": scene.soil.loss_tangent_bg,
            "moisture_map_kind": scene.soil.moisture_map_kind,
        },
        "pipe_depth_m": scene.pipe_depth_m,
        "pipe_diameter_m": scene.pipe_diameter_m,
        "pipe_x_m": scene.pipe_x_m,
        "pipe_water_filled": scene.pipe_water_filled,
        "moist_region": None if region is None else {
            "center_x_m": region.center_x_m,
            "center_z_m": region.center_z_m,
            "radius_m": region.radius_m,
            "sm_fraction": region.sm_fraction,
        },
        "clutter_points": [
            {"x_m": point.x_m, "z_m": point.z_m, "contrast": complex_to_list(point.contrast),
             "kind": point.kind.value, "radius_m": point.radius_m}
            for point in scene.clutter_points
        ],
        "rng_seed": scene.rng_seed,
    }


def scene_from_dict(data: dict[str, Any]) -> Scene:
    """
    Constructs a Scene from its dictionary form, missing fields take their defaults

    :param data: The dictionary, as produced by scene_to_dict
    :return: The scene
    """
    try:
        soil = SoilModel(**data.get("soil", {}))

        region_data = data.get("moist_region")
        region = None if region_data is None else MoistRegion(
            float(region_data["center_x_m"]), float(region_data["center_z_m"]),
            float(region_data["radius_m"]), float(region_data["sm_fraction"]))

        points = tuple(
            ClutterPoint(float(point["x_m"]), float(point["z_m"]),
                         complex_from_value(point["contrast"]), ScattererKind(point["kind"]),
                         float(point.get("radius_m", 0.0)))
            for point in data.get("clutter_points", []))

        defaults = Scene()

        return Scene(soil=soil,
                     pipe_depth_m=float(data.get("pipe_depth_m", defaults.pipe_depth_m)),
                     pipe_diameter_m=float(data.get("pipe_diameter_m",
                                                    defaults.pipe_diameter_m)),
                     pipe_x_m=float(data.get("pipe_x_m", defaults.pipe_x_m)),
                     pipe_water_filled=bool(data.get("pipe_water_filled", True)),
                     moist_region=region,
                     clutter_points=points,
                     rng_seed=int(data.get("rng_seed", 0)))
    except (KeyError, TypeError, ValueError) as error:
        raise ConfigurationError(f"malformed scene document: {error!r}") from error


def load_scene(path: str) -> Scene:
    """
    :param path: The path of a scene document
    :return: The scene it describes
    """
    return scene_from_dict(load_document(path))


def save_scene(scene: Scene, path: str):
    """
    :param scene: The scene being saved
    :param path: The destination JSON file
    """
    save_document(scene_to_dict(scene), path)
