"""
Reads and writes the JSON configuration documents
"""

import json
import os
from typing import Any

import yaml

from subsurface_twin.errors import ConfigurationError


def load_document(path: str) -> dict[str, Any]:
    """
    Loads a configuration document, YAML parsing accepts JSON files as well

    :param path: The path of the document
    :return: The document's top level mapping
    """
    try:
        with open(path, "r", encoding="utf-8") as file:
            document = yaml.safe_load(file)
    except OSError as error:
        raise ConfigurationError(f"cannot read {path}: {error}") from error
    except yaml.YAMLError as error:
        raise ConfigurationError(f"cannot parse {path}: {error}") from error

    if not isinstance(document, dict):
        raise ConfigurationError(f"{path} does not hold a mapping")

    return document


def dump_document(document: dict[str, Any]) -> str:
    """
    :param document: A JSON compatible mapping
    :return: The canonical JSON text of the document
    """
    return json.dumps(document, indent=2, sort_keys=True)


def save_document(document: dict[str, Any], path: str):
    """
    Saves a document as JSON, creating missing directories

    :param document: A JSON compatible mapping
    :param path: The destination path
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(path, "w", encoding="utf-8") as file:
        file.write(dump_document(document))
        file.write("\n")


def complex_to_list(value: complex) -> list[float]:
    """
    :param value: A complex number
    :return: [real, imaginary]
    """
    value = complex(value)
    return [value.real, value.imag]


def complex_from_value(value: Any) -> complex:
    """
    :param value: [real, imaginary], a number, or a string such as "1.5+0.3j"
    :return: The complex number
    """
    try:
        if isinstance(value, (list, tuple)):
            real, imag = value
            return complex(float(real), float(imag))
        return complex(value)
    except (TypeError, ValueError) as error:
        raise ConfigurationError(f"not a complex value: {value!r}") from error
