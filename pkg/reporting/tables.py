"""
Writes reports for people (aligned text tables), spreadsheets (CSV) and eyes (PGM heatmaps)
"""

import csv
import os
from typing import Any, Sequence

import numpy as np
from PIL import Image


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """
    :param headers: The column titles
    :param rows: The rows, one value per column
    :return: The table with every column padded to its widest cell
    """
    cells = [[str(header) for header in headers]] + [[_cell(value) for value in row]
                                                      for row in rows]
    widths = [max(len(row[column]) for row in cells) for column in range(len(headers))]

    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
             for row in cells]
    lines.insert(1, "  ".join("-" * width for width in widths))

    return "\n".join(lines) + "\n"


def _ensure_parent(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def write_text(text: str, path: str):
    _ensure_parent(path)
    with open(path, "w") as f:
        f.write(text)


def write_csv(headers: Sequence[str], rows: Sequence[Sequence[Any]], path: str):
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(headers)
        writer.writerows(rows)


def write_heatmap_pgm(matrix: np.ndarray, path: str, cell_pixels: int = 16):
    """
    Writes a matrix of values in [0, 1] as an 8-bit grayscale PGM, one square per entry

    :param matrix: The values, white is 1
    :param path: The output file
    :param cell_pixels: The side of the square drawn for each entry
    """
    values = np.clip(np.asarray(matrix, dtype=float), 0.0, 1.0)
    pixels = np.kron(np.round(values * 255), np.ones((cell_pixels, cell_pixels)))

    _ensure_parent(path)
    Image.fromarray(pixels.astype(np.uint8)).save(path, format="PPM")
