"""
    Saves and loads B-scans and images as MWBS / MWIM records
"""
from subsurface_twin.errors import FileFormatError, PipescanError
from subsurface_twin.forward import BScan
from subsurface_twin.grid import ImagingGrid
from subsurface_twin.imaging import Image
from scan_files.protocol import BScanRecord, ImageRecord, read_record, write_record


def save_bscan(bscan: BScan, path: str):
    write_record(BScanRecord(bscan.data, bscan.freq_hz, bscan.pos_m, bscan.provenance), path)


def load_bscan(path: str) -> BScan:
    record = read_record(path, BScanRecord)
    try:
        return BScan(record.data, record.freq_hz, record.pos_m, record.provenance)
    except PipescanError as error:
        raise FileFormatError(f"{path}: {error}") from error


def save_image(image: Image, path: str):
    write_record(ImageRecord(image.values, image.grid.to_dict(), image.source_band,
                             image.pipeline), path)


def load_image(path: str) -> Image:
    record = read_record(path, ImageRecord)
    try:
        return Image(ImagingGrid.from_dict(record.grid), record.values, record.source_band,
                     record.pipeline)
    except PipescanError as error:
        raise FileFormatError(f"{path}: {error}") from error
