"""
    Details the binary records B-scans, images and models are stored in

    Every record is a little-endian struct header starting with a 4 byte magic and a u16
    version, a float64 payload, then a u32 length and a UTF-8 JSON trailer with sorted keys
"""
import json
import os
import struct
from typing import Any, Optional

import numpy as np

from subsurface_twin.errors import FileFormatError

VERSION = 1
""" The only record version written and read """


class _Reader:
    """ A cursor over the bytes of a record """

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if size < 0 or self.offset + size > len(self.data):
            raise FileFormatError(f"record truncated at byte {self.offset}, "
                                  f"{size} more bytes expected")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(float)

    def trailer(self) -> dict[str, Any]:
        length, = self.unpack("<I")
        try:
            trailer = json.loads(self.take(length).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as error:
            raise FileFormatError(f"bad JSON trailer: {error}") from error
        if self.offset != len(self.data):
            raise FileFormatError(f"{len(self.data) - self.offset} unexpected bytes after trailer")
        if not isinstance(trailer, dict):
            raise FileFormatError("JSON trailer is not an object")
        return trailer


class Record:
    """
        Represents a binary record
    """

    MAGIC = b""
    HEADER = "<4sH"

    def pack(self) -> bytes:
        """ The bytes of the record, every record kind defines its own layout """
        raise NotImplementedError(f"{type(self).__name__} does not define pack()")

    @classmethod
    def _header(cls, *fields) -> bytes:
        return struct.pack(cls.HEADER, cls.MAGIC, VERSION, *fields)

    @classmethod
    def _open(cls, data: bytes) -> tuple[_Reader, tuple]:
        """
            Checks the magic and version, returning the cursor and the remaining header fields
        """
        reader = _Reader(bytes(data))
        magic, version, *fields = reader.unpack(cls.HEADER)
        if magic != cls.MAGIC:
            raise FileFormatError(f"expected magic {cls.MAGIC!r}, got {magic!r}")
        if version != VERSION:
            raise FileFormatError(f"unsupported {cls.MAGIC.decode()} version {version}")
        return reader, tuple(fields)

    @staticmethod
    def _floats(values: np.ndarray) -> bytes:
        return np.ascontiguousarray(values, dtype="<f8").tobytes()

    @staticmethod
    def _trailer(trailer: dict[str, Any]) -> bytes:
        text = json.dumps(trailer, sort_keys=True).encode("utf-8")
        return struct.pack("<I", len(text)) + text


class BScanRecord(Record):
    """
        A complex B-scan, interleaved (re, im) float64 rows of frequency
    """

    MAGIC = b"MWBS"
    HEADER = "<4sHIIH"

    def __init__(self, data: np.ndarray, freq_hz: np.ndarray, pos_m: np.ndarray,
                 provenance: str = ""):
        self.data = np.asarray(data, dtype=complex)
        self.freq_hz = np.asarray(freq_hz, dtype=float)
        self.pos_m = np.asarray(pos_m, dtype=float)
        self.provenance = provenance

    def pack(self) -> bytes:
        n_f, n_s = self.data.shape
        interleaved = np.stack([self.data.real, self.data.imag], axis=-1)
        return (self._header(n_f, n_s, 0) + self._floats(interleaved)
                + self._trailer({"freq_hz": self.freq_hz.tolist(), "pos_m": self.pos_m.tolist(),
                                 "provenance": self.provenance}))

    @staticmethod
    def unpack(data: bytes) -> "BScanRecord":
        """
            Unpack the BScanRecord
        """
        reader, (n_f, n_s, _) = BScanRecord._open(data)
        values = reader.floats(2 * n_f * n_s).reshape(n_f, n_s, 2)
        trailer = reader.trailer()
        try:
            freq_hz, pos_m = trailer["freq_hz"], trailer["pos_m"]
        except KeyError as error:
            raise FileFormatError(f"MWBS trailer misses {error}") from error
        if len(freq_hz) != n_f or len(pos_m) != n_s:
            raise FileFormatError("MWBS axes do not match the header dimensions")
        return BScanRecord(values[..., 0] + 1j * values[..., 1], freq_hz, pos_m,
                           trailer.get("provenance", ""))


class ImageRecord(Record):
    """
        A magnitude image, float64 rows of depth
    """

    MAGIC = b"MWIM"
    HEADER = "<4sHII"

    def __init__(self, values: np.ndarray, grid: dict[str, Any],
                 source_band: Optional[int] = None, pipeline: Optional[dict] = None):
        self.values = np.asarray(values, dtype=float)
        self.grid = grid
        self.source_band = source_band
        self.pipeline = pipeline if pipeline is not None else {}

    def pack(self) -> bytes:
        nz, nx = self.values.shape
        return (self._header(nx, nz) + self._floats(self.values)
                + self._trailer({"grid": self.grid, "source_band": self.source_band,
                                 "pipeline": self.pipeline}))

    @staticmethod
    def unpack(data: bytes) -> "ImageRecord":
        """
            Unpack the ImageRecord
        """
        reader, (nx, nz) = ImageRecord._open(data)
        values = reader.floats(nx * nz).reshape(nz, nx)
        trailer = reader.trailer()
        if "grid" not in trailer:
            raise FileFormatError("MWIM trailer misses the grid")
        return ImageRecord(values, trailer["grid"], trailer.get("source_band"),
                           trailer.get("pipeline", {}))


class CnnRecord(Record):
    """
        The parameter blocks of a trained CNN, each preceded in the shape table by its dims
    """

    MAGIC = b"MWNN"
    HEADER = "<4sHII"

    def __init__(self, n_classes: int, blocks: list[np.ndarray], meta: dict[str, Any]):
        self.n_classes = n_classes
        self.blocks = [np.asarray(block, dtype=float) for block in blocks]
        self.meta = meta
        """ architecture, seed, train_config, input_size, classes and the training context """

    def pack(self) -> bytes:
        shapes = b"".join(struct.pack(f"<I{block.ndim}I", block.ndim, *block.shape)
                          for block in self.blocks)
        payload = b"".join(self._floats(block) for block in self.blocks)
        return (self._header(self.n_classes, len(self.blocks)) + shapes + payload
                + self._trailer(self.meta))

    @staticmethod
    def unpack(data: bytes) -> "CnnRecord":
        """
            Unpack the CnnRecord
        """
        reader, (n_classes, n_blocks) = CnnRecord._open(data)
        shapes = []
        for _ in range(n_blocks):
            ndim, = reader.unpack("<I")
            shapes.append(reader.unpack(f"<{ndim}I"))
        blocks = [reader.floats(int(np.prod(shape, dtype=int))).reshape(shape)
                  for shape in shapes]
        return CnnRecord(n_classes, blocks, reader.trailer())


class KnnRecord(Record):
    """
        The stored training features and labels of a KNN classifier
    """

    MAGIC = b"MWKN"
    HEADER = "<4sHIII"

    def __init__(self, features: np.ndarray, labels: np.ndarray, k: int, classes: list,
                 training: Optional[dict[str, Any]] = None):
        self.features = np.asarray(features, dtype=float)
        self.labels = np.asarray(labels, dtype=int)
        self.k = k
        self.classes = list(classes)
        self.training = training
        """ The pipeline, band plan and acquisition of the training data, if recorded """

    def pack(self) -> bytes:
        n_train, dim = self.features.shape
        return (self._header(n_train, dim, self.k) + self._floats(self.features)
                + np.ascontiguousarray(self.labels, dtype="<i4").tobytes()
                + self._trailer({"classes": self.classes, "training": self.training}))

    @staticmethod
    def unpack(data: bytes) -> "KnnRecord":
        """
            Unpack the KnnRecord
        """
        reader, (n_train, dim, k) = KnnRecord._open(data)
        features = reader.floats(n_train * dim).reshape(n_train, dim)
        labels = np.frombuffer(reader.take(4 * n_train), dtype="<i4").astype(int)
        trailer = reader.trailer()
        return KnnRecord(features, labels, k, trailer.get("classes", []),
                         trailer.get("training"))


MAGICS: dict[bytes, type] = {
    BScanRecord.MAGIC: BScanRecord,
    ImageRecord.MAGIC: ImageRecord,
    CnnRecord.MAGIC: CnnRecord,
    KnnRecord.MAGIC: KnnRecord,
}
""" The record class of every magic """


def record_by_magic(data: bytes) -> type:
    """
        Get the record class of the given bytes
    """
    magic = bytes(data[:4])
    if magic not in MAGICS:
        raise FileFormatError(f"unknown record magic {magic!r}")
    return MAGICS[magic]


def write_record(record: Record, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(record.pack())


def read_record(path: str, expected: Optional[type] = None) -> Record:
    """
        Reads a record file, checking its class when expected is given
    """
    with open(path, "rb") as f:
        data = f.read()
    record_class = record_by_magic(data)
    if expected is not None and record_class is not expected:
        raise FileFormatError(f"{path} holds a {record_class.MAGIC!r} record, "
                              f"expected {expected.MAGIC!r}")
    return record_class.unpack(data)
