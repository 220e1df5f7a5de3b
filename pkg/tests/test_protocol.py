import struct

import numpy as np
import pytest

from scan_files.files import load_bscan, load_image, save_bscan, save_image
from scan_files.protocol import BScanRecord, CnnRecord, ImageRecord, KnnRecord, Record, \
    read_record, record_by_magic, write_record
from subsurface_twin.errors import FileFormatError
from subsurface_twin.forward import BScan
from subsurface_twin.imaging import Image


@pytest.fixture
def bscan(rng):
    data = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    return BScan(data, [1e9, 1.1e9, 1.2e9, 1.3e9], [0.0, 0.3, 0.6], "simulated")


def test_bscan_record_layout(bscan):
    packed = BScanRecord(bscan.data, bscan.freq_hz, bscan.pos_m).pack()
    magic, version, n_f, n_s, _ = struct.unpack("<4sHIIH", packed[:16])
    assert (magic, version, n_f, n_s) == (b"MWBS", 1, 4, 3)

    first_re, first_im = struct.unpack("<dd", packed[16:32])
    assert first_re == bscan.data[0, 0].real
    assert first_im == bscan.data[0, 0].imag


def test_bscan_file(tmp_path, bscan):
    path = str(tmp_path / "scan.mwbs")
    save_bscan(bscan, path)
    loaded = load_bscan(path)
    assert np.array_equal(loaded.data, bscan.data)
    assert np.array_equal(loaded.freq_hz, bscan.freq_hz)
    assert loaded.provenance == "simulated"


def test_image_file(tmp_path, small_grid, rng):
    image = Image(small_grid, rng.uniform(0, 1, small_grid.shape), 3, {"imaging": "bpa"})
    path = str(tmp_path / "image.mwim")
    save_image(image, path)
    loaded = load_image(path)
    assert loaded.grid == small_grid
    assert loaded.source_band == 3
    assert loaded.pipeline == {"imaging": "bpa"}
    assert np.array_equal(loaded.values, image.values)


def test_model_records(rng):
    blocks = [rng.standard_normal((2, 3, 3, 3)), rng.standard_normal(2)]
    cnn = CnnRecord.unpack(CnnRecord(8, blocks, {"seed": 5}).pack())
    assert cnn.n_classes == 8
    assert [block.shape for block in cnn.blocks] == [(2, 3, 3, 3), (2,)]
    assert cnn.meta == {"seed": 5}

    knn = KnnRecord.unpack(KnnRecord(np.eye(3), [0, 1, 1], 2, [0.25, 0.5]).pack())
    assert knn.k == 2
    assert knn.labels.tolist() == [0, 1, 1]
    assert knn.classes == [0.25, 0.5]


def test_knn_record_training_context():
    training = {"pipeline": {"stage": "baa", "n_remove": 1}, "band_plan": {"n_bands": 4}}
    knn = KnnRecord.unpack(KnnRecord(np.eye(2), [0, 1], 1, [0.25, 0.5], training).pack())
    assert knn.training == training
    assert KnnRecord.unpack(KnnRecord(np.eye(2), [0, 1], 1, [0.25, 0.5]).pack()).training is None


def test_base_record_has_no_layout():
    with pytest.raises(NotImplementedError):
        Record().pack()


def test_truncated_record(bscan):
    packed = BScanRecord(bscan.data, bscan.freq_hz, bscan.pos_m).pack()
    with pytest.raises(FileFormatError):
        BScanRecord.unpack(packed[:40])


def test_trailing_bytes(bscan):
    packed = BScanRecord(bscan.data, bscan.freq_hz, bscan.pos_m).pack()
    with pytest.raises(FileFormatError):
        BScanRecord.unpack(packed + b"\0")


def test_wrong_version(bscan):
    packed = bytearray(BScanRecord(bscan.data, bscan.freq_hz, bscan.pos_m).pack())
    packed[4:6] = struct.pack("<H", 2)
    with pytest.raises(FileFormatError):
        BScanRecord.unpack(bytes(packed))


def test_unknown_magic():
    with pytest.raises(FileFormatError):
        record_by_magic(b"ABCD" + bytes(20))


def test_unexpected_record_kind(tmp_path, small_grid):
    path = str(tmp_path / "image.mwim")
    write_record(ImageRecord(np.zeros(small_grid.shape), small_grid.to_dict()), path)
    with pytest.raises(FileFormatError):
        read_record(path, BScanRecord)
    with pytest.raises(FileFormatError):
        load_bscan(path)
