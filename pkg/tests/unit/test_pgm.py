"""Tests for PGM input/output and the synthetic corpus."""

import json

import numpy as np
import pytest

from qfacerec.core.errors import ImageReadError
from qfacerec.imaging.faces import synthetic_corpus, write_corpus
from qfacerec.imaging.ghost import FaceImage
from qfacerec.imaging.pgm import list_images, load_pgm, save_face, save_pgm, to_uint8


def test_save_and_load_preserves_levels(tmp_path):
    """Test 8-bit levels survive a write and read."""
    levels = np.arange(16, dtype=np.uint8).reshape(4, 4) * 17
    path = save_pgm(levels, tmp_path / "grid.pgm")
    assert path.read_bytes().startswith(b"P5")
    face = load_pgm(path)
    assert np.array_equal(to_uint8(face.pixels), levels)
    assert face.name == "grid"
    assert face.metadata["path"] == str(path)


def test_load_resamples_to_side(tmp_path):
    """Test loading with a side resizes the raster."""
    path = save_pgm(np.full((8, 8), 0.5), tmp_path / "big.pgm")
    face = load_pgm(path, side=4)
    assert face.shape == (4, 4)
    assert face.pixels == pytest.approx(np.full((4, 4), 128 / 255))


def test_unreadable_file(tmp_path):
    """Test garbage bytes raise ImageReadError."""
    path = tmp_path / "broken.pgm"
    path.write_bytes(b"not an image")
    with pytest.raises(ImageReadError):
        load_pgm(path)


def test_missing_file(tmp_path):
    """Test a missing file raises ImageReadError."""
    with pytest.raises(ImageReadError):
        load_pgm(tmp_path / "absent.pgm")


def test_to_uint8_clips():
    """Test values outside [0, 1] are clipped."""
    assert to_uint8(np.array([-0.5, 0.5, 2.0])).tolist() == [0, 128, 255]


def test_save_face_writes_sidecar(tmp_path):
    """Test the JSON sidecar records provenance and extra metadata."""
    face = FaceImage(pixels=np.zeros((3, 3)), name="query", metadata={"frames": 10})
    path = save_face(face, tmp_path / "query.pgm", {"snr": 2.5})
    sidecar = json.loads(path.with_suffix(".json").read_text())
    assert sidecar == {"frames": 10, "snr": 2.5, "name": "query", "provenance": "truth", "side": 3}


def test_list_images_filters_and_sorts(tmp_path):
    """Test only PGM files are listed, in name order."""
    for name in ("b.pgm", "a.PGM", "c.pnm"):
        save_pgm(np.zeros((2, 2)), tmp_path / name)
    (tmp_path / "notes.txt").write_text("x")
    assert [p.name for p in list_images(tmp_path)] == ["a.PGM", "b.pgm", "c.pnm"]


def test_list_images_missing_directory(tmp_path):
    """Test a missing directory raises."""
    with pytest.raises(ImageReadError):
        list_images(tmp_path / "nowhere")


def test_synthetic_corpus_deterministic():
    """Test the corpus depends only on (count, side, seed)."""
    first = synthetic_corpus(3, side=8, seed=5)
    second = synthetic_corpus(3, side=8, seed=5)
    for a, b in zip(first, second):
        assert np.array_equal(a.pixels, b.pixels)
    assert [f.name for f in first] == ["face_00", "face_01", "face_02"]


def test_synthetic_corpus_identities_differ():
    """Test each identity is a distinct raster."""
    faces = synthetic_corpus(4, side=8, seed=1)
    for i in range(4):
        for j in range(i + 1, 4):
            assert not np.array_equal(faces[i].pixels, faces[j].pixels)


def test_synthetic_corpus_rejects_bad_arguments():
    """Test count < 1 or side < 2 raise."""
    with pytest.raises(ValueError):
        synthetic_corpus(0)
    with pytest.raises(ValueError):
        synthetic_corpus(2, side=1)


def test_write_corpus(tmp_path):
    """Test written faces reload at the same size."""
    paths = write_corpus(tmp_path, 2, side=6, seed=2)
    assert len(paths) == 2
    assert load_pgm(paths[0]).shape == (6, 6)
    assert paths[0].with_suffix(".json").exists()
