"""Test configuration."""

import numpy as np
import pytest

from qfacerec.core.config import PipelineConfig
from qfacerec.imaging.faces import write_corpus
from qfacerec.imaging.ghost import GhostConfig


@pytest.fixture
def rng():
    """Seeded numpy Generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def random_unitary(rng):
    """Factory for seeded real orthogonal matrices."""
    def make(size):
        q, r = np.linalg.qr(rng.normal(size=(size, size)))
        return q * np.sign(np.diag(r))
    return make


@pytest.fixture
def hermitian_with_spectrum(random_unitary):
    """Factory for real symmetric matrices with a chosen spectrum."""
    def make(eigenvalues):
        q = random_unitary(len(eigenvalues))
        a = q @ np.diag(eigenvalues) @ q.T
        return (a + a.T) / 2
    return make


@pytest.fixture
def corpus_dir(tmp_path):
    """Four synthetic 4x4 faces written as PGM files."""
    directory = tmp_path / "faces"
    write_corpus(directory, 4, side=4, seed=7)
    return directory


@pytest.fixture
def small_config(tmp_path, corpus_dir):
    """Fast pipeline settings over the 4x4 corpus."""
    return PipelineConfig(
        image_dir=corpus_dir,
        side=4,
        r=2,
        qpca_precision=5,
        output=tmp_path / "out",
        seed=3,
        ghost=GhostConfig(frames=40, pairs_per_frame=64, jitter_sigma=0.3, dark_count_rate=0.01, detection_efficiency=0.9),
    )
