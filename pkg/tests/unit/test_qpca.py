"""Tests for covariance construction and phase-estimated eigenfaces."""

import math

import numpy as np
import pytest

from qfacerec.analysis.qpca import (
    TrainingSet,
    build_covariance,
    eigenface_rasters,
    eigenvalue_from_phase,
    expand_face,
    qpca_eigenfaces,
    scores,
    select_principal,
)
from qfacerec.core.errors import DimensionMismatchError, PhaseWraparoundError


@pytest.fixture
def training(rng):
    """Five positive 16-pixel faces."""
    return TrainingSet(faces=rng.uniform(0.1, 1.0, size=(5, 16)))


def test_training_set_normalizes_rows(rng):
    """Test every face is stored at unit norm."""
    ts = TrainingSet(faces=rng.normal(size=(3, 4)))
    assert np.linalg.norm(ts.faces, axis=1) == pytest.approx([1.0, 1.0, 1.0])
    assert ts.size == 3
    assert ts.dimension == 4


def test_training_set_rejects_zero_face():
    """Test an all-zero face raises."""
    with pytest.raises(DimensionMismatchError):
        TrainingSet(faces=np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_training_set_label_count():
    """Test label count must match the face count."""
    with pytest.raises(DimensionMismatchError):
        TrainingSet(faces=np.eye(2), labels=("a",))


def test_from_rasters_flattens_row_major():
    """Test rasters flatten row by row."""
    ts = TrainingSet.from_rasters([np.array([[3.0, 4.0], [0.0, 0.0]])], labels=["x"])
    assert ts.faces[0].real == pytest.approx([0.6, 0.8, 0.0, 0.0])
    assert ts.labels == ("x",)


@pytest.mark.parametrize("size", [2, 4])
def test_covariance_unit_trace_and_eigenvalues(size, rng):
    """Test C has unit trace and phase estimation lands within one bin."""
    ts = TrainingSet(faces=rng.normal(size=(size, 4)))
    c = build_covariance(ts)
    assert c.hermitian
    assert np.trace(c.to_dense()).real == pytest.approx(1.0, abs=1e-10)
    basis = qpca_eigenfaces(c, 6)
    assert basis.rank == size
    assert np.all(np.abs(basis.estimated_eigenvalues - basis.eigenvalues) <= basis.bin_width + 1e-12)
    assert basis.log.controlled_unitary > 0


def test_bin_width():
    """Test the bin width at t=π is 2/2^n."""
    ts = TrainingSet(faces=np.eye(2))
    basis = qpca_eigenfaces(build_covariance(ts), 4)
    assert basis.bin_width == pytest.approx(2 / 16)
    assert basis.estimated_eigenvalues == pytest.approx([0.5, 0.5])


def test_phase_wraparound():
    """Test λ·t past 2π raises."""
    c = build_covariance(TrainingSet(faces=np.array([[1.0, 1.0]])))
    with pytest.raises(PhaseWraparoundError):
        qpca_eigenfaces(c, 4, t=7.0)


def test_eigenvalue_from_phase():
    """Test readouts map back through U = e^{-iCt}."""
    assert eigenvalue_from_phase(0, 4, math.pi) == 0.0
    assert eigenvalue_from_phase(8, 4, math.pi) == pytest.approx(1.0)
    assert eigenvalue_from_phase(12, 4, math.pi) == pytest.approx(0.5)


def test_phase_histogram_is_distribution(training):
    """Test the averaged training histogram sums to one."""
    basis = qpca_eigenfaces(build_covariance(training), 5, training=training)
    assert basis.phase_histogram.shape == (32,)
    assert basis.phase_histogram.sum() == pytest.approx(1.0)
    assert basis.score_matrix.shape == (5, basis.rank)


def test_scores_dimension_mismatch(training):
    """Test scoring faces against the wrong dimension raises."""
    basis = qpca_eigenfaces(build_covariance(training), 5)
    with pytest.raises(DimensionMismatchError):
        scores(TrainingSet(faces=np.ones((2, 4))), basis)


def test_select_principal_orders_by_strength(training):
    """Test selection keeps r eigenfaces and flags the largest-eigenvalue one as the mean image."""
    basis = qpca_eigenfaces(build_covariance(training), 5, training=training)
    chosen = select_principal(basis, 3)
    assert chosen.rank == 3
    strength = np.max(np.abs(chosen.score_matrix), axis=0)
    assert list(strength) == sorted(strength, reverse=True)
    assert chosen.eigenvalues[chosen.mean_image_index] == pytest.approx(np.max(basis.eigenvalues))


def test_mean_image_dominates_positive_faces(training):
    """Test the top eigenface of positive faces is close to their normalized mean."""
    basis = qpca_eigenfaces(build_covariance(training), 5)
    top = select_principal(basis, 1)
    mean = training.faces.mean(axis=0)
    overlap = abs(np.vdot(top.eigenface(0), mean)) / np.linalg.norm(mean)
    assert overlap > 0.95


def test_select_principal_without_scores_uses_eigenvalues(training):
    """Test selection falls back to eigenvalue order."""
    basis = qpca_eigenfaces(build_covariance(training), 5)
    chosen = select_principal(basis, 2)
    assert list(chosen.eigenvalues) == sorted(basis.eigenvalues, reverse=True)[:2]


def test_select_principal_bounds(training):
    """Test r outside [1, rank] raises."""
    basis = qpca_eigenfaces(build_covariance(training), 5)
    with pytest.raises(ValueError):
        select_principal(basis, 0)
    with pytest.raises(DimensionMismatchError):
        select_principal(basis, basis.rank + 1)


def test_expand_face_in_span(training):
    """Test faces in the training span reconstruct with near-zero residual."""
    basis = qpca_eigenfaces(build_covariance(training), 5)
    expansion = expand_face(training.faces[2], basis)
    assert expansion.weights.shape == (basis.rank,)
    assert expansion.residual_norm < 1e-9


def test_expand_face_residual_outside_span(training):
    """Test truncating the basis leaves a positive residual."""
    basis = select_principal(qpca_eigenfaces(build_covariance(training), 5), 2)
    assert expand_face(training.faces[4], basis).residual_norm > 0


def test_expand_face_residual_non_increasing_in_r(training, rng):
    """Test growing the nested basis never increases the reconstruction residual."""
    basis = qpca_eigenfaces(build_covariance(training), 5, training=training)
    face = rng.uniform(0.0, 1.0, size=16)
    residuals = [expand_face(face, select_principal(basis, r)).residual_norm for r in range(1, basis.rank + 1)]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(residuals, residuals[1:]))


def test_select_principal_ignores_score_scale(training):
    """Test rescaling every score by the same factor keeps the selection."""
    basis = qpca_eigenfaces(build_covariance(training), 5, training=training)
    chosen = select_principal(basis, 3)
    for factor in (0.25, 3.7, 1e3):
        rescaled = select_principal(basis, 3, score_matrix=factor * basis.score_matrix)
        assert rescaled.indices == chosen.indices
        assert rescaled.mean_image_index == chosen.mean_image_index


def test_expand_face_dimension_mismatch(training):
    """Test a face of the wrong length raises."""
    basis = qpca_eigenfaces(build_covariance(training), 5)
    with pytest.raises(DimensionMismatchError):
        expand_face(np.ones(9), basis)


def test_eigenface_rasters(training):
    """Test rasters are min-max scaled uint8 images."""
    basis = qpca_eigenfaces(build_covariance(training), 5)
    rasters = eigenface_rasters(basis, 4)
    assert len(rasters) == basis.rank
    assert rasters[0].dtype == np.uint8
    assert rasters[0].shape == (4, 4)
    assert rasters[0].min() == 0 and rasters[0].max() == 255
    with pytest.raises(DimensionMismatchError):
        eigenface_rasters(basis, 3)
