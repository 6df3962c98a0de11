"""Tests for face matrices and the log-determinant divergence."""

import math

import numpy as np
import pytest

from qfacerec.analysis.dissimilarity import (
    CLASSICAL,
    FEATURE,
    QUANTUM,
    RAW,
    FaceMatrix,
    divergence_error_bound,
    feature_epsilon,
    feature_face_matrix,
    frobenius_distance,
    logdet_divergence,
    match_face,
    prepare_face_matrix,
)
from qfacerec.core.errors import DimensionMismatchError
from qfacerec.linalg.matrix import Matrix


def _face_matrix(dense):
    return FaceMatrix(Matrix(dense), 0.0, 1.0, 0.0)


def _random_spd(rng, size):
    a = rng.normal(size=(size, size))
    return a @ a.T + 0.1 * np.eye(size)


def test_prepare_face_matrix_is_spd(rng):
    """Test the regularized face matrix is symmetric with λ_min >= ε."""
    fm = prepare_face_matrix(rng.normal(size=16), tau=0.1, epsilon=0.05)
    dense = fm.to_dense()
    assert np.allclose(dense, dense.T)
    assert np.min(np.linalg.eigvalsh(dense)) >= 0.05 - 1e-12
    assert fm.dimension == 4
    assert fm.source == RAW


def test_prepare_face_matrix_shift_hits_epsilon_exactly(rng):
    """Test an indefinite face is shifted so λ_min equals ε."""
    fm = prepare_face_matrix(rng.normal(size=9), tau=0.0, epsilon=0.2)
    assert np.min(np.linalg.eigvalsh(fm.to_dense())) == pytest.approx(0.2)
    assert fm.shift > fm.epsilon


def test_prepare_face_matrix_threshold_zeroes_small_entries():
    """Test entries at or below τ·max are dropped before symmetrizing."""
    face = np.array([1.0, 0.05, 0.05, 0.5])
    fm = prepare_face_matrix(face, tau=0.1, epsilon=0.01)
    dense = fm.to_dense()
    assert dense[0, 1] == 0.0
    assert dense[0, 0] == pytest.approx(1.0 + fm.shift)


def test_prepare_face_matrix_full_threshold_uses_floor():
    """Test τ=1 zeroes everything and leaves the ε floor."""
    fm = prepare_face_matrix(np.ones(4), tau=1.0)
    assert np.allclose(fm.to_dense(), 1e-3 * np.eye(2))


def test_default_epsilon_scales_with_diagonal():
    """Test ε defaults to 5% of the mean absolute diagonal."""
    fm = prepare_face_matrix(np.array([2.0, 0.0, 0.0, 2.0]), tau=0.0)
    assert fm.epsilon == pytest.approx(0.1)


@pytest.mark.parametrize("face, tau, epsilon", [
    (np.ones(5), 0.1, None),
    (np.ones(4), 1.5, None),
    (np.ones(4), 0.1, 0.0),
])
def test_prepare_face_matrix_rejects_bad_input(face, tau, epsilon):
    """Test non-square faces, τ outside [0, 1] and ε <= 0 raise."""
    with pytest.raises(ValueError):
        prepare_face_matrix(face, tau, epsilon)


def test_non_square_face_is_dimension_error():
    """Test a non-square face length is a dimension error."""
    with pytest.raises(DimensionMismatchError):
        prepare_face_matrix(np.ones(6), 0.1)


def test_divergence_non_negative(rng):
    """Test D >= 0 over 500 seeded SPD pairs."""
    for _ in range(500):
        size = int(rng.integers(2, 5))
        x = _face_matrix(_random_spd(rng, size))
        y = _face_matrix(_random_spd(rng, size))
        assert logdet_divergence(x, y).value >= -1e-9


def test_divergence_of_self_is_zero(rng):
    """Test D(X, X) vanishes."""
    x = _face_matrix(_random_spd(rng, 4))
    assert abs(logdet_divergence(x, x).value) <= 1e-9


def test_divergence_closed_form():
    """Test D(2I, I) = 2 - 2 ln 2 for N=2."""
    result = logdet_divergence(_face_matrix(2 * np.eye(2)), _face_matrix(np.eye(2)))
    assert result.value == pytest.approx(2 - 2 * math.log(2))
    assert result.trace_term == pytest.approx(4.0)
    assert result.logdet_term == pytest.approx(2 * math.log(2))
    assert result.backend == CLASSICAL


def test_divergence_is_asymmetric(rng):
    """Test D(X, Y) and D(Y, X) differ in general."""
    x = _face_matrix(_random_spd(rng, 3))
    y = _face_matrix(_random_spd(rng, 3))
    assert logdet_divergence(x, y).value != pytest.approx(logdet_divergence(y, x).value)


def test_quantum_matches_classical_on_exact_spectra(hermitian_with_spectrum):
    """Test the circuit divergence is within its bound on exactly representable spectra."""
    x = _face_matrix(hermitian_with_spectrum([2.0, 4.0]))
    y = _face_matrix(hermitian_with_spectrum([1.0, 2.0]))
    classical = logdet_divergence(x, y)
    quantum = logdet_divergence(x, y, backend=QUANTUM, precision=4)
    assert quantum.bound == pytest.approx(2 * 2 ** -9)
    assert abs(quantum.value - classical.value) <= quantum.bound + 1e-9
    assert set(quantum.gate_counts) == {"hhl", "trace", "determinant"}
    assert all(counts["total"] > 0 for counts in quantum.gate_counts.values())


def test_quantum_within_bound_off_grid():
    """Test the circuit divergence stays within its bound when HHL and determinants leak."""
    x = _face_matrix(np.diag([1.0, 3.0]))
    y = _face_matrix(np.diag([1.0, 1.0 / 3.0]))
    classical = logdet_divergence(x, y)
    quantum = logdet_divergence(x, y, backend=QUANTUM, precision=4)
    assert 2 * 2 ** -9 < quantum.bound < math.inf
    assert abs(quantum.value - classical.value) <= quantum.bound


def test_divergence_error_bound_grows_off_grid():
    """Test non-dyadic spectra add determinant terms to the bound."""
    x = _face_matrix(np.diag([1.0, 3.0]))
    y = _face_matrix(np.diag([1.0, 1.0 / 3.0]))
    assert divergence_error_bound(x, y, 4) > 2 * 2 ** -9


def test_unknown_backend():
    """Test an unknown backend raises."""
    x = _face_matrix(np.eye(2))
    with pytest.raises(ValueError):
        logdet_divergence(x, x, backend="analog")


def test_dimension_mismatch():
    """Test comparing different sizes raises."""
    with pytest.raises(DimensionMismatchError):
        logdet_divergence(_face_matrix(np.eye(2)), _face_matrix(np.eye(3)))
    with pytest.raises(DimensionMismatchError):
        frobenius_distance(_face_matrix(np.eye(2)), _face_matrix(np.eye(3)))


def test_match_face_ranks_ascending(rng):
    """Test the query's own matrix ranks first."""
    database = [_face_matrix(_random_spd(rng, 3)) for _ in range(4)]
    ranking = match_face(database[2], database)
    assert ranking.best == 2
    assert ranking.divergences[2] == pytest.approx(0.0, abs=1e-9)
    assert sorted(ranking.divergences) == [ranking.divergences[k] for k in ranking.ranking]
    assert ranking.margin > 0


def test_match_face_ties_go_to_lower_index(rng):
    """Test equal divergences rank by index."""
    entry = _face_matrix(_random_spd(rng, 2))
    ranking = match_face(_face_matrix(np.eye(2)), [entry, entry, entry])
    assert ranking.ranking == [0, 1, 2]
    assert ranking.margin == 0.0


def test_match_face_ignores_appended_duplicates(rng):
    """Test appending copies of database entries leaves the best match unchanged."""
    database = [_face_matrix(_random_spd(rng, 3)) for _ in range(4)]
    query = _face_matrix(_random_spd(rng, 3))
    base = match_face(query, database)
    padded = match_face(query, database + [database[3], database[0], database[base.best]])
    assert padded.best == base.best
    assert [k for k in padded.ranking if k < 4] == base.ranking
    assert padded.divergences[:4] == pytest.approx(base.divergences)


def test_match_face_workers_agree(rng):
    """Test threaded matching gives the same ranking."""
    database = [_face_matrix(_random_spd(rng, 3)) for _ in range(5)]
    query = _face_matrix(_random_spd(rng, 3))
    assert match_face(query, database, workers=3).ranking == match_face(query, database).ranking


def test_match_face_single_entry_margin():
    """Test a one-entry database has an infinite margin."""
    x = _face_matrix(np.eye(2))
    assert match_face(x, [x]).margin == float("inf")


def test_match_face_empty_database():
    """Test an empty database raises."""
    with pytest.raises(DimensionMismatchError):
        match_face(_face_matrix(np.eye(2)), [])


def test_frobenius_distance():
    """Test the Frobenius baseline."""
    assert frobenius_distance(_face_matrix(2 * np.eye(2)), _face_matrix(np.eye(2))) == pytest.approx(math.sqrt(2))


def test_feature_epsilon_and_condition_number():
    """Test ωωᵀ + εI with the mean-square ε has condition number r + 1."""
    weights = np.array([1.0, -2.0, 3.0])
    epsilon = feature_epsilon(weights)
    assert epsilon == pytest.approx(14 / 3)
    fm = feature_face_matrix(weights, epsilon)
    values = np.linalg.eigvalsh(fm.to_dense())
    assert values.max() / values.min() == pytest.approx(4.0)
    assert fm.source == FEATURE


def test_feature_epsilon_floor():
    """Test tiny weights fall back to the floor."""
    assert feature_epsilon(np.zeros(3)) == 1e-3


def test_feature_face_matrix_rejects_bad_epsilon():
    """Test ε <= 0 raises."""
    with pytest.raises(ValueError):
        feature_face_matrix(np.ones(2), 0.0)
