"""Tests for the recognition pipeline and its report."""

import json
import logging
from dataclasses import replace

import numpy as np
import pytest

from qfacerec.analysis.dissimilarity import DivergenceResult, MatchRanking
from qfacerec.core.config import Config, PipelineConfig
from qfacerec.core.errors import ConfigError, ImageReadError
from qfacerec.core.pipeline import (
    REPORT_NAME,
    RecognitionPipeline,
    backend_agreement,
    derive_seed,
    frames_sweep,
    run_pipeline,
    signal_mask,
    sweep_correlation,
)
from qfacerec.imaging.faces import write_corpus
from qfacerec.imaging.ghost import FaceImage


def test_clean_queries_match_themselves(small_config):
    """Test every database face is its own best match without ghost noise."""
    report = RecognitionPipeline(replace(small_config, use_ghost=False)).run()
    assert report.accuracy == 1.0
    assert report.database == ["face_00", "face_01", "face_02", "face_03"]
    for q in report.queries:
        assert q.ranking.divergences[q.best] == pytest.approx(0.0, abs=1e-9)
        assert q.snr is None


def test_best_match_is_row_argmin(small_config):
    """Test each query's best match is the argmin of its divergence row."""
    report = RecognitionPipeline(small_config).run()
    matrix = report.divergence_matrix
    assert matrix.shape == (4, 4)
    assert [q.best for q in report.queries] == [int(np.argmin(row)) for row in matrix]


def test_ghost_queries_carry_snr(small_config):
    """Test ghost-synthesized queries report a positive SNR."""
    report = RecognitionPipeline(small_config).run()
    assert all(q.snr is not None and q.snr > 0 for q in report.queries)


def test_report_is_deterministic_across_output_dirs(small_config, tmp_path):
    """Test two runs with the same seed write byte-identical reports."""
    first = run_pipeline(replace(small_config, output=tmp_path / "a"))
    second = run_pipeline(replace(small_config, output=tmp_path / "b"))
    assert first.to_json() == second.to_json()
    assert (tmp_path / "a" / REPORT_NAME).read_bytes() == (tmp_path / "b" / REPORT_NAME).read_bytes()


def test_seed_changes_ghost_report(small_config):
    """Test a different seed changes the ghost queries."""
    a = RecognitionPipeline(small_config).run()
    b = RecognitionPipeline(replace(small_config, seed=4)).run()
    assert not np.allclose(a.divergence_matrix, b.divergence_matrix)


def test_report_layout(small_config):
    """Test the report carries schema, metadata, summary and gate counts."""
    data = json.loads(RecognitionPipeline(small_config).run().to_json())
    assert data["schema"] == 1
    assert data["metadata"]["seed"] == 3
    assert len(data["metadata"]["config_hash"]) == 64
    assert "output" not in data["config"]
    assert data["backend"] == "classical"
    assert data["face_matrix_source"] == "raw"
    assert data["summary"]["queries"] == 4
    assert set(data["gate_counts"]) == {"qpca"}
    assert len(data["eigenvalues"]["oracle"]) == 2


def test_run_pipeline_writes_outputs(small_config):
    """Test the report, audit files and image dumps are written."""
    cfg = replace(small_config, dump_images=True)
    run_pipeline(cfg)
    out = cfg.output
    assert (out / REPORT_NAME).exists()
    assert (out / "runs.db").exists()
    assert (out / "audit.jsonl").exists()
    assert (out / "operations.log").exists()
    assert len(list((out / "ghost").glob("*.pgm"))) == 4
    assert len(list((out / "eigenfaces").glob("*.pgm"))) == 2


def test_quantum_fallback_above_dimension_cap(small_config, caplog):
    """Test matrices above the quantum cap fall back to classical with a warning."""
    cfg = replace(small_config, backend="quantum", quantum_dim_cap=2, use_ghost=False)
    pipeline = RecognitionPipeline(cfg)
    assert pipeline.effective_backend == "classical"
    with caplog.at_level(logging.WARNING):
        report = pipeline.run()
    assert report.backend == "classical"
    assert "falling back" in caplog.text


def test_both_backends_on_feature_space(small_config):
    """Test the circuit and classical divergences are reported side by side."""
    cfg = replace(small_config, backend="both", feature_space=True, use_ghost=False)
    report = RecognitionPipeline(cfg).run()
    assert report.backend == "both"
    assert report.face_matrix_source == "feature"
    assert {"hhl", "trace", "determinant", "qpca"} <= set(report.gate_counts)
    for q in report.queries:
        assert np.isfinite(q.agreement["max_delta"])
        assert np.isfinite(q.agreement["max_bound"])
        assert q.agreement["within_bound"] is True
        assert q.ranking.divergences.shape == (4,)


def test_ill_conditioned_raw_queries_fall_back_to_classical(small_config, caplog):
    """Test raw matrices past the HHL condition cap are matched classically, not aborted."""
    cfg = replace(small_config, backend="both", use_ghost=False)
    with caplog.at_level(logging.WARNING):
        report = RecognitionPipeline(cfg).run()
    fallbacks = [q for q in report.queries if q.agreement.get("fallback") == "classical"]
    assert fallbacks
    assert "falling back to classical" in caplog.text
    for q in fallbacks:
        assert "Condition ratio" in q.agreement["reason"]
        assert q.agreement["classical_best"] == q.best
    data = json.loads(report.to_json())
    assert any(entry["agreement"].get("fallback") == "classical" for entry in data["queries"])


def _ranking(values, bounds):
    results = [DivergenceResult(v, "quantum", 0.0, 0.0, 2, bound=b) for v, b in zip(values, bounds)]
    divergences = np.array(values)
    return MatchRanking(divergences, [int(k) for k in np.argsort(divergences, kind="stable")], results)


def test_backend_agreement_within_bound():
    """Test a gap under the declared bound is flagged as agreeing."""
    agreement = backend_agreement(_ranking([0.0, 1.0], [0.1, 0.1]), _ranking([0.05, 1.02], [0.0, 0.0]))
    assert agreement["max_delta"] == pytest.approx(0.05)
    assert agreement["max_bound"] == pytest.approx(0.1)
    assert agreement["within_bound"] is True
    assert agreement["classical_best"] == 0


def test_backend_agreement_flags_gap_above_bound(caplog):
    """Test a gap over the declared bound is flagged and logged."""
    with caplog.at_level(logging.WARNING):
        agreement = backend_agreement(_ranking([0.0, 1.0], [0.01, 0.01]), _ranking([0.5, 1.0], [0.0, 0.0]))
    assert agreement["within_bound"] is False
    assert "above their bound" in caplog.text


def test_feature_space_rank_check(small_config):
    """Test asking for more eigenfaces than QPCA resolves raises."""
    with pytest.raises(ConfigError):
        RecognitionPipeline(replace(small_config, feature_space=True, r=5)).prepare()


def test_feature_matrices_have_dimension_r(small_config):
    """Test feature-space matrices are r x r."""
    pipeline = RecognitionPipeline(replace(small_config, feature_space=True))
    pipeline.prepare()
    assert all(m.dimension == 2 for m in pipeline.database_matrices)


def test_synthetic_corpus_when_no_image_dir(small_config):
    """Test the pipeline falls back to the synthetic corpus."""
    pipeline = RecognitionPipeline(replace(small_config, image_dir=None, use_ghost=False))
    report = pipeline.run()
    assert len(report.database) == 8
    assert report.accuracy == 1.0


def test_separate_query_directory(small_config, tmp_path):
    """Test queries from another directory are matched without grading."""
    query_dir = tmp_path / "queries"
    write_corpus(query_dir, 2, side=4, seed=99)
    for path in query_dir.glob("*.pgm"):
        path.rename(path.with_name(f"query_{path.name}"))
    report = RecognitionPipeline(replace(small_config, query_dir=query_dir, use_ghost=False)).run()
    assert len(report.queries) == 2
    assert report.accuracy is None
    assert report.to_dict()["summary"]["accuracy"] is None


def test_too_few_database_images(small_config, tmp_path):
    """Test a database with one image raises."""
    lonely = tmp_path / "lonely"
    write_corpus(lonely, 1, side=4)
    with pytest.raises(ImageReadError):
        RecognitionPipeline(replace(small_config, image_dir=lonely)).prepare()


def test_derive_seed():
    """Test derived seeds are stable, distinct and 64-bit."""
    assert derive_seed(3, 0) == derive_seed(3, 0)
    assert derive_seed(3, 0) != derive_seed(3, 1)
    assert derive_seed(3, 0) != derive_seed(4, 0)
    assert 0 <= derive_seed(2 ** 64 - 1, 5) < 2 ** 64


def test_signal_mask():
    """Test the mask keeps pixels above a quarter of the peak."""
    face = FaceImage(pixels=np.array([[0.0, 0.2], [0.3, 1.0]]))
    assert signal_mask(face).tolist() == [[False, False], [True, True]]


@pytest.mark.slow
def test_frames_sweep_accuracy_rises(small_config):
    """Test accuracy grows from very short to long exposures."""
    sweep = frames_sweep(small_config, frames=(2, 400), seeds=range(4))
    assert sweep.frames == [2, 400]
    assert all(0 <= a <= 1 for a in sweep.accuracy)
    assert sweep.accuracy[-1] >= sweep.accuracy[0]


def test_sweep_correlation_flat_curve_counts_as_monotone():
    """Test a constant accuracy curve gets ρ = 1 instead of nan."""
    assert sweep_correlation([30, 100, 300, 1000], [1.0, 1.0, 1.0, 1.0]) == 1.0
    assert sweep_correlation([30, 100, 300, 1000], [0.2, 0.5, 0.7, 0.9]) == pytest.approx(1.0)
    assert sweep_correlation([30, 100, 300, 1000], [0.9, 0.7, 0.5, 0.2]) == pytest.approx(-1.0)
    assert np.isnan(sweep_correlation([300], [0.5]))


def _desk_config(tmp_path):
    """The 8-identity 16x16 synthetic corpus with the default file settings."""
    empty = tmp_path / "pipeline.conf"
    empty.write_text("")
    cfg = PipelineConfig.from_config(Config(empty), seed=0)
    return replace(cfg, output=tmp_path / "out")


@pytest.mark.slow
def test_desk_corpus_clean_self_match(tmp_path):
    """Test clean queries on the 8-identity 16x16 corpus all match themselves."""
    cfg = replace(_desk_config(tmp_path), use_ghost=False)
    report = RecognitionPipeline(cfg).run()
    assert len(report.database) == 8
    assert report.accuracy == 1.0


@pytest.mark.slow
def test_desk_corpus_ghost_frames_sweep(tmp_path):
    """Test ghost accuracy at 300 frames and its rise over 30..1000 frames, 20 seeds each."""
    sweep = frames_sweep(_desk_config(tmp_path))
    assert sweep.frames == [30, 100, 300, 1000]
    assert sweep.accuracy[2] >= 0.5
    assert sweep.rho > 0.9
