"""Recognition pipeline: ingest, ghost-synthesize, QPCA features, divergence matching, report."""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy
from scipy import stats

from .. import __version__
from ..analysis.dissimilarity import (
    CLASSICAL,
    QUANTUM,
    RAW,
    FEATURE,
    FaceMatrix,
    MatchRanking,
    feature_epsilon,
    feature_face_matrix,
    match_face,
    prepare_face_matrix,
)
from ..analysis.qpca import (
    EigenfaceBasis,
    TrainingSet,
    build_covariance,
    eigenface_rasters,
    expand_face,
    qpca_eigenfaces,
    select_principal,
)
from ..audit.trail import RunAuditTrail
from ..imaging.faces import synthetic_corpus
from ..imaging.ghost import FaceImage, GhostConfig, synthesize
from ..imaging.pgm import list_images, load_pgm, save_face, save_pgm
from ..quantum.register import GateLog
from .config import PipelineConfig
from .errors import ConditionNumberError, ConfigError, ImageReadError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REPORT_NAME = "report.json"
DESK_CORPUS_SIZE = 8
SIGNAL_THRESHOLD = 0.25


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for item `index` of a run."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def signal_mask(face: FaceImage) -> np.ndarray:
    """Pixels above a quarter of the peak, used as the SNR signal region."""
    return face.pixels > SIGNAL_THRESHOLD * max(float(face.pixels.max()), 1e-12)


def _json_float(value: Optional[float]) -> Any:
    if value is None:
        return None
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return value


def backend_agreement(quantum: MatchRanking, classical: MatchRanking) -> Dict[str, Any]:
    """Largest |D_quantum − D_classical| against the largest declared bound for one query."""
    max_delta = float(np.max(np.abs(quantum.divergences - classical.divergences)))
    max_bound = float(max(r.bound for r in quantum.results))
    within = max_delta <= max_bound + 1e-9
    if not within:
        logger.warning(f"Circuit divergences differ by {max_delta:.4g}, above their bound {max_bound:.4g}")
    return {
        "max_delta": max_delta,
        "max_bound": max_bound,
        "within_bound": within,
        "classical_best": float(classical.best),
    }


@dataclass
class QueryResult:
    name: str
    expected: Optional[int]
    ranking: MatchRanking
    snr: Optional[float] = None
    agreement: Optional[Dict[str, Any]] = None

    @property
    def best(self) -> int:
        return self.ranking.best

    @property
    def correct(self) -> Optional[bool]:
        return None if self.expected is None else self.best == self.expected


@dataclass
class MatchReport:
    """Everything a run produced, in report order."""

    config: PipelineConfig
    database: List[str]
    queries: List[QueryResult]
    backend: str
    face_matrix_source: str
    gate_counts: Dict[str, Dict[str, int]] = field(default_factory=dict)
    eigenvalues: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def divergence_matrix(self) -> np.ndarray:
        return np.array([q.ranking.divergences for q in self.queries])

    @property
    def accuracy(self) -> Optional[float]:
        graded = [q.correct for q in self.queries if q.correct is not None]
        if not graded:
            return None
        return sum(graded) / len(graded)

    def to_dict(self) -> Dict[str, Any]:
        queries = []
        for q in self.queries:
            entry = {
                "name": q.name,
                "best": self.database[q.best],
                "best_index": q.best,
                "margin": _json_float(q.ranking.margin),
                "ranking": q.ranking.ranking,
                "divergences": [_json_float(d) for d in q.ranking.divergences],
                "expected": None if q.expected is None else self.database[q.expected],
                "correct": q.correct,
                "snr": _json_float(q.snr),
            }
            if q.agreement is not None:
                entry["agreement"] = {
                    k: v if isinstance(v, (str, bool)) else _json_float(v) for k, v in q.agreement.items()
                }
            queries.append(entry)

        return {
            "schema": SCHEMA_VERSION,
            "metadata": {
                "config_hash": self.config.config_hash(),
                "seed": self.config.seed,
                "versions": {"qfacerec": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
            },
            "config": {k: v for k, v in self.config.to_dict().items() if k not in ("output", "dump_images")},
            "database": self.database,
            "backend": self.backend,
            "face_matrix_source": self.face_matrix_source,
            "divergence_matrix": [[_json_float(d) for d in row] for row in self.divergence_matrix.tolist()],
            "queries": queries,
            "summary": {
                "queries": len(self.queries),
                "correct": sum(1 for q in self.queries if q.correct),
                "accuracy": _json_float(self.accuracy),
            },
            "gate_counts": self.gate_counts,
            "eigenvalues": {k: [_json_float(v) for v in vals] for k, vals in self.eigenvalues.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


class RecognitionPipeline:
    """Runs the recognition stages for one PipelineConfig.

    The database stage (ingest, QPCA, database face matrices) is computed
    once and reused across `run` calls, so sweeps only redo the queries.
    """

    def __init__(self, cfg: PipelineConfig):
        """Initialize pipeline.

        Args:
            cfg: validated pipeline configuration
        """
        self.cfg = cfg.validate()
        self.database: List[FaceImage] = []
        self.basis: Optional[EigenfaceBasis] = None
        self.database_matrices: List[FaceMatrix] = []
        self.log = GateLog()
        self._prepared = False

    @property
    def source(self) -> str:
        return FEATURE if self.cfg.feature_space else RAW

    @property
    def matrix_dimension(self) -> int:
        return self.cfg.r if self.cfg.feature_space else self.cfg.side

    @property
    def effective_backend(self) -> str:
        """Requested backend, or classical when the matrices exceed the quantum cap."""
        if self.cfg.backend != CLASSICAL and self.matrix_dimension > self.cfg.quantum_dim_cap:
            return CLASSICAL
        return self.cfg.backend

    def load_database(self) -> List[FaceImage]:
        if self.cfg.image_dir is None:
            logger.info(f"No image directory configured, using the {DESK_CORPUS_SIZE}-face synthetic corpus")
            faces = synthetic_corpus(DESK_CORPUS_SIZE, self.cfg.side, self.cfg.seed)
        else:
            faces = [load_pgm(path, self.cfg.side) for path in list_images(self.cfg.image_dir)]
        if len(faces) < 2:
            raise ImageReadError(f"Need at least 2 database images, found {len(faces)}")
        return faces

    def load_queries(self) -> List[FaceImage]:
        if self.cfg.query_dir is None:
            return [replace(face, metadata=dict(face.metadata)) for face in self.database]
        queries = [load_pgm(path, self.cfg.side) for path in list_images(self.cfg.query_dir)]
        if not queries:
            raise ImageReadError(f"No query images in {self.cfg.query_dir}")
        return queries

    def prepare(self) -> None:
        """Ingest the database, run QPCA and build the database face matrices."""
        if self._prepared:
            return
        cfg = self.cfg
        self.database = self.load_database()
        logger.info(f"Loaded {len(self.database)} database faces ({cfg.side}x{cfg.side})")

        training = TrainingSet.from_rasters([f.pixels for f in self.database], [f.name for f in self.database])
        covariance = build_covariance(training)
        basis = qpca_eigenfaces(covariance, cfg.qpca_precision, training=training, max_qubits=cfg.max_qubits)
        r = min(cfg.r, basis.rank)
        if cfg.feature_space and r < cfg.r:
            raise ConfigError(f"r={cfg.r} exceeds the {basis.rank} eigenfaces QPCA resolved")
        self.basis = select_principal(basis, r)
        self.log.merge(basis.log)

        self.database_matrices = [self.face_matrix(face) for face in self.database]
        self._prepared = True

    def face_matrix(self, face: FaceImage) -> FaceMatrix:
        if not self.cfg.feature_space:
            return prepare_face_matrix(face.vector(), self.cfg.tau, self.cfg.epsilon)
        vector = face.vector()
        norm = np.linalg.norm(vector)
        weights = expand_face(vector / norm if norm > 0 else vector, self.basis).weights
        epsilon = self.cfg.epsilon if self.cfg.epsilon is not None else feature_epsilon(weights)
        return feature_face_matrix(weights, epsilon)

    def ghost_query(self, face: FaceImage, index: int, ghost: GhostConfig):
        cfg = replace(ghost, seed=derive_seed(self.cfg.seed, index), workers=self.cfg.workers)
        image = synthesize(face, cfg, signal=signal_mask(face))
        return image.to_face_image(face.name), image.snr

    def _match_kwargs(self) -> Dict[str, Any]:
        return {
            "precision": self.cfg.precision,
            "fraction_bits": self.cfg.fraction_bits,
            "rotation": self.cfg.rotation,
            "kappa_cap": self.cfg.kappa_cap,
            "max_qubits": self.cfg.max_qubits,
        }

    def match(self, query: FaceMatrix, gate_counts: Dict[str, GateLog]):
        backend = self.effective_backend
        kwargs = self._match_kwargs()
        workers = self.cfg.workers
        if backend == CLASSICAL:
            return match_face(query, self.database_matrices, CLASSICAL, workers=workers), None

        try:
            quantum = match_face(query, self.database_matrices, QUANTUM, workers=workers, **kwargs)
        except ConditionNumberError as exc:
            logger.warning(f"Quantum backend unavailable for this query ({exc}); falling back to classical")
            classical = match_face(query, self.database_matrices, CLASSICAL, workers=workers)
            return classical, {"fallback": CLASSICAL, "reason": str(exc), "classical_best": float(classical.best)}

        for result in quantum.results:
            for family, counts in result.gate_counts.items():
                family_log = gate_counts.setdefault(family, GateLog())
                family_log.merge(GateLog(**{k: v for k, v in counts.items() if k != "total"}))
        if backend == QUANTUM:
            return quantum, None

        classical = match_face(query, self.database_matrices, CLASSICAL, workers=workers)
        return quantum, backend_agreement(quantum, classical)

    def run(self, ghost: Optional[GhostConfig] = None, dump_dir: Optional[Path] = None) -> MatchReport:
        """Run all stages and assemble the report.

        Args:
            ghost: ghost settings overriding cfg.ghost
            dump_dir: when given, write eigenface and ghost PGMs there
        """
        self.prepare()
        cfg = self.cfg
        ghost = ghost or cfg.ghost
        backend = self.effective_backend
        if backend != cfg.backend:
            logger.warning(
                f"Face matrices are {self.matrix_dimension}x{self.matrix_dimension}, above the quantum cap "
                f"{cfg.quantum_dim_cap}; falling back to the classical backend"
            )

        names = [f.name for f in self.database]
        gate_counts: Dict[str, GateLog] = {"qpca": GateLog().merge(self.log)}
        results = []
        for index, face in enumerate(self.load_queries()):
            snr = None
            if cfg.use_ghost:
                face, snr = self.ghost_query(face, index, ghost)
                if dump_dir is not None:
                    save_face(face, Path(dump_dir) / "ghost" / f"{face.name}.pgm")
            ranking, agreement = self.match(self.face_matrix(face), gate_counts)
            expected = names.index(face.name) if face.name in names else None
            results.append(QueryResult(face.name, expected, ranking, snr, agreement))
            logger.info(f"Query {face.name}: best match {names[ranking.best]} (margin {ranking.margin:.4g})")

        if dump_dir is not None:
            for j, raster in enumerate(eigenface_rasters(self.basis, cfg.side)):
                save_pgm(raster, Path(dump_dir) / "eigenfaces" / f"eigenface_{j:02d}.pgm")

        return MatchReport(
            config=cfg,
            database=names,
            queries=results,
            backend=backend,
            face_matrix_source=self.source,
            gate_counts={family: log.snapshot() for family, log in sorted(gate_counts.items())},
            eigenvalues={
                "oracle": self.basis.eigenvalues.tolist(),
                "estimated": self.basis.estimated_eigenvalues.tolist(),
            },
        )


def write_report(report: MatchReport, output: Path) -> Path:
    output = Path(output)
    output.mkdir(parents=True, exist_ok=True)
    path = output / REPORT_NAME
    with open(path, "w") as f:
        f.write(report.to_json())
    return path


def run_pipeline(cfg: PipelineConfig, audit: bool = True) -> MatchReport:
    """Run the full pipeline, write the JSON report and record the run."""
    pipeline = RecognitionPipeline(cfg)
    dump_dir = cfg.output if cfg.dump_images else None
    report = pipeline.run(dump_dir=dump_dir)
    path = write_report(report, cfg.output)
    logger.info(f"Report written to {path}")

    if audit:
        trail = RunAuditTrail(cfg.output)
        try:
            run_id = trail.log_run(report.to_dict(), path)
            trail.log_stage(run_id, "ingest", f"{len(report.database)} database faces")
            trail.log_stage(run_id, "ghost", "enabled" if cfg.use_ghost else "bypassed")
            trail.log_stage(run_id, "match", f"{report.backend} backend on {report.face_matrix_source} matrices")
        finally:
            trail.close()
    return report


@dataclass
class FramesSweep:
    frames: List[int]
    accuracy: List[float]
    rho: float


def sweep_correlation(frames: Sequence[int], accuracy: Sequence[float]) -> float:
    """Spearman ρ of accuracy against frames; a flat accuracy curve counts as 1."""
    if len(frames) < 2:
        return float("nan")
    values = np.asarray(accuracy, dtype=float)
    if np.all(values == values[0]):
        return 1.0
    return float(stats.spearmanr(frames, values).correlation)


def frames_sweep(
    cfg: PipelineConfig,
    frames: Sequence[int] = (30, 100, 300, 1000),
    seeds: Sequence[int] = tuple(range(20)),
) -> FramesSweep:
    """Mean top-1 accuracy of ghost queries per frame count, with Spearman ρ."""
    cfg = replace(cfg, use_ghost=True)
    pipeline = RecognitionPipeline(cfg)
    accuracy = []
    for count in frames:
        scores = []
        for seed in seeds:
            pipeline.cfg = replace(cfg, seed=seed)
            report = pipeline.run(ghost=replace(cfg.ghost, frames=count))
            scores.append(report.accuracy or 0.0)
        accuracy.append(float(np.mean(scores)))
        logger.info(f"frames={count}: mean accuracy {accuracy[-1]:.3f} over {len(seeds)} seeds")
    return FramesSweep(frames=list(frames), accuracy=accuracy, rho=sweep_correlation(frames, accuracy))
