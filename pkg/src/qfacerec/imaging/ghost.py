"""Monte-Carlo ghost imaging from correlated photon pairs.

Each pair puts an idler photon on a uniformly random camera pixel and its
signal partner on the object at the same position plus Gaussian jitter.
The camera records the idler only when the signal photon is transmitted
and detected. Dark counts add independent per-pixel clicks every frame.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..core.errors import ConfigError, DimensionMismatchError

logger = logging.getLogger(__name__)

TRUTH = "truth"
GHOST = "ghost"


@dataclass
class FaceImage:
    """Grayscale raster in [0, 1] with provenance."""

    pixels: np.ndarray
    name: str = ""
    provenance: str = TRUTH
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2:
            raise DimensionMismatchError(f"Face raster must be 2-D, got shape {self.pixels.shape}")

    @property
    def side(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape

    def vector(self) -> np.ndarray:
        """Row-major flattening."""
        return self.pixels.reshape(-1)


@dataclass
class GhostConfig:
    frames: int = 300
    pairs_per_frame: int = 128
    mask: Optional[np.ndarray] = None
    jitter_sigma: float = 0.0
    seed: int = 0
    dark_count_rate: float = 0.0
    detection_efficiency: float = 1.0
    workers: int = 1

    def validate(self) -> "GhostConfig":
        if self.frames < 1:
            raise ConfigError(f"ghost.frames must be >= 1, got {self.frames}")
        if self.pairs_per_frame < 0:
            raise ConfigError(f"ghost.pairs_per_frame must be >= 0, got {self.pairs_per_frame}")
        if self.jitter_sigma < 0:
            raise ConfigError(f"ghost.jitter_sigma must be >= 0, got {self.jitter_sigma}")
        if not 0 <= self.dark_count_rate <= 1:
            raise ConfigError(f"ghost.dark_count_rate must lie in [0, 1], got {self.dark_count_rate}")
        if not 0 < self.detection_efficiency <= 1:
            raise ConfigError(f"ghost.detection_efficiency must lie in (0, 1], got {self.detection_efficiency}")
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=float)
            if mask.min() < 0 or mask.max() > 1:
                raise ConfigError("Mask transmission must lie in [0, 1]")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"Seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        return self


@dataclass
class GhostImage:
    counts: np.ndarray
    exposure: np.ndarray
    estimate: np.ndarray
    total_pairs: int
    frames: int
    seed: int
    snr: Optional[float] = None

    def to_face_image(self, name: str = "") -> FaceImage:
        return FaceImage(
            pixels=self.estimate,
            name=name,
            provenance=GHOST,
            metadata={"frames": self.frames, "seed": self.seed, "total_pairs": self.total_pairs},
        )


def frame_generator(seed: int, frame: int) -> np.random.Generator:
    """PCG64 stream for one frame, derived from (seed, frame)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(frame,))))


def _run_frames(transmission: np.ndarray, cfg: GhostConfig, start: int, stop: int):
    height, width = transmission.shape
    pixels = height * width
    flat = transmission.reshape(-1)
    counts = np.zeros(pixels, dtype=np.int64)
    exposure = np.zeros(pixels, dtype=np.int64)

    for frame in range(start, stop):
        rng = frame_generator(cfg.seed, frame)
        idler = rng.integers(0, pixels, size=cfg.pairs_per_frame)
        rows, cols = np.divmod(idler, width)
        if cfg.jitter_sigma > 0:
            dr, dc = rng.normal(0.0, cfg.jitter_sigma, size=(2, cfg.pairs_per_frame))
            rows = np.clip(np.rint(rows + dr), 0, height - 1).astype(np.int64)
            cols = np.clip(np.rint(cols + dc), 0, width - 1).astype(np.int64)
        hit = rng.random(cfg.pairs_per_frame) < flat[rows * width + cols] * cfg.detection_efficiency

        exposure += np.bincount(idler, minlength=pixels)
        counts += np.bincount(idler[hit], minlength=pixels)
        if cfg.dark_count_rate > 0:
            counts += rng.random(pixels) < cfg.dark_count_rate

    return counts, exposure


def synthesize(truth: FaceImage, cfg: GhostConfig, signal: Optional[np.ndarray] = None) -> GhostImage:
    """Accumulate coincidence counts over cfg.frames frames.

    Fixed seed gives bit-identical output for any worker count. With a
    signal mask that splits the image, the achieved SNR is filled in.
    """
    cfg.validate()
    pixels = truth.pixels
    if pixels.min() < 0 or pixels.max() > 1:
        raise ValueError("Truth raster values must lie in [0, 1]")
    transmission = pixels
    if cfg.mask is not None:
        mask = np.asarray(cfg.mask, dtype=float)
        if mask.shape != pixels.shape:
            raise DimensionMismatchError(f"Mask shape {mask.shape} does not match image {pixels.shape}")
        transmission = pixels * mask

    chunks = np.array_split(np.arange(cfg.frames), min(cfg.workers, cfg.frames))
    bounds = [(int(c[0]), int(c[-1]) + 1) for c in chunks if len(c)]
    if len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
            parts = list(pool.map(lambda b: _run_frames(transmission, cfg, *b), bounds))
    else:
        parts = [_run_frames(transmission, cfg, *bounds[0])]

    counts = sum(p[0] for p in parts).reshape(pixels.shape)
    exposure = sum(p[1] for p in parts).reshape(pixels.shape)
    estimate = np.zeros(pixels.shape)
    lit = exposure > 0
    estimate[lit] = np.minimum(1.0, counts[lit] / exposure[lit])

    total = cfg.frames * cfg.pairs_per_frame
    logger.debug(f"Ghost image '{truth.name}': {total} pairs over {cfg.frames} frames, {int(counts.sum())} counts")
    image = GhostImage(
        counts=counts,
        exposure=exposure,
        estimate=estimate,
        total_pairs=total,
        frames=cfg.frames,
        seed=cfg.seed,
    )
    if signal is not None:
        region = np.asarray(signal, dtype=bool)
        if region.any() and not region.all():
            image.snr = snr_estimate(image, region)
    return image


def snr_estimate(img: GhostImage, signal_mask: np.ndarray) -> float:
    """mean(T̂ over signal pixels) / std(T̂ over background pixels).

    Returns 0 when no pairs were sent and inf when the background is flat.
    """
    mask = np.asarray(signal_mask, dtype=bool)
    if mask.shape != img.estimate.shape:
        raise DimensionMismatchError(f"Mask shape {mask.shape} does not match image {img.estimate.shape}")
    if not mask.any():
        raise ValueError("Signal region is empty")
    if mask.all():
        raise ValueError("Background region is empty")
    if img.total_pairs == 0:
        return 0.0
    noise = float(np.std(img.estimate[~mask]))
    signal = float(np.mean(img.estimate[mask]))
    if noise == 0:
        return float("inf")
    return signal / noise
