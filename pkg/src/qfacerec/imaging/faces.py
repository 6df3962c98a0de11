"""Synthetic desk corpus of cartoon faces."""

import logging
from pathlib import Path
from typing import List

import numpy as np
from PIL import Image, ImageDraw

from .ghost import TRUTH, FaceImage
from .pgm import save_face

logger = logging.getLogger(__name__)

SUPERSAMPLE = 4


def _draw_face(rng: np.random.Generator, side: int) -> np.ndarray:
    size = side * SUPERSAMPLE
    img = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(img)

    def box(cx, cy, rx, ry):
        return [size * (cx - rx), size * (cy - ry), size * (cx + rx), size * (cy + ry)]

    head_rx, head_ry = rng.uniform(0.30, 0.44), rng.uniform(0.38, 0.47)
    skin = int(rng.uniform(150, 230))
    draw.ellipse(box(0.5, 0.5, head_rx, head_ry), fill=skin)

    eye_y = rng.uniform(0.36, 0.46)
    eye_dx = rng.uniform(0.10, 0.18)
    eye_r = rng.uniform(0.035, 0.07)
    for sign in (-1, 1):
        draw.ellipse(box(0.5 + sign * eye_dx, eye_y, eye_r, eye_r * rng.uniform(0.6, 1.0)), fill=255)
        brow_y = eye_y - rng.uniform(0.07, 0.11)
        draw.line(
            [size * (0.5 + sign * eye_dx - 0.07), size * brow_y, size * (0.5 + sign * eye_dx + 0.07), size * (brow_y + sign * rng.uniform(-0.03, 0.03))],
            fill=40,
            width=max(1, int(size * rng.uniform(0.02, 0.04))),
        )

    nose_len = rng.uniform(0.08, 0.16)
    draw.polygon(
        [
            (size * 0.5, size * (eye_y + 0.03)),
            (size * (0.5 - rng.uniform(0.03, 0.06)), size * (eye_y + nose_len)),
            (size * (0.5 + rng.uniform(0.03, 0.06)), size * (eye_y + nose_len)),
        ],
        fill=int(skin * 0.7),
    )

    mouth_y = rng.uniform(0.66, 0.76)
    mouth_w = rng.uniform(0.10, 0.20)
    draw.chord(box(0.5, mouth_y, mouth_w, rng.uniform(0.03, 0.07)), 0, 180, fill=60)

    small = img.resize((side, side), Image.BOX)
    return np.asarray(small, dtype=float) / 255.0


def synthetic_corpus(count: int, side: int = 16, seed: int = 0) -> List[FaceImage]:
    """`count` distinct identities, deterministic for (count, side, seed)."""
    if count < 1 or side < 2:
        raise ValueError(f"Need count >= 1 and side >= 2, got {count}, {side}")
    faces = []
    for identity in range(count):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(identity,))))
        faces.append(FaceImage(pixels=_draw_face(rng, side), name=f"face_{identity:02d}", provenance=TRUTH))
    logger.debug(f"Generated {count} synthetic {side}x{side} faces (seed {seed})")
    return faces


def write_corpus(directory: Path, count: int, side: int = 16, seed: int = 0) -> List[Path]:
    """Write a synthetic corpus as PGM files with sidecars."""
    directory = Path(directory)
    return [save_face(face, directory / f"{face.name}.pgm", {"seed": seed}) for face in synthetic_corpus(count, side, seed)]
