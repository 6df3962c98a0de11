"""8-bit binary PGM (P5) input and output."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..core.errors import ImageReadError
from .ghost import TRUTH, FaceImage

logger = logging.getLogger(__name__)

PGM_SUFFIXES = {".pgm", ".pnm"}


def load_pgm(path: Path, side: Optional[int] = None) -> FaceImage:
    """Read a grayscale image as a FaceImage with values in [0, 1].

    Args:
        path: image file
        side: resample to side×side when given and the size differs
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            gray = img.convert("L")
            if side is not None and gray.size != (side, side):
                logger.debug(f"Resampling {path.name} from {gray.size} to {side}x{side}")
                gray = gray.resize((side, side), Image.BILINEAR)
            pixels = np.asarray(gray, dtype=float) / 255.0
    except (OSError, UnidentifiedImageError) as e:
        raise ImageReadError(f"Cannot read image {path}: {e}") from e
    return FaceImage(pixels=pixels, name=path.stem, provenance=TRUTH, metadata={"path": str(path)})


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(pixels, 0.0, 1.0) * 255).astype(np.uint8)


def save_pgm(pixels: np.ndarray, path: Path) -> Path:
    """Write a raster as P5. Float input is taken as [0, 1], uint8 as-is."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = pixels if pixels.dtype == np.uint8 else to_uint8(pixels)
    Image.fromarray(data, mode="L").save(path, format="PPM")
    return path


def save_face(image: FaceImage, path: Path, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """Write the raster plus a JSON sidecar next to it."""
    path = save_pgm(image.pixels, path)
    sidecar = dict(image.metadata)
    sidecar.update(metadata or {})
    sidecar.update({"name": image.name, "provenance": image.provenance, "side": image.side})
    write_sidecar(path, sidecar)
    return path


def write_sidecar(path: Path, metadata: Dict[str, Any]) -> Path:
    sidecar = Path(path).with_suffix(".json")
    with open(sidecar, "w") as f:
        json.dump(metadata, f, indent=2, sort_keys=True)
    return sidecar


def list_images(directory: Path) -> List[Path]:
    """PGM files in a directory, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ImageReadError(f"Image directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in PGM_SUFFIXES and p.is_file())
