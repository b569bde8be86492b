"""8-bit RGB image I/O (PNG and plain TIFF)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import FormatError

_SUPPORTED = {".png", ".tif", ".tiff"}


def load_image(path) -> np.ndarray:
    """Read a PNG/TIFF file as an (H, W, 3) uint8 array."""
    path = Path(path)
    if path.suffix.lower() not in _SUPPORTED:
        raise FormatError(f"unsupported image format {path.suffix!r} (PNG/TIFF only)")
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_image(path, image: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as PNG/TIFF."""
    path = Path(path)
    if path.suffix.lower() not in _SUPPORTED:
        raise FormatError(f"unsupported image format {path.suffix!r} (PNG/TIFF only)")
    arr = np.asarray(image)
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
        raise FormatError("image must be (H, W, 3) uint8")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="RGB").save(path)
