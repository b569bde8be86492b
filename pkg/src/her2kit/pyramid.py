"""Tile pyramid generation and case manifests for the scoring service.

Layout on disk: ``{root}/{case_id}/{stain}/{z}/{x}_{y}.png`` plus one
``manifest.json`` per case.  Level 0 is full resolution and every level
halves dimensions until the image fits a single tile; edge tiles are
partial.  The service serves these files verbatim and never does image
math at request time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image

from .errors import FormatError

TILE_SIZE = 256


@dataclass(frozen=True)
class PyramidLevel:
    z: int
    width: int
    height: int
    tiles_x: int
    tiles_y: int


@dataclass(frozen=True)
class CaseManifest:
    case_id: str
    stains: tuple
    tile_size: int
    levels: tuple  # PyramidLevel, z ascending

    @property
    def depth(self) -> int:
        return len(self.levels)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "stains": list(self.stains),
            "tile_size": self.tile_size,
            "levels": [
                {
                    "z": lv.z,
                    "width": lv.width,
                    "height": lv.height,
                    "tiles_x": lv.tiles_x,
                    "tiles_y": lv.tiles_y,
                }
                for lv in self.levels
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CaseManifest":
        levels = tuple(
            PyramidLevel(lv["z"], lv["width"], lv["height"], lv["tiles_x"], lv["tiles_y"])
            for lv in data["levels"]
        )
        return cls(data["case_id"], tuple(data["stains"]), data["tile_size"], levels)


def _level_dims(width: int, height: int, tile_size: int) -> list[tuple[int, int]]:
    dims = [(width, height)]
    while max(dims[-1]) > tile_size:
        w, h = dims[-1]
        dims.append((max(1, w // 2), max(1, h // 2)))
    return dims


def build_case_pyramid(
    images: Mapping[str, np.ndarray],
    out_root,
    case_id: str,
    tile_size: int = TILE_SIZE,
) -> CaseManifest:
    """Write the tile pyramid for one case from per-stain full-resolution
    images (all stains must share dimensions)."""
    if not images:
        raise FormatError("case needs at least one stain image")
    shapes = {img.shape[:2] for img in images.values()}
    if len(shapes) != 1:
        raise FormatError("all stains of a case must share dimensions")
    h, w = shapes.pop()
    dims = _level_dims(w, h, tile_size)
    case_dir = Path(out_root) / case_id
    levels = []
    for z, (lw, lh) in enumerate(dims):
        tiles_x = (lw + tile_size - 1) // tile_size
        tiles_y = (lh + tile_size - 1) // tile_size
        levels.append(PyramidLevel(z, lw, lh, tiles_x, tiles_y))
    for stain, image in images.items():
        pil = Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB")
        for z, (lw, lh) in enumerate(dims):
            scaled = pil if z == 0 else pil.resize((lw, lh), Image.LANCZOS)
            level_dir = case_dir / stain / str(z)
            level_dir.mkdir(parents=True, exist_ok=True)
            for ty in range(levels[z].tiles_y):
                for tx in range(levels[z].tiles_x):
                    box = (
                        tx * tile_size,
                        ty * tile_size,
                        min((tx + 1) * tile_size, lw),
                        min((ty + 1) * tile_size, lh),
                    )
                    scaled.crop(box).save(level_dir / f"{tx}_{ty}.png")
    manifest = CaseManifest(case_id, tuple(sorted(images)), tile_size, tuple(levels))
    (case_dir / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=1))
    return manifest


def mosaic(tiles) -> np.ndarray:
    """Row mosaic of equally sized tile images (multi-tile cases become a
    single slide image)."""
    arrays = [np.asarray(t) for t in tiles]
    if len(arrays) == 1:
        return arrays[0]
    return np.concatenate(arrays, axis=1)


def load_manifests(tile_root) -> list[CaseManifest]:
    root = Path(tile_root)
    if not root.is_dir():
        raise FormatError(f"tile root {root} is not a directory")
    manifests = []
    for path in sorted(root.glob("*/manifest.json")):
        manifests.append(CaseManifest.from_dict(json.loads(path.read_text())))
    return manifests


def tile_path(tile_root, case_id: str, stain: str, z: int, x: int, y: int) -> Path:
    return Path(tile_root) / case_id / stain / str(z) / f"{x}_{y}.png"
