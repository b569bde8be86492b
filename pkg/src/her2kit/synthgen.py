"""Deterministic synthetic IHC tile and case generator.

Cells are rendered as a hematoxylin nucleus disk plus a DAB membrane ring
arc covering an angular fraction ``membrane_completeness`` of the ring;
pixel color follows Beer-Lambert mixing through the shared default stain
model, so unmixing a generated tile has known ground truth.  Geometry is
integer-only and every random draw happens in a fixed order, making
output byte-identical for identical specs across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import PackingError
from .evalcore import FishStatus, GroundTruthRecord, Her2Score
from .imgproc import save_image
from .imgproc.stain import DEFAULT_STAIN_MODEL
from .ingest import GroundTruthFile, render_ground_truth

#: DAB concentration at stain_intensity = 1.
DAB_CONC_MAX = 1.2
#: Hematoxylin concentration inside nuclei.
NUCLEUS_CONC = 0.9


@dataclass(frozen=True)
class TileSpec:
    """Parameters of one synthetic tile; identical specs render
    byte-identical tiles."""

    width: int = 900
    height: int = 600
    cell_count: int = 650
    membrane_completeness: float = 1.0  # angular fraction of the ring
    stain_intensity: float = 0.9
    noise_sigma: float = 0.0  # gray levels, added post-quantization
    seed: int = 0
    stained_cell_fraction: float = 1.0
    nucleus_radius: int = 6
    ring_radius: int = 8
    ring_thickness: int = 2
    intensity_jitter: float = 0.05
    # Faint hematoxylin wash standing in for stroma/cytoplasm, so tissue
    # area does not register as blank glass under background rules.
    tissue_wash: float = 0.12

    def __post_init__(self):
        if not 0.0 <= self.membrane_completeness <= 1.0:
            raise ValueError("membrane_completeness must be in [0, 1]")
        if not 0.0 <= self.stain_intensity <= 1.0:
            raise ValueError("stain_intensity must be in [0, 1]")
        if not 0.0 <= self.stained_cell_fraction <= 1.0:
            raise ValueError("stained_cell_fraction must be in [0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if min(self.width, self.height, self.cell_count) < 1:
            raise ValueError("width, height and cell_count must be positive")


@dataclass(frozen=True)
class CellAnnotation:
    cx: int
    cy: int
    nucleus_radius: int
    ring_radius: int
    ring_thickness: int
    completeness: float  # 0 for unstained cells
    arc_start_deg: float
    intensity: float


def _outer_radius(spec: TileSpec) -> int:
    return int(np.ceil(spec.ring_radius + spec.ring_thickness / 2.0))


def _place_cells(spec: TileSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Non-overlapping integer centers by rejection sampling with a
    grid-bucket occupancy check and a fixed iteration cap."""
    outer = _outer_radius(spec)
    margin = outer + 1
    if spec.width - 2 * margin < 1 or spec.height - 2 * margin < 1:
        raise PackingError("tile too small for the cell geometry")
    min_dist = 2 * outer + 1
    bucket = min_dist
    grid: dict[tuple[int, int], list[tuple[int, int]]] = {}
    centers: list[tuple[int, int]] = []
    budget = 200 * spec.cell_count
    attempts = 0
    while len(centers) < spec.cell_count:
        if attempts >= budget:
            raise PackingError(
                f"placed only {len(centers)} of {spec.cell_count} cells within the cap"
            )
        attempts += 1
        cx = int(rng.integers(margin, spec.width - margin))
        cy = int(rng.integers(margin, spec.height - margin))
        bx, by = cx // bucket, cy // bucket
        ok = True
        for nx in range(bx - 1, bx + 2):
            for ny in range(by - 1, by + 2):
                for ox, oy in grid.get((nx, ny), ()):
                    if (ox - cx) ** 2 + (oy - cy) ** 2 < min_dist**2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            centers.append((cx, cy))
            grid.setdefault((bx, by), []).append((cx, cy))
    return centers


def _tile_fields(spec: TileSpec):
    """Concentration maps plus per-cell annotations (deterministic)."""
    rng = np.random.default_rng(spec.seed)
    centers = _place_cells(spec, rng)
    n = len(centers)
    stained = rng.random(n) < spec.stained_cell_fraction
    arc_starts = rng.uniform(0.0, 360.0, size=n)
    # per-cell staining heterogeneity: uniform spread around the class
    # intensity (weak staining is markedly uneven in practice)
    jitter = rng.uniform(-1.0, 1.0, size=n)
    intensities = np.clip(
        spec.stain_intensity * (1.0 + spec.intensity_jitter * jitter), 0.0, 1.0
    )

    hema = np.full((spec.height, spec.width), spec.tissue_wash)
    dab = np.zeros((spec.height, spec.width))
    outer = _outer_radius(spec)
    span = np.arange(-outer, outer + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    radius = np.hypot(dy, dx)
    theta = np.degrees(np.arctan2(dy, dx)) % 360.0
    nucleus_mask = radius <= spec.nucleus_radius
    ring_band = np.abs(radius - spec.ring_radius) <= spec.ring_thickness / 2.0

    annotations = []
    p = spec.membrane_completeness
    for i, (cx, cy) in enumerate(centers):
        ys = slice(cy - outer, cy + outer + 1)
        xs = slice(cx - outer, cx + outer + 1)
        hema[ys, xs][nucleus_mask] = NUCLEUS_CONC
        cell_p = p if stained[i] else 0.0
        if cell_p > 0.0 and intensities[i] > 0.0:
            rel = (theta - arc_starts[i]) % 360.0
            arc = ring_band & (rel < cell_p * 360.0)
            dab[ys, xs][arc] = intensities[i] * DAB_CONC_MAX
            # dense membrane chromogen displaces the faint cytoplasm wash
            hema[ys, xs][arc] = 0.0
        annotations.append(
            CellAnnotation(
                cx,
                cy,
                spec.nucleus_radius,
                spec.ring_radius,
                spec.ring_thickness,
                cell_p,
                float(arc_starts[i]),
                float(intensities[i]) if cell_p > 0 else 0.0,
            )
        )
    return hema, dab, annotations, rng


def tile_concentration_fields(spec: TileSpec):
    """Exact per-pixel (hematoxylin, dab) concentrations of a tile."""
    hema, dab, _, _ = _tile_fields(spec)
    return hema, dab


def render_rgb_float(hema: np.ndarray, dab: np.ndarray, model=DEFAULT_STAIN_MODEL) -> np.ndarray:
    """Beer-Lambert rendering without quantization (float RGB)."""
    od = hema[..., None] * model.hematoxylin + dab[..., None] * model.dab
    return model.background * np.power(10.0, -od)


def generate_tile(spec: TileSpec, model=DEFAULT_STAIN_MODEL):
    """Render one tile; returns (uint8 RGB image, cell annotations)."""
    hema, dab, annotations, rng = _tile_fields(spec)
    rgb = np.rint(render_rgb_float(hema, dab, model))
    if spec.noise_sigma > 0:
        rgb = rgb + rng.normal(0.0, spec.noise_sigma, size=rgb.shape)
    image = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
    return image, annotations


@dataclass(frozen=True)
class ClassParams:
    """Per-score rendering parameters for case generation."""

    stained_fraction: tuple  # (lo, hi), drawn per case
    completeness: float
    intensity: float
    ring_thickness: int
    intensity_jitter: float = 0.1


DEFAULT_CLASS_PARAMS = {
    Her2Score.ZERO: ClassParams((0.0, 0.0), 0.0, 0.0, 2, 0.0),
    # faint staining is heterogeneous: wide spread gives smoothly
    # decaying characteristics curves instead of a step
    Her2Score.ONE_PLUS: ClassParams((0.55, 0.75), 0.7, 0.2, 2, 0.6),
    Her2Score.TWO_PLUS: ClassParams((0.45, 0.70), 1.0, 0.5, 2, 0.16),
    Her2Score.THREE_PLUS: ClassParams((0.75, 0.98), 1.0, 0.9, 3, 0.1),
}


@dataclass(frozen=True)
class SyntheticCase:
    case_id: str
    score: Her2Score
    tiles: tuple  # ((image, annotations), ...)
    gt: GroundTruthRecord


def _derive_seed(*parts) -> int:
    state = np.random.SeedSequence(parts).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def generate_case(
    score: Her2Score,
    tile_count: int = 1,
    seed: int = 0,
    case_id: Optional[str] = None,
    width: int = 900,
    height: int = 600,
    cell_count: int = 650,
    noise_sigma: float = 2.0,
    params: Optional[dict] = None,
) -> SyntheticCase:
    """Generate one synthetic case; gt.pcms is derived from the actually
    rendered cells (fraction of cells with a complete ring, x100)."""
    score = Her2Score(score)
    table = params or DEFAULT_CLASS_PARAMS
    cp = table[score]
    case_rng = np.random.default_rng(_derive_seed(seed, 101))
    frac = float(case_rng.uniform(*cp.stained_fraction)) if cp.stained_fraction[1] > 0 else 0.0
    tiles = []
    complete = 0
    total = 0
    for i in range(tile_count):
        spec = TileSpec(
            width=width,
            height=height,
            cell_count=cell_count,
            membrane_completeness=cp.completeness,
            stain_intensity=cp.intensity,
            noise_sigma=noise_sigma,
            seed=_derive_seed(seed, i),
            stained_cell_fraction=frac,
            ring_thickness=cp.ring_thickness,
            intensity_jitter=cp.intensity_jitter,
        )
        image, annotations = generate_tile(spec)
        tiles.append((image, tuple(annotations)))
        complete += sum(1 for a in annotations if a.completeness == 1.0)
        total += len(annotations)
    pcms = 100.0 * complete / total if total else 0.0
    cid = case_id if case_id is not None else f"case_{seed}"
    gt = GroundTruthRecord(cid, score, pcms, FishStatus.NOT_PERFORMED)
    return SyntheticCase(cid, score, tuple(tiles), gt)


def generate_dataset(
    per_class: int,
    seed: int = 0,
    tile_count: int = 1,
    **case_kwargs,
) -> list[SyntheticCase]:
    """Balanced synthetic case set (4 * per_class cases, round-robin)."""
    cases = []
    index = 0
    for _ in range(per_class):
        for score in Her2Score:
            case_id = f"case_{index + 1:04d}"
            cases.append(
                generate_case(
                    score,
                    tile_count=tile_count,
                    seed=_derive_seed(seed, index),
                    case_id=case_id,
                    **case_kwargs,
                )
            )
            index += 1
    return cases


_ANNOTATION_HEADER = (
    "tile,cell,cx,cy,nucleus_radius,ring_radius,ring_thickness,"
    "completeness,arc_start_deg,intensity"
)


def write_dataset(cases, out_dir) -> Path:
    """Write ``case_<id>/ihc/tile_<n>.png`` plus per-case annotations and
    a dataset-level ``gt.csv`` in ingest format."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for case in cases:
        case_dir = out / case.case_id
        (case_dir / "ihc").mkdir(parents=True, exist_ok=True)
        lines = [_ANNOTATION_HEADER]
        for t, (image, annotations) in enumerate(case.tiles):
            save_image(case_dir / "ihc" / f"tile_{t}.png", image)
            for c, a in enumerate(annotations):
                lines.append(
                    f"{t},{c},{a.cx},{a.cy},{a.nucleus_radius},{a.ring_radius},"
                    f"{a.ring_thickness},{a.completeness},{a.arc_start_deg:.6f},"
                    f"{a.intensity:.6f}"
                )
        (case_dir / "annotations.csv").write_text("\n".join(lines) + "\n")
    gt = GroundTruthFile(tuple(case.gt for case in cases))
    (out / "gt.csv").write_text(render_ground_truth(gt))
    return out


def membrane_benchmark_spec(completeness: float, seed: int = 0, noise_sigma: float = 0.0) -> TileSpec:
    """Tile geometry sized for the morphological PCMS pathway: large rings
    whose filled-skeleton extent calibrates against the nucleus area, so
    the estimator reads out close to 100 x completeness."""
    return TileSpec(
        width=900,
        height=600,
        cell_count=30,
        membrane_completeness=completeness,
        stain_intensity=0.9,
        noise_sigma=noise_sigma,
        seed=seed,
        stained_cell_fraction=1.0,
        nucleus_radius=6,
        ring_radius=34,
        ring_thickness=2,
        intensity_jitter=0.0,
    )
