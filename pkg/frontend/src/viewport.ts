/** Pan/zoom geometry over the tile pyramid.
 *
 * Level 0 is full resolution and each level halves dimensions.  A
 * viewport tracks its center in level-0 coordinates plus the active
 * level; on screen, one level-z pixel maps to one CSS pixel, so the
 * viewport covers viewSize * 2^z level-0 pixels.
 */

import { CaseManifest, PyramidLevel } from './types.js';

export interface Viewport {
  centerX: number; // level-0 coordinates
  centerY: number;
  level: number;
}

export interface ViewSize {
  width: number;
  height: number;
}

export interface TileRef {
  z: number;
  x: number;
  y: number;
  /** CSS position of the tile's top-left corner inside the view. */
  left: number;
  top: number;
}

function levelOf(manifest: CaseManifest, z: number): PyramidLevel {
  const clamped = Math.min(Math.max(z, 0), manifest.levels.length - 1);
  return manifest.levels[clamped];
}

export function initialViewport(manifest: CaseManifest): Viewport {
  const level0 = manifest.levels[0];
  return {
    centerX: level0.width / 2,
    centerY: level0.height / 2,
    level: manifest.levels.length - 1, // start fully zoomed out
  };
}

/** Keep the viewport center inside the image (image smaller than the
 * view at this level pins to the image center). */
export function clampViewport(vp: Viewport, view: ViewSize, manifest: CaseManifest): Viewport {
  const level = Math.min(Math.max(vp.level, 0), manifest.levels.length - 1);
  const scale = 2 ** level;
  const level0 = manifest.levels[0];
  const halfW = (view.width * scale) / 2;
  const halfH = (view.height * scale) / 2;

  const clampAxis = (center: number, extent: number, half: number): number => {
    if (extent <= 2 * half) return extent / 2;
    return Math.min(Math.max(center, half), extent - half);
  };

  return {
    centerX: clampAxis(vp.centerX, level0.width, halfW),
    centerY: clampAxis(vp.centerY, level0.height, halfH),
    level,
  };
}

/** Pan by a screen-pixel delta (drag direction: content follows the pointer). */
export function pan(vp: Viewport, dxPx: number, dyPx: number, view: ViewSize, manifest: CaseManifest): Viewport {
  const scale = 2 ** vp.level;
  return clampViewport(
    { centerX: vp.centerX - dxPx * scale, centerY: vp.centerY - dyPx * scale, level: vp.level },
    view,
    manifest,
  );
}

export function zoomTo(vp: Viewport, level: number, view: ViewSize, manifest: CaseManifest): Viewport {
  return clampViewport({ ...vp, level }, view, manifest);
}

/** Tiles intersecting the viewport at its active level, with their CSS
 * placement relative to the view's top-left corner. */
export function visibleTiles(vp: Viewport, view: ViewSize, manifest: CaseManifest): TileRef[] {
  const clamped = clampViewport(vp, view, manifest);
  const level = levelOf(manifest, clamped.level);
  const scale = 2 ** clamped.level;
  const tile = manifest.tile_size;
  const cx = clamped.centerX / scale;
  const cy = clamped.centerY / scale;
  const left = cx - view.width / 2;
  const top = cy - view.height / 2;
  const right = left + view.width;
  const bottom = top + view.height;

  const x0 = Math.max(0, Math.floor(left / tile));
  const x1 = Math.min(level.tiles_x - 1, Math.floor((right - 1e-9) / tile));
  const y0 = Math.max(0, Math.floor(top / tile));
  const y1 = Math.min(level.tiles_y - 1, Math.floor((bottom - 1e-9) / tile));

  const tiles: TileRef[] = [];
  for (let y = y0; y <= y1; y++) {
    for (let x = x0; x <= x1; x++) {
      tiles.push({ z: clamped.level, x, y, left: x * tile - left, top: y * tile - top });
    }
  }
  return tiles;
}

export type ViewportListener = (vp: Viewport) => void;

/** One shared viewport driving any number of side-by-side panels, so
 * every gesture keeps them showing the same region. */
export class SyncedViewports {
  private vp: Viewport;
  private listeners: ViewportListener[] = [];

  constructor(
    private manifest: CaseManifest,
    private view: ViewSize,
  ) {
    this.vp = clampViewport(initialViewport(manifest), view, manifest);
  }

  get viewport(): Viewport {
    return { ...this.vp };
  }

  onChange(listener: ViewportListener): void {
    this.listeners.push(listener);
  }

  private apply(next: Viewport): void {
    this.vp = next;
    for (const listener of this.listeners) listener(this.viewport);
  }

  pan(dxPx: number, dyPx: number): void {
    this.apply(pan(this.vp, dxPx, dyPx, this.view, this.manifest));
  }

  zoomTo(level: number): void {
    this.apply(zoomTo(this.vp, level, this.view, this.manifest));
  }

  zoomIn(): void {
    this.zoomTo(this.vp.level - 1);
  }

  zoomOut(): void {
    this.zoomTo(this.vp.level + 1);
  }

  tiles(): TileRef[] {
    return visibleTiles(this.vp, this.view, this.manifest);
  }
}
