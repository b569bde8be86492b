/** DOM tile viewer: one panel per stain, driven by a shared synced
 * viewport so side-by-side panels always show the same region. */

import { ApiClient } from './api.js';
import { CaseManifest } from './types.js';
import { SyncedViewports, TileRef, ViewSize } from './viewport.js';

const RETRY_DELAY_MS = 1500;

export class TilePanel {
  readonly element: HTMLElement;
  private layer: HTMLElement;

  constructor(
    private api: ApiClient,
    private manifest: CaseManifest,
    private stain: string,
    private sync: SyncedViewports,
    private view: ViewSize,
  ) {
    this.element = document.createElement('div');
    this.element.className = 'tile-panel';
    this.element.style.width = `${view.width}px`;
    this.element.style.height = `${view.height}px`;
    const label = document.createElement('div');
    label.className = 'stain-label';
    label.textContent = stain.toUpperCase();
    this.layer = document.createElement('div');
    this.layer.className = 'tile-layer';
    this.element.append(this.layer, label);
    this.bindGestures();
    this.sync.onChange(() => this.render());
    this.render();
  }

  private bindGestures(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.element.addEventListener('pointerdown', (ev) => {
      dragging = true;
      lastX = ev.clientX;
      lastY = ev.clientY;
      this.element.setPointerCapture(ev.pointerId);
    });
    this.element.addEventListener('pointermove', (ev) => {
      if (!dragging) return;
      this.sync.pan(ev.clientX - lastX, ev.clientY - lastY);
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    this.element.addEventListener('pointerup', () => {
      dragging = false;
    });
    this.element.addEventListener('wheel', (ev) => {
      ev.preventDefault();
      if (ev.deltaY < 0) this.sync.zoomIn();
      else this.sync.zoomOut();
    });
  }

  private tileKey(tile: TileRef): string {
    return `${tile.z}/${tile.x}/${tile.y}`;
  }

  render(): void {
    const wanted = this.sync.tiles();
    const keep = new Set(wanted.map((t) => this.tileKey(t)));
    for (const child of Array.from(this.layer.children) as HTMLElement[]) {
      if (!keep.has(child.dataset.key ?? '')) child.remove();
    }
    const existing = new Map(
      (Array.from(this.layer.children) as HTMLElement[]).map((el) => [el.dataset.key, el]),
    );
    for (const tile of wanted) {
      const key = this.tileKey(tile);
      let img = existing.get(key) as HTMLImageElement | undefined;
      if (!img) {
        img = document.createElement('img');
        img.dataset.key = key;
        img.className = 'tile';
        img.draggable = false;
        img.src = this.api.tileUrl(this.manifest.case_id, this.stain, tile.z, tile.x, tile.y);
        img.addEventListener('error', () => {
          // placeholder look, then retry the fetch once the server catches up
          img!.classList.add('tile-error');
          setTimeout(() => {
            img!.classList.remove('tile-error');
            img!.src = `${img!.src.split('?')[0]}?retry=${Date.now()}`;
          }, RETRY_DELAY_MS);
        });
        this.layer.appendChild(img);
      }
      img.style.left = `${tile.left}px`;
      img.style.top = `${tile.top}px`;
    }
  }
}

/** Side-by-side viewer over every available stain of a case. */
export class CaseViewer {
  readonly element: HTMLElement;
  readonly sync: SyncedViewports;

  constructor(api: ApiClient, manifest: CaseManifest, view: ViewSize) {
    this.sync = new SyncedViewports(manifest, view);
    this.element = document.createElement('div');
    this.element.className = 'case-viewer';
    for (const stain of manifest.stains) {
      this.element.appendChild(new TilePanel(api, manifest, stain, this.sync, view).element);
    }
    const controls = document.createElement('div');
    controls.className = 'zoom-controls';
    const zoomIn = document.createElement('button');
    zoomIn.textContent = '+';
    zoomIn.addEventListener('click', () => this.sync.zoomIn());
    const zoomOut = document.createElement('button');
    zoomOut.textContent = '−';
    zoomOut.addEventListener('click', () => this.sync.zoomOut());
    controls.append(zoomIn, zoomOut);
    this.element.appendChild(controls);
  }
}
