/** Canvas viewer: draws whatever tiles are cached, issues zoom
 * requests on gestures, and exposes an A/B method toggle plus a 1-7
 * rating control. All DOM access lives here; the math is in
 * viewstate.ts and the IO in api.ts/tiles.ts. */

import { ApiClient, ImageInfo, Method } from "./api.js";
import { TileStore } from "./tiles.js";
import {
  ViewState,
  applyPan,
  applyZoomGesture,
  clampZoom,
  focusPoint,
  initialState,
  visibleTiles,
} from "./viewstate.js";

export class Viewer {
  private state: ViewState;
  private method: Method = "splitsr";
  private store: TileStore;
  private bitmaps = new Map<string, ImageBitmap>();
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: ApiClient,
    private canvas: HTMLCanvasElement,
    private image: ImageInfo,
    private tileSize: number,
  ) {
    this.store = new TileStore(api);
    this.state = initialState(image);
    canvas.addEventListener("wheel", (e) => this.onWheel(e));
    this.installDrag();
  }

  get currentMethod(): Method {
    return this.method;
  }

  toggleMethod(): Method {
    this.method = this.method === "splitsr" ? "bilinear" : "splitsr";
    void this.refresh();
    return this.method;
  }

  async rate(score: number): Promise<void> {
    await this.api.submitRating(this.image.id, this.method, score);
  }

  private onWheel(e: WheelEvent): void {
    e.preventDefault();
    const factor = e.deltaY < 0 ? 1.25 : 0.8;
    const rect = this.canvas.getBoundingClientRect();
    this.state = applyZoomGesture(
      this.state,
      { width: this.canvas.width, height: this.canvas.height },
      e.clientX - rect.left,
      e.clientY - rect.top,
      factor,
    );
    void this.submitGesture();
  }

  private installDrag(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("pointerdown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      this.state = applyPan(this.state, e.clientX - lastX, e.clientY - lastY);
      lastX = e.clientX;
      lastY = e.clientY;
      void this.refresh();
    });
    this.canvas.addEventListener("pointerup", () => {
      dragging = false;
      void this.submitGesture();
    });
  }

  /** Tell the server where we are looking so it can schedule tiles
   * nearest the focus first, then start polling for completions. */
  private async submitGesture(): Promise<void> {
    const focus = focusPoint(this.state);
    const ack = await this.api.submitZoom(
      this.image.id, focus.x, focus.y, this.state.zoom);
    this.state = { ...this.state, zoom: clampZoom(ack.zoom) };
    if (this.pollTimer) clearInterval(this.pollTimer);
    this.pollTimer = setInterval(async () => {
      const progress = await this.api.getProgress(ack.request_id);
      await this.refresh();
      if (progress.done === progress.total && this.pollTimer) {
        clearInterval(this.pollTimer);
        this.pollTimer = null;
      }
    }, 120);
    await this.refresh();
  }

  private async refresh(): Promise<void> {
    const viewport = { width: this.canvas.width, height: this.canvas.height };
    const tiles = visibleTiles(this.state, viewport, this.image, this.tileSize);
    await Promise.all(tiles.map(async (t) => {
      const key = { imageId: this.image.id, x: t.x, y: t.y,
                    zoom: this.state.zoom, method: this.method };
      const id = `${t.index}:${this.state.zoom}:${this.method}`;
      if (!this.bitmaps.has(id)) {
        const blob = await this.store.get(key);
        this.bitmaps.set(id, await createImageBitmap(blob));
      }
    }));
    this.draw(tiles);
  }

  private draw(tiles: { x: number; y: number; index: number }[]): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    const z = this.state.zoom;
    for (const t of tiles) {
      const bmp = this.bitmaps.get(`${t.index}:${z}:${this.method}`);
      if (!bmp) continue;
      // scaled tile origin in output space, translated into the viewport
      const sx = Math.round(t.x * this.tileSize * z);
      const sy = Math.round(t.y * this.tileSize * z);
      const vx = sx - (this.state.centerX * z - this.canvas.width / 2);
      const vy = sy - (this.state.centerY * z - this.canvas.height / 2);
      ctx.drawImage(bmp, vx, vy);
    }
  }
}

export async function bootstrap(canvas: HTMLCanvasElement,
                                baseUrl: string,
                                tileSize = 256): Promise<Viewer> {
  const api = new ApiClient(baseUrl);
  const images = await api.listImages();
  if (images.length === 0) {
    throw new Error("service has no registered images");
  }
  return new Viewer(api, canvas, images[0], tileSize);
}
