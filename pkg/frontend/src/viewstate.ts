/** Pure view-state math for the zoom viewer: clamping, gestures, and
 * the tile grid visible through the viewport. Kept DOM-free so it is
 * unit-testable under node. */

export const MIN_ZOOM = 1.0;
export const MAX_ZOOM = 5.0;

export interface ViewState {
  /** image-space coordinates of the viewport center */
  centerX: number;
  centerY: number;
  zoom: number;
}

export interface Viewport {
  width: number;
  height: number;
}

export interface ImageSize {
  width: number;
  height: number;
}

export function clampZoom(zoom: number): number {
  return Math.min(Math.max(zoom, MIN_ZOOM), MAX_ZOOM);
}

export function initialState(image: ImageSize): ViewState {
  return { centerX: image.width / 2, centerY: image.height / 2, zoom: 1.0 };
}

/** Apply a pinch/wheel gesture anchored at a viewport point: the image
 * point under the cursor stays under the cursor. */
export function applyZoomGesture(state: ViewState, viewport: Viewport,
                                 anchorX: number, anchorY: number,
                                 factor: number): ViewState {
  const nextZoom = clampZoom(state.zoom * factor);
  const scale = nextZoom / state.zoom;
  if (scale === 1) {
    return { ...state, zoom: nextZoom };
  }
  // image point under the anchor before the gesture
  const imgX = state.centerX + (anchorX - viewport.width / 2) / state.zoom;
  const imgY = state.centerY + (anchorY - viewport.height / 2) / state.zoom;
  return {
    zoom: nextZoom,
    centerX: imgX - (anchorX - viewport.width / 2) / nextZoom,
    centerY: imgY - (anchorY - viewport.height / 2) / nextZoom,
  };
}

export function applyPan(state: ViewState, dxPixels: number,
                         dyPixels: number): ViewState {
  return {
    ...state,
    centerX: state.centerX - dxPixels / state.zoom,
    centerY: state.centerY - dyPixels / state.zoom,
  };
}

/** Focus point of the current gesture in image coordinates; this is
 * what the server prioritizes tiles around. */
export function focusPoint(state: ViewState): { x: number; y: number } {
  return { x: state.centerX, y: state.centerY };
}

export interface GridTile {
  x: number; // column in the tile grid
  y: number; // row
  index: number; // row-major index
}

export function tileGrid(image: ImageSize, tileSize: number): GridTile[] {
  const cols = Math.ceil(image.width / tileSize);
  const rows = Math.ceil(image.height / tileSize);
  const tiles: GridTile[] = [];
  for (let y = 0; y < rows; y++) {
    for (let x = 0; x < cols; x++) {
      tiles.push({ x, y, index: y * cols + x });
    }
  }
  return tiles;
}

/** Tiles whose image-space rectangle intersects the viewport. */
export function visibleTiles(state: ViewState, viewport: Viewport,
                             image: ImageSize, tileSize: number): GridTile[] {
  const halfW = viewport.width / 2 / state.zoom;
  const halfH = viewport.height / 2 / state.zoom;
  const x0 = state.centerX - halfW;
  const x1 = state.centerX + halfW;
  const y0 = state.centerY - halfH;
  const y1 = state.centerY + halfH;
  return tileGrid(image, tileSize).filter((t) => {
    const tx0 = t.x * tileSize;
    const ty0 = t.y * tileSize;
    const tx1 = Math.min(tx0 + tileSize, image.width);
    const ty1 = Math.min(ty0 + tileSize, image.height);
    return tx1 > x0 && tx0 < x1 && ty1 > y0 && ty0 < y1;
  });
}

/** Euclidean distance from a tile's center to the focus, mirroring the
 * server's scheduling priority. */
export function tileDistance(t: GridTile, image: ImageSize, tileSize: number,
                             focusX: number, focusY: number): number {
  const w = Math.min(tileSize, image.width - t.x * tileSize);
  const h = Math.min(tileSize, image.height - t.y * tileSize);
  const cx = t.x * tileSize + w / 2;
  const cy = t.y * tileSize + h / 2;
  return Math.hypot(cx - focusX, cy - focusY);
}

/** Spearman rank correlation between two equal-length sequences. */
export function spearman(a: number[], b: number[]): number {
  if (a.length !== b.length || a.length < 2) {
    throw new Error("spearman needs two equal-length sequences");
  }
  const rank = (xs: number[]): number[] => {
    const order = xs.map((v, i) => [v, i] as const)
      .sort((p, q) => p[0] - q[0]);
    const ranks = new Array(xs.length).fill(0);
    let i = 0;
    while (i < order.length) {
      let j = i;
      while (j + 1 < order.length && order[j + 1][0] === order[i][0]) j++;
      const mean = (i + j) / 2 + 1;
      for (let k = i; k <= j; k++) ranks[order[k][1]] = mean;
      i = j + 1;
    }
    return ranks;
  };
  const ra = rank(a);
  const rb = rank(b);
  const mean = (xs: number[]) => xs.reduce((s, v) => s + v, 0) / xs.length;
  const ma = mean(ra);
  const mb = mean(rb);
  let num = 0;
  let va = 0;
  let vb = 0;
  for (let k = 0; k < ra.length; k++) {
    num += (ra[k] - ma) * (rb[k] - mb);
    va += (ra[k] - ma) ** 2;
    vb += (rb[k] - mb) ** 2;
  }
  return num / Math.sqrt(va * vb);
}
