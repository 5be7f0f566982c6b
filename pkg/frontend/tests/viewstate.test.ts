import { describe, expect, it } from "vitest";

import {
  applyPan,
  applyZoomGesture,
  clampZoom,
  initialState,
  spearman,
  tileDistance,
  tileGrid,
  visibleTiles,
} from "../src/viewstate.js";

const viewport = { width: 400, height: 300 };
const image = { width: 640, height: 480 };

describe("clampZoom", () => {
  it("clamps into [1, 5]", () => {
    expect(clampZoom(0.3)).toBe(1);
    expect(clampZoom(9)).toBe(5);
    expect(clampZoom(2.5)).toBe(2.5);
  });
});

describe("applyZoomGesture", () => {
  it("keeps the anchored image point fixed on screen", () => {
    const state = initialState(image);
    const anchor = { x: 100, y: 80 };
    const imgX = state.centerX + (anchor.x - viewport.width / 2) / state.zoom;
    const imgY = state.centerY + (anchor.y - viewport.height / 2) / state.zoom;
    const next = applyZoomGesture(state, viewport, anchor.x, anchor.y, 2.0);
    const backX = next.centerX + (anchor.x - viewport.width / 2) / next.zoom;
    const backY = next.centerY + (anchor.y - viewport.height / 2) / next.zoom;
    expect(backX).toBeCloseTo(imgX, 10);
    expect(backY).toBeCloseTo(imgY, 10);
    expect(next.zoom).toBe(2.0);
  });

  it("saturates at max zoom without moving the center", () => {
    let state = { centerX: 10, centerY: 10, zoom: 5.0 };
    const next = applyZoomGesture(state, viewport, 0, 0, 3.0);
    expect(next).toEqual(state);
  });
});

describe("applyPan", () => {
  it("moves the center against the drag, scaled by zoom", () => {
    const state = { centerX: 100, centerY: 100, zoom: 2.0 };
    const next = applyPan(state, 40, -20);
    expect(next.centerX).toBe(80);
    expect(next.centerY).toBe(110);
  });
});

describe("tileGrid / visibleTiles", () => {
  it("builds a row-major grid with remainders", () => {
    const tiles = tileGrid({ width: 300, height: 300 }, 256);
    expect(tiles.map((t) => [t.x, t.y])).toEqual(
      [[0, 0], [1, 0], [0, 1], [1, 1]]);
    expect(tiles[3].index).toBe(3);
  });

  it("finds only tiles intersecting the viewport", () => {
    const state = { centerX: 50, centerY: 50, zoom: 4.0 };
    // viewport covers 100x75 image pixels around (50,50)
    const tiles = visibleTiles(state, viewport, image, 64);
    expect(tiles.map((t) => t.index).sort((a, b) => a - b))
      .toEqual([0, 1, 10, 11]);
  });

  it("covers everything at zoom 1 on a small image", () => {
    const state = initialState({ width: 128, height: 128 });
    const tiles = visibleTiles(state, viewport,
      { width: 128, height: 128 }, 64);
    expect(tiles).toHaveLength(4);
  });
});

describe("tileDistance", () => {
  it("measures center-to-focus distance with partial edge tiles", () => {
    const img = { width: 100, height: 100 };
    const d = tileDistance({ x: 1, y: 1, index: 3 }, img, 64, 0, 0);
    // last tile is 36x36, centered at (82, 82)
    expect(d).toBeCloseTo(Math.hypot(82, 82), 10);
  });
});

describe("spearman", () => {
  it("is 1 for identical rankings and -1 for reversed", () => {
    expect(spearman([1, 2, 3, 4], [10, 20, 30, 40])).toBeCloseTo(1, 12);
    expect(spearman([1, 2, 3, 4], [9, 7, 5, 3])).toBeCloseTo(-1, 12);
  });

  it("handles ties via midranks", () => {
    const rho = spearman([1, 2, 2, 3], [1, 2, 3, 4]);
    expect(rho).toBeGreaterThan(0.9);
    expect(rho).toBeLessThan(1);
  });

  it("rejects mismatched lengths", () => {
    expect(() => spearman([1], [1, 2])).toThrow();
  });
});
