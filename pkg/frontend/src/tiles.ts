/** Tile fetch layer with an in-memory cache keyed by the full request
 * identity (image, tile, zoom, method). Toggling the comparison method
 * changes only the method parameter of the URL. */

import { ApiClient, Method } from "./api.js";

export interface TileKey {
  imageId: string;
  x: number;
  y: number;
  zoom: number;
  method: Method;
}

export function keyString(k: TileKey): string {
  return `${k.imageId}/${k.x}/${k.y}/${k.zoom}/${k.method}`;
}

export class TileStore {
  private cache = new Map<string, Blob>();
  private inflight = new Map<string, Promise<Blob>>();

  constructor(private api: ApiClient) {}

  url(k: TileKey): string {
    return this.api.tileUrl(k.imageId, k.x, k.y, k.zoom, k.method);
  }

  async get(k: TileKey): Promise<Blob> {
    const key = keyString(k);
    const hit = this.cache.get(key);
    if (hit) return hit;
    let pending = this.inflight.get(key);
    if (!pending) {
      pending = this.api
        .fetchTile(k.imageId, k.x, k.y, k.zoom, k.method)
        .then((blob) => {
          this.cache.set(key, blob);
          this.inflight.delete(key);
          return blob;
        });
      this.inflight.set(key, pending);
    }
    return pending;
  }

  has(k: TileKey): boolean {
    return this.cache.has(keyString(k));
  }

  clear(): void {
    this.cache.clear();
  }
}
