/** Typed client for the splitsr tile service HTTP API. */

export type Method = "splitsr" | "bilinear";

export interface ImageInfo {
  id: string;
  width: number;
  height: number;
}

export interface TileProgress {
  index: number;
  x: number;
  y: number;
  state: "pending" | "running" | "done" | "cancelled";
  latency_ms: number | null;
  completed_at: number | null;
}

export interface Progress {
  request_id: number;
  done: number;
  total: number;
  tiles: TileProgress[];
}

export interface ZoomAck {
  request_id: number;
  zoom: number;
}

export interface ApiError {
  code: string;
  message: string;
  request_id: string;
}

export class ServiceError extends Error {
  constructor(readonly status: number, readonly body: ApiError) {
    super(`${body.code}: ${body.message}`);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    throw new ServiceError(resp.status, (await resp.json()) as ApiError);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  tileUrl(imageId: string, x: number, y: number, zoom: number,
          method: Method): string {
    const params = new URLSearchParams({
      x: String(x),
      y: String(y),
      zoom: String(zoom),
      method,
    });
    return `${this.baseUrl}/images/${encodeURIComponent(imageId)}/tile?${params}`;
  }

  async listImages(): Promise<ImageInfo[]> {
    return asJson(await fetch(`${this.baseUrl}/images`));
  }

  async fetchTile(imageId: string, x: number, y: number, zoom: number,
                  method: Method): Promise<Blob> {
    const resp = await fetch(this.tileUrl(imageId, x, y, zoom, method));
    if (!resp.ok) {
      throw new ServiceError(resp.status, (await resp.json()) as ApiError);
    }
    return resp.blob();
  }

  async submitZoom(imageId: string, focusX: number, focusY: number,
                   zoom: number): Promise<ZoomAck> {
    const resp = await fetch(
      `${this.baseUrl}/images/${encodeURIComponent(imageId)}/zoom`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ focus_x: focusX, focus_y: focusY, zoom }),
      });
    return asJson(resp);
  }

  async getProgress(requestId: number): Promise<Progress> {
    return asJson(await fetch(`${this.baseUrl}/requests/${requestId}/progress`));
  }

  async submitRating(imageId: string, method: Method,
                     score: number): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ image_id: imageId, method, score }),
    });
    await asJson<{ status: string }>(resp);
  }
}
