"""Local HTTP tile service exposing the zoom engine to the viewer."""

from __future__ import annotations

import io
import json
import os
import threading
import time
from typing import Optional

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from .zoom import ZoomEngine, ZoomRequest, clamp_zoom


class ZoomBody(BaseModel):
    focus_x: float
    focus_y: float
    zoom: float


class RatingBody(BaseModel):
    image_id: str
    method: str
    score: int


def _error(status: int, code: str, message: str, request_id: str = "-"):
    return JSONResponse(status_code=status, content={
        "code": code, "message": message, "request_id": request_id})


def _png_bytes(arr: np.ndarray) -> bytes:
    img = np.clip(np.round(arr), 0, 255).astype(np.uint8).transpose(1, 2, 0)
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    return buf.getvalue()


def create_app(engine: ZoomEngine, ratings_path: str,
               static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="splitsr tile service")
    ratings_lock = threading.Lock()

    @app.get("/images")
    def list_images():
        return [
            {"id": image_id, "width": arr.shape[2], "height": arr.shape[1]}
            for image_id, arr in sorted(engine.images.items())
        ]

    @app.get("/images/{image_id}/tile")
    def get_tile(image_id: str, x: int = Query(...), y: int = Query(...),
                 zoom: float = Query(...), method: str = "splitsr"):
        if image_id not in engine.images:
            return _error(404, "unknown_image", f"no image {image_id!r}")
        if method not in ("splitsr", "bilinear"):
            return _error(400, "bad_method", f"unknown method {method!r}")
        img = engine.images[image_id]
        cols = -(-img.shape[2] // engine.tile_size)
        rows = -(-img.shape[1] // engine.tile_size)
        if not (0 <= x < cols and 0 <= y < rows):
            return _error(409, "tile_outside_grid",
                          f"tile ({x},{y}) outside {cols}x{rows} grid")
        index = y * cols + x
        zoom = clamp_zoom(zoom)
        if method == "bilinear":
            arr = engine.bilinear_tile(image_id, index, zoom)
        else:
            arr = engine.tile_result(image_id, index, zoom)
        return Response(content=_png_bytes(arr), media_type="image/png",
                        headers={"X-Zoom": str(zoom)})

    @app.post("/images/{image_id}/zoom")
    def post_zoom(image_id: str, body: ZoomBody):
        if image_id not in engine.images:
            return _error(404, "unknown_image", f"no image {image_id!r}")
        if body.zoom <= 0:
            return _error(400, "bad_zoom", "zoom must be positive")
        request = ZoomRequest(image_id=image_id,
                              focus=(body.focus_x, body.focus_y),
                              zoom=body.zoom)
        rid = engine.submit(request)
        return {"request_id": rid, "zoom": request.zoom}

    @app.get("/requests/{request_id}/progress")
    def get_progress(request_id: int):
        try:
            return engine.progress(request_id)
        except KeyError:
            return _error(404, "unknown_request", f"no request {request_id}")

    @app.post("/ratings")
    def post_rating(body: RatingBody):
        if not 1 <= body.score <= 7:
            return _error(400, "bad_score", "score must be in 1..7")
        if body.image_id not in engine.images:
            return _error(404, "unknown_image", f"no image {body.image_id!r}")
        entry = {"image_id": body.image_id, "method": body.method,
                 "score": body.score, "timestamp": time.time()}
        with ratings_lock:
            with open(ratings_path, "a") as fh:
                fh.write(json.dumps(entry) + "\n")
        return {"status": "recorded"}

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="viewer")

    return app
