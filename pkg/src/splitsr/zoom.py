"""Interactive zoom runtime: tile an image into 256x256 patches, route

each tile by zoom level (bilinear below 2x, model x4 then downsample in
2-4x, model x4 then bilinear above 4x, capped at 5x), process tiles
nearest the gesture focus first, and compose the results.

The scheduler is deterministic: `step()` always executes the single
highest-priority pending job, and the server drives it from worker
threads through the same serialized interface.
"""

from __future__ import annotations

import enum
import math
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import kernels

MAX_ZOOM = 5.0
MIN_ZOOM = 1.0
TILE_SIZE = 256
MODEL_SCALE = 4


def clamp_zoom(zoom: float) -> float:
    return min(max(float(zoom), MIN_ZOOM), MAX_ZOOM)


class RouteKind(enum.Enum):
    BILINEAR_ONLY = "bilinear_only"
    MODEL_THEN_DOWNSAMPLE = "model_then_downsample"
    MODEL_THEN_BILINEAR = "model_then_bilinear"


@dataclass(frozen=True)
class RouteStrategy:
    kind: RouteKind
    target_zoom: float

    @property
    def cache_key(self) -> tuple:
        # All model routes share the cached x4 output; bilinear output
        # depends on the exact zoom.
        if self.kind is RouteKind.BILINEAR_ONLY:
            return ("bilinear", self.target_zoom)
        return ("model4x",)


def route(zoom: float) -> RouteStrategy:
    """Routing rule with breakpoints at exactly 2 and 4 (both inclusive

    to the middle, model-then-downsample band).
    """
    zoom = clamp_zoom(zoom)
    if zoom < 2:
        return RouteStrategy(RouteKind.BILINEAR_ONLY, zoom)
    if zoom <= 4:
        return RouteStrategy(RouteKind.MODEL_THEN_DOWNSAMPLE, zoom)
    return RouteStrategy(RouteKind.MODEL_THEN_BILINEAR, zoom)


@dataclass(frozen=True)
class TileRect:
    x: int
    y: int
    w: int
    h: int

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x + self.w / 2, self.y + self.h / 2)


def tile(width: int, height: int, tile_size: int = TILE_SIZE) -> List[TileRect]:
    """Non-overlapping row-major grid; right/bottom remainders partial."""
    rects = []
    for y in range(0, height, tile_size):
        for x in range(0, width, tile_size):
            rects.append(TileRect(x, y, min(tile_size, width - x),
                                  min(tile_size, height - y)))
    return rects


def prioritize(tiles: List[TileRect], focus: Tuple[float, float]
               ) -> List[float]:
    """Priority per tile: Euclidean distance from tile center to focus.

    Lower runs sooner; ties resolved by row-major index at pop time.
    """
    fx, fy = focus
    return [math.hypot(t.center[0] - fx, t.center[1] - fy) for t in tiles]


class JobState(enum.Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    CANCELLED = "cancelled"

_ORDER = {JobState.PENDING: 0, JobState.RUNNING: 1, JobState.DONE: 2,
          JobState.CANCELLED: 2}


@dataclass
class PatchJob:
    image_id: str
    index: int  # row-major tile index
    rect: TileRect
    strategy: RouteStrategy
    priority: float
    state: JobState = JobState.PENDING
    result: Optional[np.ndarray] = None
    latency_ms: Optional[float] = None
    completed_at: Optional[float] = None

    def advance(self, state: JobState) -> None:
        if _ORDER[state] < _ORDER[self.state]:
            raise ValueError(f"job state cannot regress {self.state} -> {state}")
        self.state = state


@dataclass
class ZoomRequest:
    image_id: str
    focus: Tuple[float, float]
    zoom: float
    request_id: int = -1  # assigned by the engine, monotone

    def __post_init__(self):
        self.zoom = clamp_zoom(self.zoom)


@dataclass
class _RequestRecord:
    request: ZoomRequest
    jobs: List[PatchJob]


def _scaled_bounds(rect: TileRect, zoom: float) -> Tuple[int, int, int, int]:
    x0 = round(rect.x * zoom)
    y0 = round(rect.y * zoom)
    x1 = round((rect.x + rect.w) * zoom)
    y1 = round((rect.y + rect.h) * zoom)
    return x0, y0, x1, y1


class ZoomEngine:
    """Tile scheduler plus per-(image, tile, strategy) result cache.

    `model_fn` maps a (1, 3, h, w) array to its x4 upscale. All public
    methods are serialized by an internal lock; tile computation happens
    under it too, keeping results deterministic.
    """

    def __init__(self, model_fn: Callable[[np.ndarray], np.ndarray],
                 tile_size: int = TILE_SIZE):
        self.model_fn = model_fn
        self.tile_size = tile_size
        self.images: Dict[str, np.ndarray] = {}
        self.cache: Dict[tuple, np.ndarray] = {}
        self.jobs: Dict[tuple, PatchJob] = {}  # (image, index, cache_key)
        self.requests: Dict[int, _RequestRecord] = {}
        self._next_request = 0
        self._lock = threading.RLock()
        self._wake = threading.Condition(self._lock)
        self._stop = False

    # -- images ----------------------------------------------------------

    def register_image(self, image_id: str, image: np.ndarray) -> None:
        with self._lock:
            self.images[image_id] = np.asarray(image, dtype=np.float32)

    def image_tiles(self, image_id: str) -> List[TileRect]:
        img = self._image(image_id)
        return tile(img.shape[2], img.shape[1], self.tile_size)

    def _image(self, image_id: str) -> np.ndarray:
        try:
            return self.images[image_id]
        except KeyError:
            raise KeyError(f"unknown image id {image_id!r}")

    # -- scheduling ------------------------------------------------------

    def submit(self, request: ZoomRequest) -> int:
        """Create/reprioritize jobs for every tile; returns request id."""
        with self._lock:
            img = self._image(request.image_id)
            request.request_id = self._next_request
            self._next_request += 1
            strategy = route(request.zoom)
            rects = tile(img.shape[2], img.shape[1], self.tile_size)
            priorities = prioritize(rects, request.focus)
            jobs = []
            for index, (rect, prio) in enumerate(zip(rects, priorities)):
                key = (request.image_id, index, strategy.cache_key)
                # cancel pending jobs for this tile whose strategy changed
                for other_key, other in list(self.jobs.items()):
                    if (other_key[0], other_key[1]) == (request.image_id, index) \
                            and other_key[2] != strategy.cache_key \
                            and other.state is JobState.PENDING:
                        other.advance(JobState.CANCELLED)
                        del self.jobs[other_key]
                job = self.jobs.get(key)
                if job is None:
                    job = PatchJob(request.image_id, index, rect, strategy,
                                   prio)
                    if key in self.cache:
                        job.result = self.cache[key]
                        job.state = JobState.DONE
                        job.latency_ms = 0.0
                        job.completed_at = time.monotonic()
                    self.jobs[key] = job
                elif job.state is JobState.PENDING:
                    job.priority = prio  # reprioritized by the newer gesture
                jobs.append(job)
            self.requests[request.request_id] = _RequestRecord(request, jobs)
            self._wake.notify_all()
            return request.request_id

    def pending(self) -> List[PatchJob]:
        with self._lock:
            return [j for j in self.jobs.values()
                    if j.state is JobState.PENDING]

    def step(self) -> Optional[PatchJob]:
        """Execute the highest-priority pending job; None when idle."""
        with self._lock:
            todo = self.pending()
            if not todo:
                return None
            job = min(todo, key=lambda j: (j.priority, j.index))
            job.advance(JobState.RUNNING)
            started = time.monotonic()
            job.result = self._compute(job)
            job.latency_ms = (time.monotonic() - started) * 1000.0
            job.completed_at = time.monotonic()
            job.advance(JobState.DONE)
            key = (job.image_id, job.index, job.strategy.cache_key)
            self.cache[key] = job.result
            return job

    def run_until_idle(self) -> List[PatchJob]:
        done = []
        while True:
            job = self.step()
            if job is None:
                return done
            done.append(job)

    def _compute(self, job: PatchJob) -> np.ndarray:
        img = self._image(job.image_id)
        r = job.rect
        patch = img[:, r.y:r.y + r.h, r.x:r.x + r.w][None]
        if job.strategy.kind is RouteKind.BILINEAR_ONLY:
            x0, y0, x1, y1 = _scaled_bounds(r, job.strategy.target_zoom)
            return kernels.bilinear_resize(patch, y1 - y0, x1 - x0)[0]
        return np.asarray(self.model_fn(patch), dtype=np.float32)[0]

    # -- results ---------------------------------------------------------

    def tile_result(self, image_id: str, rect_index: int, zoom: float
                    ) -> np.ndarray:
        """Synchronously compute (or fetch) one tile at a zoom level."""
        zoom = clamp_zoom(zoom)
        strategy = route(zoom)
        with self._lock:
            rects = self.image_tiles(image_id)
            if not 0 <= rect_index < len(rects):
                raise IndexError(f"tile index {rect_index} outside grid")
            rect = rects[rect_index]
            key = (image_id, rect_index, strategy.cache_key)
            raw = self.cache.get(key)
            if raw is None:
                job = PatchJob(image_id, rect_index, rect, strategy, 0.0)
                raw = self._compute(job)
                self.cache[key] = raw
        return self._finalize(raw, rect, strategy)

    def bilinear_tile(self, image_id: str, rect_index: int, zoom: float
                      ) -> np.ndarray:
        """A/B comparison path: plain bilinear at any zoom level."""
        zoom = clamp_zoom(zoom)
        with self._lock:
            rects = self.image_tiles(image_id)
            if not 0 <= rect_index < len(rects):
                raise IndexError(f"tile index {rect_index} outside grid")
            rect = rects[rect_index]
            key = (image_id, rect_index, ("bilinear", zoom))
            raw = self.cache.get(key)
            if raw is None:
                img = self._image(image_id)
                patch = img[:, rect.y:rect.y + rect.h,
                            rect.x:rect.x + rect.w][None]
                x0, y0, x1, y1 = _scaled_bounds(rect, zoom)
                raw = kernels.bilinear_resize(patch, y1 - y0, x1 - x0)[0]
                self.cache[key] = raw
        return raw

    @staticmethod
    def _finalize(raw: np.ndarray, rect: TileRect, strategy: RouteStrategy
                  ) -> np.ndarray:
        """Resample a cached raw result to the strategy's target zoom."""
        if strategy.kind is RouteKind.BILINEAR_ONLY:
            return raw
        x0, y0, x1, y1 = _scaled_bounds(rect, strategy.target_zoom)
        if raw.shape[1:] == (y1 - y0, x1 - x0):
            return raw
        return kernels.bilinear_resize(raw[None], y1 - y0, x1 - x0)[0]

    def compose(self, image_id: str, zoom: float
                ) -> Tuple[np.ndarray, List[int]]:
        """Assemble the full upscaled image from Done tiles.

        Returns (image, missing tile indexes); missing tiles stay zero.
        """
        zoom = clamp_zoom(zoom)
        img = self._image(image_id)
        if zoom == 1.0:
            return img.copy(), []
        strategy = route(zoom)
        rects = self.image_tiles(image_id)
        out_h = round(img.shape[1] * zoom)
        out_w = round(img.shape[2] * zoom)
        out = np.zeros((3, out_h, out_w), dtype=np.float32)
        missing = []
        for index, rect in enumerate(rects):
            key = (image_id, index, strategy.cache_key)
            raw = self.cache.get(key)
            if raw is None:
                missing.append(index)
                continue
            x0, y0, x1, y1 = _scaled_bounds(rect, zoom)
            out[:, y0:y1, x0:x1] = self._finalize(raw, rect, strategy)
        return out, missing

    def progress(self, request_id: int) -> dict:
        with self._lock:
            try:
                record = self.requests[request_id]
            except KeyError:
                raise KeyError(f"unknown request id {request_id}")
            tiles = []
            done = 0
            for job in record.jobs:
                if job.state is JobState.DONE:
                    done += 1
                tiles.append({
                    "index": job.index,
                    "x": job.rect.x // self.tile_size,
                    "y": job.rect.y // self.tile_size,
                    "state": job.state.value,
                    "latency_ms": job.latency_ms,
                    "completed_at": job.completed_at,
                })
            return {"request_id": request_id, "done": done,
                    "total": len(record.jobs), "tiles": tiles}

    # -- background workers ----------------------------------------------

    def worker_loop(self) -> None:
        while True:
            with self._wake:
                if self._stop:
                    return
                if not self.pending():
                    self._wake.wait(timeout=0.1)
                    continue
            self.step()

    def start_workers(self, count: int) -> List[threading.Thread]:
        threads = []
        for _ in range(max(count, 1)):
            t = threading.Thread(target=self.worker_loop, daemon=True)
            t.start()
            threads.append(t)
        return threads

    def stop_workers(self) -> None:
        with self._wake:
            self._stop = True
            self._wake.notify_all()
