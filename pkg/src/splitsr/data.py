"""Dataset plumbing: PNG ingestion, synthetic texture generation and

paired patch sampling with flip/rotation augmentation.

Images are carried as float32 arrays of shape (3, H, W) in [0, 255].
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from . import kernels


@dataclass
class ImagePair:
    hr: np.ndarray  # (3, H, W), H and W divisible by scale
    lr: np.ndarray  # (3, H/scale, W/scale)
    id: str


class DatasetError(ValueError):
    pass


def read_image(path: str) -> np.ndarray:
    img = Image.open(path)
    if img.mode not in ("RGB", "L"):
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.float32)
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    return arr.transpose(2, 0, 1)


def write_image(path: str, arr: np.ndarray) -> None:
    out = np.clip(np.round(arr), 0, 255).astype(np.uint8).transpose(1, 2, 0)
    Image.fromarray(out).save(path)


def degrade_bicubic(hr: np.ndarray, scale: int) -> np.ndarray:
    x = hr[None]
    lr = kernels.bicubic_resize(x, hr.shape[1] // scale, hr.shape[2] // scale)
    return lr[0].astype(np.float32)


def load_dataset(directory: str, scale: int,
                 degradation: Optional[Callable] = None) -> List[ImagePair]:
    """Read all PNGs in a directory as HR images, deriving LR pairs.

    HR images are cropped to dimensions divisible by the scale. Errors
    are reported per file; raises only if nothing loads.
    """
    degradation = degradation or degrade_bicubic
    names = sorted(n for n in os.listdir(directory)
                   if n.lower().endswith(".png"))
    pairs, errors = [], []
    for name in names:
        try:
            hr = read_image(os.path.join(directory, name))
            h = hr.shape[1] - hr.shape[1] % scale
            w = hr.shape[2] - hr.shape[2] % scale
            hr = hr[:, :h, :w]
            pairs.append(ImagePair(hr=hr, lr=degradation(hr, scale),
                                   id=os.path.splitext(name)[0]))
        except Exception as exc:  # per-file error, dataset-level report
            errors.append(f"{name}: {exc}")
    if not pairs:
        raise DatasetError(
            f"no usable PNG images in {directory!r}"
            + (f"; errors: {errors}" if errors else ""))
    if errors:
        import warnings
        warnings.warn(f"skipped unreadable files: {errors}")
    return pairs


def make_synthetic_dataset(count: int, hr_size: int, scale: int,
                           seed: int = 0) -> List[ImagePair]:
    """Band-limited random textures with a few hard step edges.

    Gives training tests a reproducible corpus with no downloads.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    yy, xx = np.mgrid[0:hr_size, 0:hr_size].astype(np.float64)
    for i in range(count):
        img = np.zeros((3, hr_size, hr_size))
        base = gaussian_filter(rng.standard_normal((hr_size, hr_size)),
                               sigma=rng.uniform(0.6, 1.5))
        for c in range(3):
            img[c] = base + 0.25 * gaussian_filter(
                rng.standard_normal((hr_size, hr_size)), sigma=0.8)
        img /= max(np.abs(img).max(), 1e-9)
        for _ in range(4):  # oriented step edges
            theta = rng.uniform(0, np.pi)
            offset = rng.uniform(0.25, 0.75) * hr_size
            mask = (np.cos(theta) * xx + np.sin(theta) * yy) > offset
            img += rng.uniform(-0.8, 0.8) * mask
        lo, hi = img.min(), img.max()
        img = 10 + 235 * (img - lo) / max(hi - lo, 1e-9)
        hr = img.astype(np.float32)
        pairs.append(ImagePair(hr=hr, lr=degrade_bicubic(hr, scale),
                               id=f"synthetic-{i:03d}"))
    return pairs


def sample_batch(dataset: List[ImagePair], batch_size: int, hr_patch: int,
                 scale: int, rng: np.random.Generator
                 ) -> Tuple[np.ndarray, np.ndarray]:
    """Aligned (lr, hr) patch batch with shared flip/rotation augmentation."""
    lr_patch = hr_patch // scale
    lrs, hrs = [], []
    for _ in range(batch_size):
        pair = dataset[rng.integers(len(dataset))]
        _, h, w = pair.hr.shape
        if h < hr_patch or w < hr_patch:
            raise DatasetError(
                f"image {pair.id!r} ({h}x{w}) smaller than patch {hr_patch}")
        y = int(rng.integers(0, (h - hr_patch) // scale + 1)) * scale
        x = int(rng.integers(0, (w - hr_patch) // scale + 1)) * scale
        hr = pair.hr[:, y:y + hr_patch, x:x + hr_patch]
        lr = pair.lr[:, y // scale:y // scale + lr_patch,
                     x // scale:x // scale + lr_patch]
        rot = int(rng.integers(0, 4))
        flip = bool(rng.integers(0, 2))
        hr = np.rot90(hr, rot, axes=(1, 2))
        lr = np.rot90(lr, rot, axes=(1, 2))
        if flip:
            hr = hr[:, :, ::-1]
            lr = lr[:, :, ::-1]
        hrs.append(np.ascontiguousarray(hr))
        lrs.append(np.ascontiguousarray(lr))
    return np.stack(lrs), np.stack(hrs)
