"""SR evaluation: BT.601 luma, PSNR, SSIM and the dataset harness.

PSNR/SSIM are computed on the Y channel of YCbCr with a border shave
(default: the scale factor), the dominant convention in SR reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.signal import fftconvolve

from . import kernels
from .data import ImagePair

PSNR_INF = math.inf


def rgb_to_y(img: np.ndarray) -> np.ndarray:
    """ITU-R BT.601 studio-swing luma, RGB in [0, 255] -> Y in [16, 235].

    Accepts (3, H, W) or (N, 3, H, W); returns the same rank with a
    single channel.
    """
    coeff = np.array([65.481, 128.553, 24.966], dtype=np.float64) / 255.0
    if img.ndim == 3:
        return 16 + np.tensordot(coeff, img.astype(np.float64), axes=(0, 0))[None]
    return 16 + np.einsum("c,nchw->nhw", coeff, img.astype(np.float64))[:, None]


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"psnr: shape mismatch {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_INF
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2
    g = np.exp(-(ax ** 2) / (2 * sigma ** 2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 255.0,
         k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean local SSIM, 11x11 Gaussian window sigma=1.5, valid windowing."""
    a = np.asarray(a, dtype=np.float64).squeeze()
    b = np.asarray(b, dtype=np.float64).squeeze()
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError("ssim expects two equal-shaped 2-D images")
    win = _gaussian_window()
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    mu_a = fftconvolve(a, win, mode="valid")
    mu_b = fftconvolve(b, win, mode="valid")
    ex_aa = fftconvolve(a * a, win, mode="valid")
    ex_bb = fftconvolve(b * b, win, mode="valid")
    ex_ab = fftconvolve(a * b, win, mode="valid")
    var_a = ex_aa - mu_a ** 2
    var_b = ex_bb - mu_b ** 2
    cov = ex_ab - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class EvalReport:
    dataset: str
    method: str
    scale: int
    shave: int
    per_image: List[Tuple[str, float, float]] = field(default_factory=list)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([p for _, p, _ in self.per_image]))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([s for _, _, s in self.per_image]))

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "scale": self.scale,
            "shave": self.shave,
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
            "per_image": [
                {"id": i, "psnr": p, "ssim": s} for i, p, s in self.per_image
            ],
        }

    def table(self) -> str:
        rows = [f"{'image':<20} {'PSNR (dB)':>10} {'SSIM':>8}"]
        for name, p, s in self.per_image:
            ptxt = "inf" if math.isinf(p) else f"{p:.2f}"
            rows.append(f"{name:<20} {ptxt:>10} {s:>8.4f}")
        mean_p = "inf" if math.isinf(self.mean_psnr) else f"{self.mean_psnr:.2f}"
        rows.append(f"{'mean':<20} {mean_p:>10} {self.mean_ssim:>8.4f}")
        return "\n".join(rows)


def evaluate(method: Callable[[np.ndarray], np.ndarray],
             dataset: List[ImagePair], scale: int,
             shave: Optional[int] = None,
             dataset_id: str = "dataset",
             method_id: str = "method") -> EvalReport:
    """Upscale every LR image, shave borders, measure Y-channel metrics.

    `method` maps a (3, h, w) LR array to a (3, h*scale, w*scale) array.
    """
    if not dataset:
        raise ValueError("evaluate: empty dataset")
    shave = scale if shave is None else shave
    report = EvalReport(dataset=dataset_id, method=method_id, scale=scale,
                        shave=shave)
    for pair in sorted(dataset, key=lambda p: p.id):
        sr = np.clip(method(pair.lr), 0, 255)
        hr = pair.hr
        if sr.shape != hr.shape:
            raise ValueError(
                f"method output {sr.shape} does not match HR {hr.shape}")
        if shave:
            sr = sr[:, shave:-shave, shave:-shave]
            hr = hr[:, shave:-shave, shave:-shave]
        ya = rgb_to_y(sr)[0]
        yb = rgb_to_y(hr)[0]
        report.per_image.append((pair.id, psnr(ya, yb), ssim(ya, yb)))
    return report


def bilinear_method(scale: int) -> Callable[[np.ndarray], np.ndarray]:
    def method(lr: np.ndarray) -> np.ndarray:
        out = kernels.bilinear_resize(lr[None], lr.shape[1] * scale,
                                      lr.shape[2] * scale)
        return out[0]
    return method


def model_method(net) -> Callable[[np.ndarray], np.ndarray]:
    from .network import run

    def method(lr: np.ndarray) -> np.ndarray:
        return run(net, lr[None].astype(np.float32))[0]
    return method
