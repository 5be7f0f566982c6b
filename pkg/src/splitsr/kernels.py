"""Low-level numpy kernels for the fixed op set.

Everything here works on raw ndarrays in (N, C, H, W) layout. Forward
kernels have matching backward (vector-Jacobian) kernels so the trainer
can backpropagate without a general autodiff engine. Correctness over
speed: convolution is im2col + einsum, resizes are separable gathers.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def round_half_up(x: float) -> int:
    """Deterministic round-half-up used for all channel-fraction math."""
    return int(math.floor(x + 0.5))


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------

def conv_out_size(size: int, k: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - k) // stride + 1


def _windows(x, kh, kw, stride, padding):
    """Return sliding windows of shape (N, C, Ho, Wo, kh, kw)."""
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))
    return win[:, :, ::stride, ::stride]


def conv2d(x, kernel, bias, stride=1, padding=0, groups=1):
    """Grouped 2-D convolution (cross-correlation), zero padding."""
    n, c, h, w = x.shape
    co, cig, kh, kw = kernel.shape
    win = _windows(x, kh, kw, stride, padding)
    ho, wo = win.shape[2], win.shape[3]
    win = win.reshape(n, groups, cig, ho, wo, kh, kw)
    wg = kernel.reshape(groups, co // groups, cig, kh, kw)
    y = np.einsum("ngihwuv,goiuv->ngohw", win, wg, optimize=True)
    y = y.reshape(n, co, ho, wo)
    if bias is not None:
        y = y + bias.reshape(1, co, 1, 1)
    return y


def conv2d_backward(x, kernel, stride, padding, groups, gy,
                    need_x=True, need_w=True, need_b=True):
    """VJP of conv2d w.r.t. input, kernel and bias."""
    n, c, h, w = x.shape
    co, cig, kh, kw = kernel.shape
    gyg = gy.reshape(n, groups, co // groups, gy.shape[2], gy.shape[3])
    ho, wo = gy.shape[2], gy.shape[3]

    gb = gy.sum(axis=(0, 2, 3)) if need_b else None

    gw = None
    if need_w:
        win = _windows(x, kh, kw, stride, padding)
        win = win.reshape(n, groups, cig, ho, wo, kh, kw)
        gw = np.einsum("ngihwuv,ngohw->goiuv", win, gyg, optimize=True)
        gw = gw.reshape(co, cig, kh, kw)

    gx = None
    if need_x:
        wg = kernel.reshape(groups, co // groups, cig, kh, kw)
        gwin = np.einsum("goiuv,ngohw->ngihwuv", wg, gyg, optimize=True)
        gwin = gwin.reshape(n, c, ho, wo, kh, kw)
        hp, wp = h + 2 * padding, w + 2 * padding
        gxp = np.zeros((n, c, hp, wp), dtype=x.dtype)
        for u in range(kh):
            for v in range(kw):
                gxp[:, :, u:u + stride * ho:stride,
                    v:v + stride * wo:stride] += gwin[:, :, :, :, u, v]
        gx = gxp[:, :, padding:padding + h, padding:padding + w]
    return gx, gw, gb


# ---------------------------------------------------------------------------
# Rearrangement ops
# ---------------------------------------------------------------------------

def pixel_shuffle(x, r):
    """Depth-to-space: (N, C, H, W) -> (N, C/r^2, H*r, W*r)."""
    n, c, h, w = x.shape
    cq = c // (r * r)
    y = x.reshape(n, cq, r, r, h, w)
    y = y.transpose(0, 1, 4, 2, 5, 3)
    return y.reshape(n, cq, h * r, w * r)


def pixel_unshuffle(x, r):
    """Inverse of pixel_shuffle; also its VJP."""
    n, c, h, w = x.shape
    y = x.reshape(n, c, h // r, r, w // r, r)
    y = y.transpose(0, 1, 3, 5, 2, 4)
    return y.reshape(n, c * r * r, h // r, w // r)


def shuffle_permutation(c, g):
    """Destination-order channel indices for a (g, c/g) transpose shuffle."""
    src = np.arange(c)
    dst = (src % g) * (c // g) + src // g
    perm = np.empty(c, dtype=int)
    perm[dst] = src
    return perm


# ---------------------------------------------------------------------------
# Resizing
# ---------------------------------------------------------------------------

def _linear_taps(in_size, out_size):
    dst = np.arange(out_size)
    src = (dst + 0.5) * (in_size / out_size) - 0.5
    i0 = np.floor(src).astype(int)
    t = src - i0
    lo = np.clip(i0, 0, in_size - 1)
    hi = np.clip(i0 + 1, 0, in_size - 1)
    return lo, hi, t


def bilinear_resize(x, out_h, out_w):
    """Half-pixel-center bilinear resize with edge clamping."""
    dtype = x.dtype
    lo, hi, t = _linear_taps(x.shape[2], out_h)
    t = t.astype(dtype).reshape(1, 1, out_h, 1)
    y = x[:, :, lo, :] * (1 - t) + x[:, :, hi, :] * t
    lo, hi, t = _linear_taps(x.shape[3], out_w)
    t = t.astype(dtype).reshape(1, 1, 1, out_w)
    y = y[:, :, :, lo] * (1 - t) + y[:, :, :, hi] * t
    return y


def _cubic_kernel(t):
    """Catmull-Rom cubic (a = -0.5)."""
    a = -0.5
    t = np.abs(t)
    out = np.zeros_like(t)
    m1 = t <= 1
    m2 = (t > 1) & (t < 2)
    out[m1] = (a + 2) * t[m1] ** 3 - (a + 3) * t[m1] ** 2 + 1
    out[m2] = a * t[m2] ** 3 - 5 * a * t[m2] ** 2 + 8 * a * t[m2] - 4 * a
    return out


def _cubic_taps(in_size, out_size):
    dst = np.arange(out_size)
    src = (dst + 0.5) * (in_size / out_size) - 0.5
    i0 = np.floor(src).astype(int)
    frac = src - i0
    idx = np.stack([np.clip(i0 + k, 0, in_size - 1) for k in (-1, 0, 1, 2)])
    wts = np.stack([_cubic_kernel(frac - k) for k in (-1, 0, 1, 2)])
    wts /= wts.sum(axis=0, keepdims=True)  # exact partition of unity
    return idx, wts


def bicubic_resize(x, out_h, out_w):
    """Half-pixel-center Catmull-Rom bicubic resize with edge clamping."""
    dtype = x.dtype
    idx, wts = _cubic_taps(x.shape[2], out_h)
    wts = wts.astype(dtype)
    y = sum(x[:, :, idx[k], :] * wts[k].reshape(1, 1, out_h, 1) for k in range(4))
    idx, wts = _cubic_taps(x.shape[3], out_w)
    wts = wts.astype(dtype)
    y = sum(y[:, :, :, idx[k]] * wts[k].reshape(1, 1, 1, out_w) for k in range(4))
    return y


def resize(x, out_h, out_w, kind="bilinear"):
    if kind == "bilinear":
        return bilinear_resize(x, out_h, out_w)
    if kind == "bicubic":
        return bicubic_resize(x, out_h, out_w)
    raise ValueError(f"unknown resize kind: {kind!r}")
