"""Dense 4-D tensor type and the public op surface of the SR engine.

A :class:`Tensor` is an immutable (N, C, H, W) array in one of two
precisions: "standard" (float32, matches the inference arithmetic) or
"wide" (float64, used for gradient checking where finite differences
would drown in float32 noise).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .kernels import round_half_up

_DTYPES = {"standard": np.float32, "wide": np.float64}


class ShapeError(ValueError):
    """Raised when an operation's shape preconditions are violated."""

    def __init__(self, message, axis=None):
        super().__init__(message if axis is None else f"{message} (axis: {axis})")
        self.axis = axis


class Tensor:
    """Immutable dense (N, C, H, W) tensor of finite real numbers."""

    __slots__ = ("_data",)

    def __init__(self, data, precision: Optional[str] = None):
        arr = np.asarray(data)
        if precision is not None:
            arr = arr.astype(_DTYPES[precision], copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        if arr.ndim != 4:
            raise ShapeError(f"tensor must be 4-D (N,C,H,W), got ndim={arr.ndim}")
        if min(arr.shape) < 1:
            raise ShapeError(f"all dims must be >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "_data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self._data.shape

    @property
    def precision(self) -> str:
        return "wide" if self._data.dtype == np.float64 else "standard"

    def wide(self) -> "Tensor":
        return Tensor(self._data, precision="wide")

    def standard(self) -> "Tensor":
        return Tensor(self._data, precision="standard")

    def __repr__(self):
        return f"Tensor(shape={self.shape}, precision={self.precision!r})"


@dataclass
class ConvWeights:
    """Weights of one 2-D convolution layer.

    groups=1 is a standard convolution, groups=C_in=C_out is depthwise,
    k=1 with groups=1 is pointwise.
    """

    kernel: np.ndarray  # (C_out, C_in/groups, k_h, k_w)
    bias: Optional[np.ndarray] = None  # (C_out,)
    stride: int = 1
    padding: int = 0
    groups: int = 1

    def __post_init__(self):
        k = np.asarray(self.kernel)
        if k.ndim != 4:
            raise ShapeError("kernel must be 4-D (C_out, C_in/groups, kh, kw)")
        if self.c_out % self.groups:
            raise ShapeError("C_out must be divisible by groups", axis="channel")
        if self.stride < 1 or self.padding < 0 or self.groups < 1:
            raise ValueError("stride/padding/groups out of range")

    @property
    def _kernel_shape(self):
        # kernel may be wrapped in an autograd Var during training
        return getattr(self.kernel, "value", self.kernel).shape

    @property
    def c_out(self) -> int:
        return self._kernel_shape[0]

    @property
    def c_in(self) -> int:
        return self._kernel_shape[1] * self.groups

    @property
    def param_count(self) -> int:
        n = int(np.prod(self._kernel_shape))
        if self.bias is not None:
            n += self._kernel_shape[0]
        return n


# ---------------------------------------------------------------------------
# Forward ops
# ---------------------------------------------------------------------------

def conv2d(x: Tensor, w: ConvWeights) -> Tensor:
    if x.shape[1] != w.c_in:
        raise ShapeError(
            f"conv2d: input has {x.shape[1]} channels, weights expect {w.c_in}",
            axis="channel")
    kh, kw = w.kernel.shape[2], w.kernel.shape[3]
    if x.shape[2] + 2 * w.padding < kh:
        raise ShapeError("conv2d: padded height smaller than kernel", axis="height")
    if x.shape[3] + 2 * w.padding < kw:
        raise ShapeError("conv2d: padded width smaller than kernel", axis="width")
    kern = w.kernel.astype(x.data.dtype, copy=False)
    bias = None if w.bias is None else w.bias.astype(x.data.dtype, copy=False)
    return Tensor(kernels.conv2d(x.data, kern, bias, w.stride, w.padding, w.groups))


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    if r < 1:
        raise ValueError("pixel_shuffle: r must be positive")
    if x.shape[1] % (r * r):
        raise ShapeError(
            f"pixel_shuffle: C={x.shape[1]} not divisible by r^2={r * r}",
            axis="channel")
    return Tensor(kernels.pixel_shuffle(x.data, r))


def bilinear_resize(x: Tensor, scale: float,
                    out_size: Optional[Tuple[int, int]] = None) -> Tensor:
    if scale <= 0:
        raise ValueError("bilinear_resize: scale must be positive")
    oh, ow = out_size or (round(x.shape[2] * scale), round(x.shape[3] * scale))
    return Tensor(kernels.bilinear_resize(x.data, oh, ow))


def bicubic_resize(x: Tensor, scale: float,
                   out_size: Optional[Tuple[int, int]] = None) -> Tensor:
    if scale <= 0:
        raise ValueError("bicubic_resize: scale must be positive")
    oh, ow = out_size or (round(x.shape[2] * scale), round(x.shape[3] * scale))
    return Tensor(kernels.bicubic_resize(x.data, oh, ow))


def split_point(c: int, alpha: float) -> int:
    """Channel count of the active branch for split ratio alpha."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    k = round_half_up(alpha * c)
    if k < 1:
        raise ShapeError(f"round(alpha*C) must be >= 1, got {k}", axis="channel")
    return k


def channel_split(x: Tensor, alpha: float) -> Tuple[Tensor, np.ndarray]:
    """Split into (active, idle) along channels; idle may be 0-channel."""
    k = split_point(x.shape[1], alpha)
    active = Tensor(x.data[:, :k])
    idle = x.data[:, k:]  # may have zero channels, not a valid Tensor
    return active, idle


def concat_channels(a, b) -> Tensor:
    """Concatenate channels of a then b; either side may be a raw array

    (the idle half of a split can be 0-channel, which Tensor forbids).
    """
    da = a.data if isinstance(a, Tensor) else np.asarray(a)
    db = b.data if isinstance(b, Tensor) else np.asarray(b)
    if db.shape[1] == 0:
        return Tensor(da)
    if da.shape[1] == 0:
        return Tensor(db)
    for axis, name in ((0, "batch"), (2, "height"), (3, "width")):
        if da.shape[axis] != db.shape[axis]:
            raise ShapeError("concat_channels: inputs disagree", axis=name)
    return Tensor(np.concatenate([da, db], axis=1))


def channel_shuffle(x: Tensor, g: int) -> Tensor:
    c = x.shape[1]
    if c % g:
        raise ShapeError(f"channel_shuffle: C={c} not divisible by g={g}",
                         axis="channel")
    perm = kernels.shuffle_permutation(c, g)
    return Tensor(x.data[:, perm])


def relu(x: Tensor) -> Tensor:
    return Tensor(np.maximum(x.data, 0))


# ---------------------------------------------------------------------------
# Vector-Jacobian products
# ---------------------------------------------------------------------------

def conv2d_vjp(x: Tensor, w: ConvWeights, gy: Tensor):
    """Cotangents (gx, g_kernel, g_bias) of conv2d."""
    kern = w.kernel.astype(x.data.dtype, copy=False)
    gx, gw, gb = kernels.conv2d_backward(
        x.data, kern, w.stride, w.padding, w.groups, gy.data,
        need_b=w.bias is not None)
    return Tensor(gx), gw, gb


def pixel_shuffle_vjp(r: int, gy: Tensor) -> Tensor:
    return Tensor(kernels.pixel_unshuffle(gy.data, r))


def channel_split_vjp(alpha: float, g_active: Tensor, g_idle) -> Tensor:
    return concat_channels(g_active, g_idle)


def concat_channels_vjp(c_first: int, gy: Tensor):
    return gy.data[:, :c_first], gy.data[:, c_first:]


def channel_shuffle_vjp(g: int, gy: Tensor) -> Tensor:
    perm = kernels.shuffle_permutation(gy.shape[1], g)
    inv = np.argsort(perm)
    return Tensor(gy.data[:, inv])


def relu_vjp(x: Tensor, gy: Tensor) -> Tensor:
    return Tensor(gy.data * (x.data > 0))


_VJP_OPS = frozenset({
    "conv2d", "pixel_shuffle", "channel_split", "concat_channels",
    "channel_shuffle", "relu", "add", "l1_loss",
})


def vjp(op: str, inputs: tuple, cotangent):
    """Dispatch to the VJP of a named op; unsupported ops raise."""
    if op not in _VJP_OPS:
        raise NotImplementedError(f"vjp not defined for op {op!r}")
    if op == "conv2d":
        return conv2d_vjp(*inputs, cotangent)
    if op == "pixel_shuffle":
        return pixel_shuffle_vjp(inputs[1], cotangent)
    if op == "channel_split":
        return channel_split_vjp(inputs[1], *cotangent)
    if op == "concat_channels":
        return concat_channels_vjp(inputs[0], cotangent)
    if op == "channel_shuffle":
        return channel_shuffle_vjp(inputs[1], cotangent)
    if op == "relu":
        return relu_vjp(inputs[0], cotangent)
    if op == "add":
        return cotangent, cotangent
    if op == "l1_loss":
        pred, target = inputs
        g = np.sign(pred.data - target.data) / pred.data.size
        return Tensor(g * cotangent)
    raise AssertionError("unreachable")
