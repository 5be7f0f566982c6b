"""Residual block zoo: the standard block and four lightweight designs.

Every block maps (N, C, H, W) -> (N, C, H, W). Forwards are written
against the traced ops in :mod:`splitsr.autograd`, so the same code
path serves inference (raw arrays) and training (Vars).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import autograd as ag
from .kernels import round_half_up
from .tensor import ConvWeights, ShapeError


class BlockKind(enum.Enum):
    STANDARD_RESIDUAL = "standard"
    SPLIT_SR = "splitsr"
    SHUFFLE = "shuffle"
    IDLE = "idle"
    GHOST = "ghost"


@dataclass
class BlockParams:
    kind: BlockKind
    channels: int
    alpha: float = 1.0          # split ratio (squeeze ratio for Ghost)
    beta: float = 1.0           # Idle expansion ratio
    kernel_size: int = 3
    weights: List[ConvWeights] = field(default_factory=list)

    @property
    def param_count(self) -> int:
        return sum(w.param_count for w in self.weights)


def he_uniform(rng: np.random.Generator, c_out, c_in, kh, kw):
    fan_in = c_in * kh * kw
    bound = np.sqrt(6.0 / fan_in)
    k = rng.uniform(-bound, bound, size=(c_out, c_in, kh, kw))
    return k.astype(np.float32)


def _conv(rng, c_out, c_in, k, groups=1):
    pad = k // 2
    return ConvWeights(
        kernel=he_uniform(rng, c_out, c_in // groups, k, k),
        bias=np.zeros(c_out, dtype=np.float32),
        stride=1, padding=pad, groups=groups)


def make_block(kind: BlockKind, channels: int, alpha: float = 1.0,
               beta: float = 1.0, kernel_size: int = 3,
               rng: Optional[np.random.Generator] = None) -> BlockParams:
    """Construct a block with He-uniform kernels and zero biases."""
    rng = rng if rng is not None else np.random.default_rng(0)
    k, c = kernel_size, channels
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    a = round_half_up(alpha * c)
    if a < 1:
        raise ShapeError("active branch would have zero channels", axis="channel")
    if kind is BlockKind.STANDARD_RESIDUAL:
        ws = [_conv(rng, c, c, k), _conv(rng, c, c, k)]
    elif kind is BlockKind.SPLIT_SR:
        ws = [_conv(rng, a, a, k), _conv(rng, a, a, k)]
    elif kind is BlockKind.SHUFFLE:
        ws = [_conv(rng, a, a, 1), _conv(rng, a, a, k, groups=a),
              _conv(rng, a, a, 1)]
    elif kind is BlockKind.IDLE:
        e = round_half_up(beta * a)
        ws = [_conv(rng, e, a, 1), _conv(rng, e, e, k, groups=e),
              _conv(rng, a, e, 1)]
    elif kind is BlockKind.GHOST:
        ghosts = c - a
        ws = [_conv(rng, a, c, 1)]
        if ghosts > 0:
            ws.append(_conv(rng, ghosts, ghosts, k, groups=ghosts))
    else:
        raise ValueError(f"unknown block kind: {kind}")
    return BlockParams(kind=kind, channels=c, alpha=alpha, beta=beta,
                       kernel_size=kernel_size, weights=ws)


def _apply(x, w: ConvWeights):
    return ag.conv2d(x, w.kernel, w.bias, w.stride, w.padding, w.groups)


def standard_residual_block(x, p: BlockParams):
    """x + conv(relu(conv(x))), two full-width convolutions."""
    h = ag.relu(_apply(x, p.weights[0]))
    return ag.add(x, _apply(h, p.weights[1]))


def split_sr_block(x, p: BlockParams):
    """Channel split, conv-relu-conv residual on the active branch,

    reversed concatenation: processed channels become the last ones.
    """
    c = ag.val(x).shape[1]
    a = round_half_up(p.alpha * c)
    if a == c:
        return standard_residual_block(x, p)
    active, idle = ag.channel_split(x, a)
    h = ag.relu(_apply(active, p.weights[0]))
    active = ag.add(active, _apply(h, p.weights[1]))
    return ag.concat_channels(idle, active)


def shuffle_block(x, p: BlockParams):
    """Split, pointwise-depthwise-pointwise branch, concat, shuffle g=2."""
    c = ag.val(x).shape[1]
    a = round_half_up(p.alpha * c)
    active, idle = ag.channel_split(x, a)
    h = ag.relu(_apply(active, p.weights[0]))
    h = _apply(h, p.weights[1])
    h = ag.relu(_apply(h, p.weights[2]))
    out = ag.concat_channels(h, idle) if a < c else h
    return ag.channel_shuffle(out, 2)


def idle_block(x, p: BlockParams):
    """Split, inverted-residual branch (expand/depthwise/project), concat."""
    c = ag.val(x).shape[1]
    a = round_half_up(p.alpha * c)
    active, idle = ag.channel_split(x, a)
    h = ag.relu(_apply(active, p.weights[0]))
    h = ag.relu(_apply(h, p.weights[1]))
    h = _apply(h, p.weights[2])
    return ag.concat_channels(h, idle) if a < c else h


def ghost_block(x, p: BlockParams):
    """Pointwise intrinsic maps + depthwise ghost maps, concatenated.

    Ghost maps cyclically reuse intrinsic channels when they outnumber
    them.
    """
    c = ag.val(x).shape[1]
    a = round_half_up(p.alpha * c)
    intrinsic = _apply(x, p.weights[0])
    if a == c:
        return intrinsic
    ghosts = c - a
    src = ag.gather_channels(intrinsic, [j % a for j in range(ghosts)])
    ghost = _apply(src, p.weights[1])
    return ag.concat_channels(intrinsic, ghost)


_FORWARDS = {
    BlockKind.STANDARD_RESIDUAL: standard_residual_block,
    BlockKind.SPLIT_SR: split_sr_block,
    BlockKind.SHUFFLE: shuffle_block,
    BlockKind.IDLE: idle_block,
    BlockKind.GHOST: ghost_block,
}


def block_forward(x, p: BlockParams):
    return _FORWARDS[p.kind](x, p)
