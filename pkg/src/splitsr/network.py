"""Hybrid SR network: RCAN-derived skeleton (channel attention removed)

with residual groups whose blocks are either standard residual blocks
or one of the lightweight designs, per a declarative configuration.

Four stages: head conv (3 -> F), feature extraction (groups of blocks,
each group closed by a tail conv and a short skip, then a feature-
extraction tail conv with a long skip to the head output), upsampler
(conv F -> 4F + pixel shuffle x2, once per scale doubling), and an
output conv (F -> 3).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Iterator, List, Tuple

import numpy as np

from . import autograd as ag
from .blocks import (BlockKind, BlockParams, block_forward, he_uniform,
                     make_block)
from .kernels import round_half_up
from .tensor import ConvWeights, ShapeError, Tensor

HYBRID_MODES = ("front", "end", "mixed")
REPLACEMENT_LOCATIONS = ("fe", "fe+upsampling", "throughout")


@dataclass
class NetworkConfig:
    scale: int = 4
    feature_maps: int = 16
    groups: int = 5
    blocks_per_group: int = 6
    alpha: float = 0.25
    hybrid_index: int = 3
    hybrid_mode: str = "front"
    replacement_location: str = "fe"
    block_kind: str = BlockKind.SPLIT_SR.value
    beta: float = 1.0
    mean_shift: bool = False

    def __post_init__(self):
        if self.scale not in (2, 4):
            raise ValueError(f"scale must be 2 or 4, got {self.scale}")
        if self.hybrid_mode not in HYBRID_MODES:
            raise ValueError(f"unknown hybrid_mode {self.hybrid_mode!r}")
        if self.replacement_location not in REPLACEMENT_LOCATIONS:
            raise ValueError(
                f"unknown replacement_location {self.replacement_location!r}")
        if not 0 <= self.hybrid_index <= self.groups:
            raise ValueError("hybrid_index must lie in [0, groups]")
        BlockKind(self.block_kind)  # raises on unknown kind

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(**d)

    @classmethod
    def parse(cls, text: str) -> "NetworkConfig":
        """Accept JSON or key=value lines mirroring the field names."""
        text = text.strip()
        if text.startswith("{"):
            return cls.from_dict(json.loads(text))
        d: dict = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            d[key.strip()] = value.strip()
        fields = {f.name: f.type for f in cls.__dataclass_fields__.values()}
        parsed = {}
        for key, value in d.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            default = getattr(cls(), key)
            if isinstance(default, bool):
                parsed[key] = value.lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                parsed[key] = int(value)
            elif isinstance(default, float):
                parsed[key] = float(value)
            else:
                parsed[key] = value
        return cls(**parsed)


PRESETS = {
    "accuracy": NetworkConfig(scale=4, feature_maps=16, groups=7,
                              blocks_per_group=7, alpha=0.25, hybrid_index=3,
                              hybrid_mode="front", replacement_location="fe"),
    "latency": NetworkConfig(scale=4, feature_maps=16, groups=5,
                             blocks_per_group=6, alpha=0.25, hybrid_index=3,
                             hybrid_mode="front", replacement_location="fe"),
}


def preset(name: str) -> NetworkConfig:
    try:
        return NetworkConfig(**PRESETS[name].to_dict())
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; have {sorted(PRESETS)}")


@dataclass
class ResidualGroup:
    blocks: List[BlockParams]
    tail: ConvWeights


@dataclass
class Network:
    config: NetworkConfig
    head: ConvWeights
    groups: List[ResidualGroup]
    fe_tail: ConvWeights
    upsample: List[ConvWeights]  # each followed by pixel shuffle r=2
    output_conv: ConvWeights


# ---------------------------------------------------------------------------
# Planning and construction
# ---------------------------------------------------------------------------

def plan_groups(config: NetworkConfig) -> List[str]:
    """Per-group placement: 'lightweight' or 'standard'."""
    g, hi = config.groups, config.hybrid_index
    if hi > g:
        raise ValueError("hybrid_index exceeds group count")
    light = set()
    if config.hybrid_mode == "front":
        light = set(range(hi))
    elif config.hybrid_mode == "end":
        light = set(range(g - hi, g))
    else:  # mixed: regular spacing across the group list
        for i in range(hi):
            idx = 0 if hi == 1 else round_half_up(i * (g - 1) / (hi - 1))
            while idx in light:  # overflow pushed to the next free slot
                idx += 1
            light.add(idx)
    return ["lightweight" if i in light else "standard" for i in range(g)]


def _conv(rng, c_out, c_in, k=3, groups=1):
    return ConvWeights(
        kernel=he_uniform(rng, c_out, c_in // groups, k, k),
        bias=np.zeros(c_out, dtype=np.float32),
        stride=1, padding=k // 2, groups=groups)


def build(config: NetworkConfig, seed: int = 0) -> Network:
    rng = np.random.default_rng(seed)
    f = config.feature_maps
    a = round_half_up(config.alpha * f)
    loc = config.replacement_location
    split_tails = loc == "throughout"
    split_ups = loc in ("fe+upsampling", "throughout")

    head = _conv(rng, f, 3)
    kind = BlockKind(config.block_kind)
    groups = []
    for placement in plan_groups(config):
        blocks = []
        for _ in range(config.blocks_per_group):
            if placement == "lightweight":
                blocks.append(make_block(kind, f, alpha=config.alpha,
                                         beta=config.beta, rng=rng))
            else:
                blocks.append(make_block(BlockKind.STANDARD_RESIDUAL, f,
                                         rng=rng))
        tail = _conv(rng, f, a if split_tails else f)
        groups.append(ResidualGroup(blocks=blocks, tail=tail))
    fe_tail = _conv(rng, f, a if split_tails else f)

    stages = 1 if config.scale == 2 else 2
    upsample = [_conv(rng, 4 * f, a if split_ups else f) for _ in range(stages)]
    output_conv = _conv(rng, 3, a if split_tails else f)
    return Network(config=config, head=head, groups=groups, fe_tail=fe_tail,
                   upsample=upsample, output_conv=output_conv)


# ---------------------------------------------------------------------------
# Forward
# ---------------------------------------------------------------------------

def _apply(x, w: ConvWeights):
    """Apply a conv; if it expects fewer channels than x carries, it is a

    split variant and consumes only the first c_in channels.
    """
    c = ag.val(x).shape[1]
    if w.c_in < c:
        x, _ = ag.channel_split(x, w.c_in)
    return ag.conv2d(x, w.kernel, w.bias, w.stride, w.padding, w.groups)


def run(net: Network, x):
    """Forward on a raw array or Var; returns the same flavor."""
    if net.config.mean_shift:
        x = ag.add(x, -np.float32(127.5))
    h0 = _apply(x, net.head)
    h = h0
    for grp in net.groups:
        gin = h
        for blk in grp.blocks:
            h = block_forward(h, blk)
        h = _apply(h, grp.tail)
        h = ag.add(h, gin)
    h = _apply(h, net.fe_tail)
    h = ag.add(h, h0)
    for up in net.upsample:
        h = _apply(h, up)
        h = ag.pixel_shuffle(h, 2)
    y = _apply(h, net.output_conv)
    if net.config.mean_shift:
        y = ag.add(y, np.float32(127.5))
    return y


def forward(net: Network, lr_image: Tensor) -> Tensor:
    if lr_image.shape[1] != 3:
        raise ShapeError(
            f"network input must have 3 channels, got {lr_image.shape[1]}",
            axis="channel")
    return Tensor(run(net, lr_image.data))


# ---------------------------------------------------------------------------
# Introspection
# ---------------------------------------------------------------------------

def iter_stages(net: Network) -> Iterator[Tuple[str, list, int]]:
    """Yield (stage name, convs/blocks, spatial scale applied after)."""
    yield "head", [net.head], 1
    for i, grp in enumerate(net.groups):
        yield f"group{i}", list(grp.blocks) + [grp.tail], 1
    yield "fe_tail", [net.fe_tail], 1
    for i, up in enumerate(net.upsample):
        yield f"upsample{i}", [up], 2
    yield "output", [net.output_conv], 1


def named_weights(net: Network) -> Iterator[Tuple[str, ConvWeights]]:
    yield "head", net.head
    for i, grp in enumerate(net.groups):
        for j, blk in enumerate(grp.blocks):
            for k, w in enumerate(blk.weights):
                yield f"group{i}.block{j}.conv{k}", w
        yield f"group{i}.tail", grp.tail
    yield "fe_tail", net.fe_tail
    for i, up in enumerate(net.upsample):
        yield f"upsample{i}", up
    yield "output", net.output_conv


def param_count(net: Network) -> int:
    return sum(w.param_count for _, w in named_weights(net))
