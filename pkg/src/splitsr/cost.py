"""Analytical cost model: parameter/MAC counting and the closed-form

computation-reduction ratios of the four lightweight block designs.

MACs count multiply-accumulates of convolutions only (additions,
activations and resizes excluded); parameters count every weight and
bias element. Reduction ratios are normalized against the standard
3x3 full-width convolution(s) a block replaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .blocks import BlockKind, BlockParams
from .tensor import ConvWeights


# ---------------------------------------------------------------------------
# Closed-form reduction ratios
# ---------------------------------------------------------------------------

def reduction_shuffle(alpha1: float, d_k: int, n: int) -> float:
    return 1.0 / (2 * d_k * d_k) + alpha1 / n


def reduction_idle(alpha1: float, beta: float, d_k: int, n: int) -> float:
    return 2 * beta * alpha1 ** 2 / (d_k * d_k) + alpha1 * beta / n


def reduction_ghost(alpha2: float, d_k: int, m: int) -> float:
    return alpha2 / (d_k * d_k) + (1 - alpha2) / m


def reduction_split(alpha: float) -> float:
    return alpha ** 2


def reductions_for(channels: int, alpha: float = 0.5, beta: float = 1.0,
                   d_k: int = 3) -> Dict[str, float]:
    return {
        BlockKind.SPLIT_SR.value: reduction_split(alpha),
        BlockKind.SHUFFLE.value: reduction_shuffle(alpha, d_k, channels),
        BlockKind.IDLE.value: reduction_idle(alpha, beta, d_k, channels),
        BlockKind.GHOST.value: reduction_ghost(alpha, d_k, channels),
    }


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------

@dataclass
class CostReport:
    params: int
    macs: int
    per_stage: List[Tuple[str, int, int]] = field(default_factory=list)
    reductions: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "macs": self.macs,
            "per_stage": [
                {"stage": s, "params": p, "macs": m}
                for s, p, m in self.per_stage
            ],
            "reductions": dict(self.reductions),
        }


def conv_macs(w: ConvWeights, h: int, wdt: int) -> int:
    co, cig, kh, kw = w.kernel.shape
    ho = (h + 2 * w.padding - kh) // w.stride + 1
    wo = (wdt + 2 * w.padding - kw) // w.stride + 1
    return co * cig * kh * kw * ho * wo


def count_block(p: BlockParams, h: int, w: int) -> Tuple[int, int]:
    """(params, macs) of one shape-preserving block at h x w."""
    params = sum(cw.param_count for cw in p.weights)
    macs = sum(conv_macs(cw, h, w) for cw in p.weights)
    return params, macs


def standard_conv_macs(channels: int, d_k: int, h: int, w: int) -> int:
    """MACs of one full-width d_k x d_k conv, the reduction denominator."""
    return channels * channels * d_k * d_k * h * w


def counted_ratio(p: BlockParams, h: int = 16, w: int = 16,
                  include_bias: bool = False) -> float:
    """Counted-MAC cost of a block relative to the standard convs it

    replaces: two full-width convs for the standard/split residual
    blocks, one for the single-unit shuffle/idle/ghost designs.
    """
    _, macs = count_block(p, h, w)
    if include_bias:
        macs += sum(cw.c_out * h * w for cw in p.weights)
    units = 2 if p.kind in (BlockKind.SPLIT_SR, BlockKind.STANDARD_RESIDUAL) else 1
    denom = units * standard_conv_macs(p.channels, p.kernel_size, h, w)
    return macs / denom


def count(net, input_hw: Tuple[int, int] = (24, 24)) -> CostReport:
    """CostReport for a built network at the given LR input size."""
    from .network import iter_stages  # local import to avoid a cycle

    h, w = input_hw
    per_stage: List[Tuple[str, int, int]] = []
    total_p = total_m = 0
    for stage_name, items, scale_after in iter_stages(net):
        sp = sm = 0
        for item in items:
            if isinstance(item, BlockParams):
                p, m = count_block(item, h, w)
            else:
                p, m = item.param_count, conv_macs(item, h, w)
            sp += p
            sm += m
        per_stage.append((stage_name, sp, sm))
        total_p += sp
        total_m += sm
        h, w = h * scale_after, w * scale_after
    report = CostReport(params=total_p, macs=total_m, per_stage=per_stage)
    report.reductions = reductions_for(net.config.feature_maps,
                                       alpha=net.config.alpha)
    return report
