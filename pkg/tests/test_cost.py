"""Cost model: closed-form reduction ratios and counted-MAC agreement."""

import numpy as np
import pytest

from splitsr.blocks import BlockKind, make_block
from splitsr.cost import (count, count_block, counted_ratio, reduction_ghost,
                          reduction_idle, reduction_shuffle, reduction_split)
from splitsr.network import build, preset
from splitsr.tensor import ConvWeights


class TestReductionFormulas:
    def test_shuffle_worked_values(self):
        assert reduction_shuffle(0.5, 3, 16) == pytest.approx(
            1 / 18 + 0.5 / 16)
        assert reduction_shuffle(0.5, 3, 16) == pytest.approx(0.0868055, abs=1e-6)
        assert reduction_shuffle(0.5, 3, 64) == pytest.approx(0.0633680, abs=1e-6)

    def test_shuffle_large_n_limit(self):
        assert reduction_shuffle(0.5, 3, 10 ** 9) == pytest.approx(1 / 18)

    def test_idle_worked_values(self):
        assert reduction_idle(0.5, 1, 3, 16) == pytest.approx(
            reduction_shuffle(0.5, 3, 16))
        assert reduction_idle(0.25, 1, 3, 16) == pytest.approx(
            2 * 0.0625 / 9 + 0.25 / 16)
        assert reduction_idle(0.5, 2, 3, 16) == pytest.approx(
            2 * reduction_idle(0.5, 1, 3, 16))

    def test_idle_equals_shuffle_only_at_half(self):
        assert reduction_idle(0.5, 1, 3, 16) == reduction_shuffle(0.5, 3, 16)
        assert reduction_idle(0.25, 1, 3, 16) != reduction_shuffle(0.25, 3, 16)

    def test_ghost_worked_values(self):
        assert reduction_ghost(1.0, 3, 16) == pytest.approx(1 / 9)
        assert reduction_ghost(0.5, 3, 16) == pytest.approx(0.5 / 9 + 0.5 / 16)
        assert reduction_ghost(0.5, 3, 64) == pytest.approx(0.0633680, abs=1e-6)

    def test_split_values(self):
        assert reduction_split(0.25) == 0.0625
        assert reduction_split(1.0) == 1.0
        assert reduction_split(0.5) == 0.25


FORMULAS = {
    BlockKind.SPLIT_SR: lambda c: reduction_split(0.5),
    BlockKind.SHUFFLE: lambda c: reduction_shuffle(0.5, 3, c),
    BlockKind.IDLE: lambda c: reduction_idle(0.5, 1.0, 3, c),
    BlockKind.GHOST: lambda c: reduction_ghost(0.5, 3, c),
}


class TestCountedRatios:
    @pytest.mark.parametrize("kind", list(FORMULAS))
    def test_converges_to_formula(self, kind):
        """Counted MACs (biases folded in) vs the closed form: < 5%

        relative gap at 256 channels, non-increasing over 16/64/256.
        """
        gaps = []
        for c in (16, 64, 256):
            p = make_block(kind, c, alpha=0.5)
            ratio = counted_ratio(p, include_bias=True)
            want = FORMULAS[kind](c)
            gaps.append(abs(ratio - want) / want)
        assert gaps[-1] < 0.05
        assert gaps[0] >= gaps[1] >= gaps[2]

    def test_split_ratio_exact_at_64(self):
        p = make_block(BlockKind.SPLIT_SR, 64, alpha=0.5)
        ratio = counted_ratio(p, include_bias=True)
        assert abs(ratio - 0.25) / 0.25 < 0.01

    def test_split_ratio_exact_without_bias(self):
        for alpha in (0.125, 0.25, 0.5, 1.0):
            p = make_block(BlockKind.SPLIT_SR, 64, alpha=alpha)
            assert counted_ratio(p) == pytest.approx(alpha ** 2)


class TestCounting:
    def test_standard_conv_counts(self):
        w = ConvWeights(kernel=np.zeros((16, 16, 3, 3), dtype=np.float32),
                        bias=np.zeros(16, dtype=np.float32), padding=1)
        assert w.param_count == 2320
        from splitsr.cost import conv_macs
        assert conv_macs(w, 96, 96) == 3 * 3 * 16 * 16 * 96 * 96 == 21233664

    def test_latency_network_params(self):
        net = build(preset("latency"))
        report = count(net, (24, 24))
        assert abs(report.params - 94000) / 94000 < 0.02

    def test_per_stage_sums_to_total(self):
        net = build(preset("latency"))
        report = count(net, (24, 24))
        assert sum(p for _, p, _ in report.per_stage) == report.params
        assert sum(m for _, _, m in report.per_stage) == report.macs

    def test_reductions_in_range(self):
        net = build(preset("latency"))
        report = count(net)
        for ratio in report.reductions.values():
            assert 0 < ratio <= 1

    def test_block_count_matches_param_count(self):
        p = make_block(BlockKind.SPLIT_SR, 16, alpha=0.25)
        params, macs = count_block(p, 10, 10)
        assert params == 296
        assert macs == 2 * (3 * 3 * 4 * 4 * 10 * 10)
