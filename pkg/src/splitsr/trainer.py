"""Toy-scale training: L1 loss, bias-corrected Adam with halving decay,

paired patch batches, and an optional x2 pre-training phase whose head
and body weights seed the x4 model.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from . import autograd as ag
from .data import ImagePair, sample_batch
from .network import Network, NetworkConfig, build, named_weights, run


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    batch_size: int = 16
    hr_patch: int = 96
    steps: int = 2000
    decay: Optional[int] = None  # default steps // 3; lr halves each period
    seed: int = 0

    def __post_init__(self):
        if self.decay is None:
            self.decay = max(self.steps // 3, 1)
        for name in ("learning_rate", "beta1", "beta2", "epsilon",
                     "batch_size", "hr_patch", "steps", "decay"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class DivergenceError(RuntimeError):
    pass


def l1_loss(pred, target):
    """Mean absolute error; traced when either side is a Var."""
    return ag.l1_loss(pred, target)


@dataclass
class OptimizerState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0


def init_adam(params: List[np.ndarray]) -> OptimizerState:
    return OptimizerState(m=[np.zeros_like(p, dtype=np.float64) for p in params],
                          v=[np.zeros_like(p, dtype=np.float64) for p in params])


def adam_step(params: List[np.ndarray], grads: List[np.ndarray],
              state: OptimizerState, config: TrainConfig) -> None:
    """In-place bias-corrected Adam update with halving lr decay."""
    state.step += 1
    t = state.step
    lr = config.learning_rate * 0.5 ** ((t - 1) // config.decay)
    b1, b2 = config.beta1, config.beta2
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * g * g
        mhat = state.m[i] / (1 - b1 ** t)
        vhat = state.v[i] / (1 - b2 ** t)
        p -= (lr * mhat / (np.sqrt(vhat) + config.epsilon)).astype(p.dtype)


def _collect_params(net: Network) -> List[np.ndarray]:
    params = []
    for _, w in named_weights(net):
        params.append(w.kernel)
        if w.bias is not None:
            params.append(w.bias)
    return params


def train(net: Network, dataset: List[ImagePair], config: TrainConfig
          ) -> List[Tuple[int, float, float]]:
    """Optimize the network in place; returns the (step, lr, loss) trace."""
    rng = np.random.default_rng(config.seed)
    params = _collect_params(net)
    state = init_adam(params)
    trace: List[Tuple[int, float, float]] = []
    scale = net.config.scale
    for step in range(config.steps):
        lr_b, hr_b = sample_batch(dataset, config.batch_size, config.hr_patch,
                                  scale, rng)
        pvars = [ag.Var(p) for p in params]
        it = iter(pvars)
        for _, w in named_weights(net):
            w.kernel = next(it)
            if w.bias is not None:
                w.bias = next(it)
        try:
            loss = ag.l1_loss(run(net, lr_b), hr_b)
            loss_val = float(ag.val(loss))
            if not np.isfinite(loss_val):
                raise DivergenceError(
                    f"loss diverged to {loss_val} at step {step}")
            ag.backward(loss)
            grads = [v.grad if v.grad is not None else np.zeros_like(v.value)
                     for v in pvars]
        finally:
            it = iter(params)
            for _, w in named_weights(net):
                w.kernel = next(it)
                if w.bias is not None:
                    w.bias = next(it)
        adam_step(params, grads, state, config)
        lr_now = config.learning_rate * 0.5 ** (step // config.decay)
        trace.append((step, lr_now, loss_val))
    return trace


def pretrain_x2_then_train(config4: NetworkConfig, dataset2, dataset4,
                           train_cfg2: TrainConfig, train_cfg4: TrainConfig,
                           seed: int = 0):
    """Two-phase schedule: train a x2 twin first, transfer head + body

    (+ feature-extraction tail and output conv; the upsampler is shape-
    incompatible and reinitialized), then train at x4.
    """
    cfg2 = replace(config4, scale=2)
    net2 = build(cfg2, seed=seed)
    trace2 = train(net2, dataset2, train_cfg2)
    net4 = build(config4, seed=seed)
    net4.head = net2.head
    net4.groups = net2.groups
    net4.fe_tail = net2.fe_tail
    net4.output_conv = net2.output_conv
    trace4 = train(net4, dataset4, train_cfg4)
    return net4, trace2, trace4


def write_trace_csv(trace, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "lr", "loss"])
        writer.writerows(trace)
