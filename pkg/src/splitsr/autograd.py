"""Minimal reverse-mode tape over the fixed op set.

Not a general autodiff engine: only the primitives the SR networks use
are traced. Ops accept either raw ndarrays or :class:`Var`s; a graph is
recorded only where a Var flows in, so inference on plain arrays pays
no tracing cost.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class Var:
    """A traced value: ndarray payload plus (parent, vjp) edges."""

    __slots__ = ("value", "parents", "grad")

    def __init__(self, value, parents=()):
        self.value = np.asarray(value)
        self.parents = tuple(parents)
        self.grad = None


def val(x):
    return x.value if isinstance(x, Var) else x


def _emit(value, edges):
    live = [(p, fn) for p, fn in edges if isinstance(p, Var)]
    return Var(value, live) if live else value


def backward(root: Var, seed=None):
    """Accumulate grads into every Var reachable from root."""
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if isinstance(parent, Var):
                stack.append((parent, False))
    root.grad = np.ones_like(root.value) if seed is None else np.asarray(seed)
    for node in reversed(order):
        g = node.grad
        for parent, fn in node.parents:
            pg = fn(g)
            parent.grad = pg if parent.grad is None else parent.grad + pg


# ---------------------------------------------------------------------------
# Traced primitives
# ---------------------------------------------------------------------------

def conv2d(x, kernel, bias, stride=1, padding=0, groups=1):
    xv, kv = val(x), val(kernel)
    bv = val(bias) if bias is not None else None
    kv = kv.astype(xv.dtype, copy=False)
    y = kernels.conv2d(xv, kv, None if bv is None else bv.astype(xv.dtype), stride,
                       padding, groups)
    edges = [
        (x, lambda g: kernels.conv2d_backward(
            xv, kv, stride, padding, groups, g,
            need_w=False, need_b=False)[0]),
        (kernel, lambda g: kernels.conv2d_backward(
            xv, kv, stride, padding, groups, g,
            need_x=False, need_b=False)[1]),
    ]
    if bias is not None:
        edges.append((bias, lambda g: g.sum(axis=(0, 2, 3))))
    return _emit(y, edges)


def relu(x):
    xv = val(x)
    y = np.maximum(xv, 0)
    return _emit(y, [(x, lambda g: g * (xv > 0))])


def add(a, b):
    y = val(a) + val(b)
    return _emit(y, [(a, lambda g: g), (b, lambda g: g)])


def channel_split(x, k):
    """Split at channel k; returns (first, rest)."""
    xv = val(x)
    first = _emit(xv[:, :k],
                  [(x, lambda g: np.concatenate(
                      [g, np.zeros_like(xv[:, k:])], axis=1))])
    rest = _emit(xv[:, k:],
                 [(x, lambda g: np.concatenate(
                     [np.zeros_like(xv[:, :k]), g], axis=1))])
    return first, rest


def concat_channels(a, b):
    av, bv = val(a), val(b)
    ka = av.shape[1]
    y = np.concatenate([av, bv], axis=1)
    return _emit(y, [(a, lambda g: g[:, :ka]), (b, lambda g: g[:, ka:])])


def channel_shuffle(x, g):
    xv = val(x)
    perm = kernels.shuffle_permutation(xv.shape[1], g)
    inv = np.argsort(perm)
    return _emit(xv[:, perm], [(x, lambda gr: gr[:, inv])])


def gather_channels(x, idx):
    """Select channels by index, with duplicates (scatter-add VJP)."""
    xv = val(x)
    idx = np.asarray(idx)

    def back(g):
        out = np.zeros_like(xv)
        np.add.at(out, (slice(None), idx), g)
        return out

    return _emit(xv[:, idx], [(x, back)])


def pixel_shuffle(x, r):
    xv = val(x)
    return _emit(kernels.pixel_shuffle(xv, r),
                 [(x, lambda g: kernels.pixel_unshuffle(g, r))])


def l1_loss(pred, target):
    pv, tv = val(pred), val(target)
    diff = pv - tv
    y = np.abs(diff).mean()
    # subgradient at 0 fixed to 0 via sign()
    return _emit(y, [(pred, lambda g: g * np.sign(diff) / diff.size),
                     (target, lambda g: -g * np.sign(diff) / diff.size)])
