"""Every vjp against central finite differences in wide precision."""

import numpy as np
import pytest

from splitsr import autograd as ag
from splitsr import network
from splitsr.network import NetworkConfig, build, named_weights
from splitsr.trainer import _collect_params

RTOL = 1e-5
RTOL_SMALL = 1e-4  # where the true derivative magnitude is tiny


def finite_diff(f, x, h=1e-6):
    """Central-difference gradient of scalar f at x (elementwise)."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.ravel()
    gf = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2 * h)
    return g


def check_grad(f_traced, f_plain, x, rtol=RTOL):
    """Compare backward() grads to finite differences, elementwise."""
    xv = ag.Var(np.asarray(x, dtype=np.float64))
    out = f_traced(xv)
    ag.backward(out)
    fd = finite_diff(f_plain, x)
    got = xv.grad
    denom = np.maximum(np.abs(fd), 1e-8)
    rel = np.abs(got - fd) / denom
    tol = np.where(np.abs(fd) < 1e-8, RTOL_SMALL, rtol)
    assert np.all(rel < tol), f"max rel err {rel.max()}"


def scalarize(y):
    """Weighted sum so the seed cotangent exercises all elements."""
    w = np.cos(np.arange(np.asarray(ag.val(y)).size)).reshape(
        np.asarray(ag.val(y)).shape)
    if isinstance(y, ag.Var):
        return ag.Var((ag.val(y) * w).sum(), [(y, lambda g: g * w)])
    return (y * w).sum()


RNG = np.random.default_rng(42)


class TestPrimitiveVjps:
    def test_relu(self):
        x = RNG.uniform(-1, 1, (2, 3, 4, 4))
        x[np.abs(x) < 1e-3] = 0.5  # stay away from the kink
        check_grad(lambda v: scalarize(ag.relu(v)),
                   lambda v: scalarize(np.maximum(v, 0)), x)

    def test_relu_positive_passthrough(self):
        x = np.abs(RNG.uniform(0.1, 1, (1, 2, 2, 2)))
        xv = ag.Var(x)
        y = ag.relu(xv)
        ag.backward(y, seed=np.full_like(x, 2.5))
        assert np.array_equal(xv.grad, np.full_like(x, 2.5))

    def test_pixel_shuffle_is_permutation_adjoint(self):
        x = RNG.uniform(-1, 1, (1, 8, 3, 3))
        xv = ag.Var(x)
        y = ag.pixel_shuffle(xv, 2)
        seed = RNG.uniform(-1, 1, ag.val(y).shape)
        ag.backward(y, seed=seed)
        from splitsr.kernels import pixel_unshuffle
        assert np.array_equal(xv.grad, pixel_unshuffle(seed, 2))

    @pytest.mark.parametrize("groups,stride,pad,k", [
        (1, 1, 1, 3), (1, 2, 0, 3), (2, 1, 1, 3), (4, 1, 1, 3), (1, 1, 0, 1),
    ])
    def test_conv2d_kernel_and_input_grads(self, groups, stride, pad, k):
        ci, co = 4, 4
        x = RNG.uniform(-1, 1, (1, ci, 5, 5))
        kern = RNG.uniform(-1, 1, (co, ci // groups, k, k))
        bias = RNG.uniform(-1, 1, co)

        def traced(v, kv, bv):
            return scalarize(ag.conv2d(v, kv, bv, stride, pad, groups))

        from splitsr import kernels
        def plain(xx, kk, bb):
            return scalarize(kernels.conv2d(xx, kk, bb, stride, pad, groups))

        xv, kv, bv = ag.Var(x), ag.Var(kern), ag.Var(bias)
        ag.backward(traced(xv, kv, bv))
        for var, arr, f in (
                (xv, x, lambda v: plain(v, kern, bias)),
                (kv, kern, lambda v: plain(x, v, bias)),
                (bv, bias, lambda v: plain(x, kern, v))):
            fd = finite_diff(f, arr)
            denom = np.maximum(np.abs(fd), 1e-8)
            rel = np.abs(var.grad - fd) / denom
            tol = np.where(np.abs(fd) < 1e-8, RTOL_SMALL, RTOL)
            assert np.all(rel < tol)

    def test_conv2d_kernel_grad_tiny_case(self):
        # 1x1x2x2 input, per the finite-difference oracle example
        x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
        kern = RNG.uniform(-1, 1, (1, 1, 2, 2))
        from splitsr import kernels
        kv = ag.Var(kern)
        out = scalarize(ag.conv2d(x, kv, None, 1, 0, 1))
        ag.backward(out)
        fd = finite_diff(
            lambda v: scalarize(kernels.conv2d(x, v, None, 1, 0, 1)), kern)
        rel = np.abs(kv.grad - fd) / np.maximum(np.abs(fd), 1e-8)
        assert rel.max() < RTOL

    def test_channel_split_concat(self):
        x = RNG.uniform(-1, 1, (1, 6, 3, 3))

        def traced(v):
            a, b = ag.channel_split(v, 2)
            return scalarize(ag.concat_channels(b, a))

        def plain(v):
            return scalarize(np.concatenate([v[:, 2:], v[:, :2]], axis=1))

        check_grad(traced, plain, x)

    def test_channel_shuffle(self):
        x = RNG.uniform(-1, 1, (1, 8, 2, 2))
        from splitsr.kernels import shuffle_permutation
        perm = shuffle_permutation(8, 2)
        check_grad(lambda v: scalarize(ag.channel_shuffle(v, 2)),
                   lambda v: scalarize(v[:, perm]), x)

    def test_gather_channels_scatter_adds(self):
        x = RNG.uniform(-1, 1, (1, 3, 2, 2))
        idx = [0, 1, 2, 0, 1]
        check_grad(lambda v: scalarize(ag.gather_channels(v, idx)),
                   lambda v: scalarize(v[:, idx]), x)

    def test_add(self):
        x = RNG.uniform(-1, 1, (1, 2, 3, 3))
        y = RNG.uniform(-1, 1, (1, 2, 3, 3))
        check_grad(lambda v: scalarize(ag.add(v, y)),
                   lambda v: scalarize(v + y), x)

    def test_l1_loss_gradient(self):
        pred = RNG.uniform(-1, 1, (1, 2, 4, 4))
        target = RNG.uniform(-1, 1, (1, 2, 4, 4))
        # keep every coordinate away from the |.| kink
        pred[np.abs(pred - target) < 1e-3] += 0.01
        check_grad(lambda v: ag.l1_loss(v, target),
                   lambda v: np.abs(v - target).mean(), pred)

    def test_unsupported_op_raises(self):
        from splitsr.tensor import vjp
        with pytest.raises(NotImplementedError):
            vjp("batch_norm", (), None)


class TestCompositeGradient:
    def test_l1_of_forward_micro_network(self):
        """End-to-end gradient through a 1-group, 1-block network."""
        cfg = NetworkConfig(scale=2, feature_maps=4, groups=1,
                            blocks_per_group=1, alpha=0.5, hybrid_index=1)
        net = build(cfg, seed=0)
        for _, w in named_weights(net):
            w.kernel = w.kernel.astype(np.float64)
            w.bias = w.bias.astype(np.float64)
        x = RNG.uniform(0, 255, (1, 3, 8, 8))
        target = RNG.uniform(0, 255, (1, 3, 16, 16))

        params = _collect_params(net)
        pvars = [ag.Var(p) for p in params]
        it = iter(pvars)
        for _, w in named_weights(net):
            w.kernel = next(it)
            w.bias = next(it)
        loss = ag.l1_loss(network.run(net, x), target)
        ag.backward(loss)
        grads = [v.grad if v.grad is not None else np.zeros_like(v.value)
                 for v in pvars]
        it = iter(params)
        for _, w in named_weights(net):
            w.kernel = next(it)
            w.bias = next(it)

        rng = np.random.default_rng(7)
        h = 1e-6
        checked = 0
        for arr, grad in zip(params, grads):
            flat = arr.ravel()
            gflat = grad.ravel()
            for i in rng.choice(flat.size, size=min(4, flat.size),
                                replace=False):
                orig = flat[i]
                flat[i] = orig + h
                fp = float(ag.val(ag.l1_loss(network.run(net, x), target)))
                flat[i] = orig - h
                fm = float(ag.val(ag.l1_loss(network.run(net, x), target)))
                flat[i] = orig
                fd = (fp - fm) / (2 * h)
                if abs(fd) < 1e-6:  # skip coordinates near an L1 kink
                    continue
                assert abs(gflat[i] - fd) / abs(fd) < 1e-3
                checked += 1
        assert checked > 20
