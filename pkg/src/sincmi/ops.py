"""Structured network operations on 4-d activation tensors.

Activations are laid out (batch, map, channel, time). Convolutions use the
cross-correlation convention (no kernel flip); "same" padding is zero
padding of K-1 total, split floor left / ceil right. No operation carries
a bias term.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, Tensor, accumulate, from_op


def _require(cond, msg):
    if not cond:
        raise ShapeError(msg)


def conv_temporal(x, kernels, mode="same"):
    """Cross-correlate along the time axis.

    x: (B, Fin, C, T). kernels: (F, K). With Fin == 1 each kernel is
    applied to the single input map (a filter bank producing F maps);
    with Fin == F kernel f is applied to map f only (depthwise).
    """
    _require(x.ndim == 4, f"conv_temporal input must be 4-d, got {x.ndim}-d")
    _require(kernels.ndim == 2, f"kernels must be 2-d, got {kernels.ndim}-d")
    if mode not in ("same", "valid"):
        raise ValueError(f"unknown mode {mode!r}")
    B, Fin, C, T = x.shape
    F, K = kernels.shape
    # same mode tolerates K > T (the padded extent still covers the kernel)
    _require(mode == "same" or K <= T,
             f"kernel length {K} exceeds time extent {T} (time axis)")
    _require(Fin in (1, F), f"map axis mismatch: input has {Fin} maps, kernels {F}")

    left = (K - 1) // 2 if mode == "same" else 0
    right = (K - 1) - left if mode == "same" else 0
    xp = np.pad(x.data, ((0, 0), (0, 0), (0, 0), (left, right)))
    win = sliding_window_view(xp, K, axis=3)  # (B, Fin, C, Tout, K)
    spec = "bmctk,fk->bfct" if Fin == 1 else "bfctk,fk->bfct"
    y = np.einsum(spec, win, kernels.data, optimize=True)

    def backward(g):
        if kernels.requires_grad:
            kspec = "bfct,bmctk->fk" if Fin == 1 else "bfct,bfctk->fk"
            accumulate(kernels, np.einsum(kspec, g, win, optimize=True))
        if x.requires_grad:
            gp = np.pad(g, ((0, 0), (0, 0), (0, 0), (K - 1, K - 1)))
            gw = sliding_window_view(gp, K, axis=3)
            kf = np.ascontiguousarray(kernels.data[:, ::-1])
            if Fin == 1:
                dxp = np.einsum("bfctk,fk->bct", gw, kf, optimize=True)[:, None]
            else:
                dxp = np.einsum("bfctk,fk->bfct", gw, kf, optimize=True)
            accumulate(x, dxp[..., left:left + T])

    return from_op(y, (x, kernels), backward)


def depthwise_conv(x, weights, spatial):
    """Depthwise convolution: each output map sees exactly one input map.

    spatial=True: x (B, F1, C, T), weights (F1, D, C); a valid (C, 1)
    convolution that collapses the channel axis and yields D spatial
    filters per band, output (B, D*F1, 1, T).

    spatial=False: x (B, M, 1, T), weights (M, K); a same-padded (1, K)
    convolution along time, one kernel per map.
    """
    if spatial:
        _require(x.ndim == 4, f"depthwise input must be 4-d, got {x.ndim}-d")
        _require(weights.ndim == 3, f"spatial weights must be 3-d, got {weights.ndim}-d")
        B, F1, C, T = x.shape
        Fw, D, Cw = weights.shape
        _require(Cw == C, f"channel axis mismatch: input C={C}, weights C={Cw}")
        _require(Fw == F1, f"map axis mismatch: input F1={F1}, weights F1={Fw}")
        y = np.einsum("bfct,fdc->bfdt", x.data, weights.data, optimize=True)
        y = y.reshape(B, F1 * D, 1, T)

        def backward(g):
            gr = g.reshape(B, F1, D, T)
            if weights.requires_grad:
                accumulate(weights, np.einsum("bfdt,bfct->fdc", gr, x.data, optimize=True))
            if x.requires_grad:
                accumulate(x, np.einsum("bfdt,fdc->bfct", gr, weights.data, optimize=True))

        return from_op(y, (x, weights), backward)

    B, M, C, T = x.shape
    _require(C == 1, f"temporal depthwise expects a collapsed channel axis, got C={C}")
    _require(weights.shape[0] == M, f"map axis mismatch: input M={M}, weights {weights.shape[0]}")
    return conv_temporal(x, weights, mode="same")


def pointwise_conv(x, weights):
    """(1, 1) convolution mixing maps: frame-wise matrix product.

    x: (B, M, 1, T). weights: (F2, M). Output (B, F2, 1, T).
    """
    _require(x.ndim == 4, f"pointwise input must be 4-d, got {x.ndim}-d")
    B, M, U, T = x.shape
    F2, Mw = weights.shape
    _require(Mw == M, f"map axis mismatch: input M={M}, weights M={Mw}")
    y = np.einsum("bmut,fm->bfut", x.data, weights.data, optimize=True)

    def backward(g):
        if weights.requires_grad:
            accumulate(weights, np.einsum("bfut,bmut->fm", g, x.data, optimize=True))
        if x.requires_grad:
            accumulate(x, np.einsum("bfut,fm->bmut", g, weights.data, optimize=True))

    return from_op(y, (x, weights), backward)


def avg_pool_time(x, width=4):
    """Non-overlapping arithmetic mean over the time axis."""
    T = x.shape[-1]
    _require(T % width == 0, f"time extent {T} not divisible by pool width {width}")
    lead = x.shape[:-1]
    y = x.data.reshape(*lead, T // width, width).mean(axis=-1)

    def backward(g):
        accumulate(x, np.repeat(g, width, axis=-1) / width)

    return from_op(y, (x,), backward)


def layer_norm(x, gain, bias, eps=1e-5):
    """Per-sample normalization over all non-batch axes jointly.

    gain/bias are indexed by the feature-map axis (axis 1), so the
    learnable parameter count is exactly 2F.
    """
    F = x.shape[1]
    _require(gain.shape == (F,), f"gain length {gain.shape} != feature maps {F}")
    _require(bias.shape == (F,), f"bias length {bias.shape} != feature maps {F}")
    axes = tuple(range(1, x.ndim))
    mu = x.data.mean(axis=axes, keepdims=True)
    var = x.data.var(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    pshape = (1, F) + (1,) * (x.ndim - 2)
    gb = gain.data.reshape(pshape)
    y = gb * xhat + bias.data.reshape(pshape)
    n = x.data[0].size

    def backward(g):
        red = tuple(i for i in range(x.ndim) if i != 1)
        if gain.requires_grad:
            accumulate(gain, (g * xhat).sum(axis=red))
        if bias.requires_grad:
            accumulate(bias, g.sum(axis=red))
        if x.requires_grad:
            dxhat = g * gb
            m1 = dxhat.sum(axis=axes, keepdims=True) / n
            m2 = (dxhat * xhat).sum(axis=axes, keepdims=True) / n
            accumulate(x, inv * (dxhat - m1 - xhat * m2))

    return from_op(y, (x, gain, bias), backward)


def celu(x, alpha=1.0):
    """max(0, x) + min(0, alpha*(exp(x/alpha) - 1)), elementwise."""
    if alpha <= 0:
        raise ValueError(f"celu alpha must be positive, got {alpha}")
    d = x.data
    y = np.where(d > 0, d, alpha * np.expm1(d / alpha))

    def backward(g):
        accumulate(x, g * np.where(d > 0, 1.0, np.exp(d / alpha)))

    return from_op(y, (x,), backward)


def dropout(x, p, training, rng=None):
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p).

    Identity at inference or p == 0. The mask is drawn from rng, so a
    seeded stream makes training deterministic.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        def backward_id(g):
            accumulate(x, g)

        return from_op(x.data, (x,), backward_id)

    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)

    def backward(g):
        accumulate(x, g * mask)

    return from_op(x.data * mask, (x,), backward)


def linear(x, weights):
    """Fully connected layer without bias: x (B, K) @ weights (N, K).T."""
    _require(x.ndim == 2, f"linear input must be 2-d, got {x.ndim}-d")
    _require(weights.shape[1] == x.shape[1],
             f"feature axis mismatch: input K={x.shape[1]}, weights K={weights.shape[1]}")
    y = x.data @ weights.data.T

    def backward(g):
        if weights.requires_grad:
            accumulate(weights, g.T @ x.data)
        if x.requires_grad:
            accumulate(x, g @ weights.data)

    return from_op(y, (x, weights), backward)


def softmax_cross_entropy(logits, labels):
    """Mean over the batch of -log softmax(logits)[label].

    Stabilized by max subtraction; gradient is (softmax - onehot)/B.
    """
    _require(logits.ndim == 2, f"logits must be 2-d, got {logits.ndim}-d")
    B, N = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (B,):
        raise ShapeError(f"labels shape {labels.shape} != batch ({B},)")
    if labels.min() < 0 or labels.max() >= N:
        raise ValueError(f"label out of range [0, {N}): {labels.min()}..{labels.max()}")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logZ = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logZ
    loss = -logp[np.arange(B), labels].mean()
    probs = np.exp(logp)

    def backward(g):
        d = probs.copy()
        d[np.arange(B), labels] -= 1.0
        accumulate(logits, float(g) * d / B)

    return from_op(loss, (logits,), backward)


def concat_mirror(x):
    """Append the reversed input along the last axis: (.., H) -> (.., 2H).

    Used to materialize exactly symmetric even-length kernels from their
    left half.
    """
    H = x.shape[-1]
    y = np.concatenate([x.data, x.data[..., ::-1]], axis=-1)

    def backward(g):
        accumulate(x, g[..., :H] + g[..., H:][..., ::-1])

    return from_op(y, (x,), backward)
