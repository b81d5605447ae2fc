"""Differentiable kernels used by the classification and attention architectures.

Image kernels take ``[C, H, W]`` or a batched ``[N, C, H, W]``; vector kernels take
``[n]`` or ``[N, n]``. Convolution is cross-correlation (no kernel flip).
"""

from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import as_strided
from scipy.special import expit

from gazemodal.errors import ArgumentError, DimensionError, EmptyInputError
from gazemodal.numeric.tensor import ArrayLike, DifferentiableValue, constant, node

PROBABILITY_FLOOR = 1e-12


def _unbroadcast(grad: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: ArrayLike, b: ArrayLike) -> DifferentiableValue:
    a, b = constant(a), constant(b)
    return node(
        a.value + b.value,
        (a, lambda g: _unbroadcast(g, a.shape)),
        (b, lambda g: _unbroadcast(g, b.shape)),
    )


def mul(a: ArrayLike, b: ArrayLike) -> DifferentiableValue:
    a, b = constant(a), constant(b)
    return node(
        a.value * b.value,
        (a, lambda g: _unbroadcast(g * b.value, a.shape)),
        (b, lambda g: _unbroadcast(g * a.value, b.shape)),
    )


def scale(a: ArrayLike, factor: float) -> DifferentiableValue:
    a = constant(a)
    return node(a.value * factor, (a, lambda g: g * factor))


def total(a: ArrayLike) -> DifferentiableValue:
    """Sum of all elements as a scalar."""
    a = constant(a)
    return node(np.array(a.value.sum()), (a, lambda g: np.full(a.shape, float(g))))


def mean(a: ArrayLike, axis: Optional[Union[int, Sequence[int]]] = None) -> DifferentiableValue:
    a = constant(a)
    axes = tuple(range(a.ndim)) if axis is None else (axis,) if isinstance(axis, int) else tuple(axis)
    axes = tuple(ax % a.ndim for ax in axes)
    count = int(np.prod([a.shape[ax] for ax in axes]))

    def rule(g: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.expand_dims(g, axes), a.shape) / count

    return node(a.value.mean(axis=axes), (a, rule))


def reshape(a: ArrayLike, shape: Sequence[int]) -> DifferentiableValue:
    a = constant(a)
    return node(a.value.reshape(shape), (a, lambda g: g.reshape(a.shape)))


def getitem(a: ArrayLike, key) -> DifferentiableValue:
    """Basic (slice / integer) indexing."""
    a = constant(a)

    def rule(g: np.ndarray) -> np.ndarray:
        full = np.zeros_like(a.value)
        full[key] += g
        return full

    return node(np.array(a.value[key]), (a, rule))


def concat(values: Sequence[ArrayLike], axis: int = -1) -> DifferentiableValue:
    if not values:
        raise EmptyInputError("concat needs at least one input")
    parts = [constant(v) for v in values]
    out = np.concatenate([p.value for p in parts], axis=axis)
    bounds = np.cumsum([0] + [p.shape[axis] for p in parts])

    edges = []
    for part, start, stop in zip(parts, bounds[:-1], bounds[1:]):
        index = [slice(None)] * out.ndim
        index[axis] = slice(int(start), int(stop))
        edges.append((part, lambda g, index=tuple(index): g[index]))
    return node(out, *edges)


def stack(values: Sequence[ArrayLike], axis: int = 0) -> DifferentiableValue:
    if not values:
        raise EmptyInputError("stack needs at least one input")
    parts = [constant(v) for v in values]
    out = np.stack([p.value for p in parts], axis=axis)
    edges = [
        (part, lambda g, i=i: np.take(g, i, axis=axis)) for i, part in enumerate(parts)
    ]
    return node(out, *edges)


def _as_batch(x: DifferentiableValue, rank: int) -> tuple:
    if x.ndim == rank - 1:
        return reshape(x, (1, *x.shape)), True
    if x.ndim != rank:
        raise DimensionError(f"expected rank {rank - 1} or {rank} input, got shape {x.shape}", axis=0)
    return x, False


def _unbatch(x: DifferentiableValue, squeezed: bool) -> DifferentiableValue:
    return reshape(x, x.shape[1:]) if squeezed else x


def conv2d(
    x: ArrayLike,
    kernels: ArrayLike,
    stride: int = 1,
    padding: int = 0,
    bias: Optional[ArrayLike] = None,
) -> DifferentiableValue:
    """Cross-correlate ``x`` with ``kernels[C_out, C_in, kh, kw]``."""
    x, squeezed = _as_batch(constant(x), 4)
    kernels = constant(kernels)
    if stride < 1:
        raise ArgumentError(f"stride must be >= 1, got {stride}")
    if padding < 0:
        raise ArgumentError(f"padding must be >= 0, got {padding}")
    if kernels.ndim != 4:
        raise DimensionError(f"kernels must be rank 4, got shape {kernels.shape}", axis="kernels")
    n, c_in, height, width = x.shape
    c_out, k_in, kh, kw = kernels.shape
    if k_in != c_in:
        raise DimensionError(f"kernel expects {k_in} input channels, input has {c_in}", axis="channels")
    if kh > height + 2 * padding:
        raise DimensionError(f"kernel height {kh} exceeds padded input {height + 2 * padding}", axis="height")
    if kw > width + 2 * padding:
        raise DimensionError(f"kernel width {kw} exceeds padded input {width + 2 * padding}", axis="width")

    pad = ((0, 0), (0, 0), (padding, padding), (padding, padding))
    xp = np.pad(x.value, pad) if padding else x.value
    xp = np.ascontiguousarray(xp)
    out_h = (height + 2 * padding - kh) // stride + 1
    out_w = (width + 2 * padding - kw) // stride + 1
    s = xp.strides
    patches = as_strided(
        xp,
        shape=(n, c_in, out_h, out_w, kh, kw),
        strides=(s[0], s[1], s[2] * stride, s[3] * stride, s[2], s[3]),
        writeable=False,
    )
    out = np.tensordot(patches, kernels.value, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)

    def grad_input(g: np.ndarray) -> np.ndarray:
        dpatches = np.tensordot(g, kernels.value, axes=([1], [0]))  # n, oh, ow, c, kh, kw
        dxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                dxp[
                    :,
                    :,
                    i : i + stride * (out_h - 1) + 1 : stride,
                    j : j + stride * (out_w - 1) + 1 : stride,
                ] += dpatches[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        if padding:
            dxp = dxp[:, :, padding:-padding, padding:-padding]
        return dxp

    edges = [
        (x, grad_input),
        (kernels, lambda g: np.tensordot(g, patches, axes=([0, 2, 3], [0, 2, 3]))),
    ]
    if bias is not None:
        bias = constant(bias)
        if bias.shape != (c_out,):
            raise DimensionError(f"bias must have shape ({c_out},), got {bias.shape}", axis="bias")
        out = out + bias.value[None, :, None, None]
        edges.append((bias, lambda g: g.sum(axis=(0, 2, 3))))

    return _unbatch(node(out, *edges), squeezed)


def max_pool2d(x: ArrayLike, k: int) -> DifferentiableValue:
    """Non-overlapping ``k x k`` max pooling; ties route the gradient to the first cell scanned."""
    x, squeezed = _as_batch(constant(x), 4)
    n, c, height, width = x.shape
    if k < 1:
        raise ArgumentError(f"pool size must be >= 1, got {k}")
    if height % k:
        raise DimensionError(f"height {height} not divisible by pool size {k}", axis="height")
    if width % k:
        raise DimensionError(f"width {width} not divisible by pool size {k}", axis="width")

    oh, ow = height // k, width // k
    windows = x.value.reshape(n, c, oh, k, ow, k).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, oh, ow, k * k)
    argmax = windows.argmax(axis=-1)[..., None]
    out = np.take_along_axis(windows, argmax, axis=-1)[..., 0]

    def rule(g: np.ndarray) -> np.ndarray:
        routed = np.zeros_like(windows)
        np.put_along_axis(routed, argmax, g[..., None], axis=-1)
        return routed.reshape(n, c, oh, ow, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, height, width)

    return _unbatch(node(out, (x, rule)), squeezed)


def upsample_nearest(x: ArrayLike, factor: int) -> DifferentiableValue:
    """Replicate each cell into a ``factor x factor`` block."""
    if factor < 1:
        raise ArgumentError(f"upsample factor must be >= 1, got {factor}")
    x = constant(x)
    if x.ndim < 2:
        raise DimensionError(f"upsample needs a grid, got shape {x.shape}", axis=0)
    out = np.repeat(np.repeat(x.value, factor, axis=-2), factor, axis=-1)
    lead, (height, width) = x.shape[:-2], x.shape[-2:]

    def rule(g: np.ndarray) -> np.ndarray:
        return g.reshape(*lead, height, factor, width, factor).sum(axis=(-3, -1))

    return node(out, (x, rule))


def global_avg_pool(x: ArrayLike) -> DifferentiableValue:
    """Mean over the two spatial axes."""
    return mean(x, axis=(-2, -1))


def affine(x: ArrayLike, weights: ArrayLike, bias: Optional[ArrayLike] = None) -> DifferentiableValue:
    """``W x + b`` for ``x[n]`` or a batch ``x[N, n]``."""
    x, weights = constant(x), constant(weights)
    if weights.ndim != 2:
        raise DimensionError(f"weights must be rank 2, got shape {weights.shape}", axis="weights")
    if x.ndim not in (1, 2):
        raise DimensionError(f"affine input must be rank 1 or 2, got shape {x.shape}", axis=0)
    if x.shape[-1] != weights.shape[1]:
        raise DimensionError(
            f"input width {x.shape[-1]} does not match weights {weights.shape}", axis=x.ndim - 1
        )
    out = x.value @ weights.value.T

    def grad_weights(g: np.ndarray) -> np.ndarray:
        if x.ndim == 1:
            return np.outer(g, x.value)
        return g.T @ x.value

    edges = [(x, lambda g: g @ weights.value), (weights, grad_weights)]
    if bias is not None:
        bias = constant(bias)
        if bias.shape != (weights.shape[0],):
            raise DimensionError(
                f"bias must have shape ({weights.shape[0]},), got {bias.shape}", axis="bias"
            )
        out = out + bias.value
        edges.append((bias, lambda g: _unbroadcast(g, bias.shape)))
    return node(out, *edges)


def relu(x: ArrayLike) -> DifferentiableValue:
    x = constant(x)
    mask = x.value > 0
    return node(np.where(mask, x.value, 0.0), (x, lambda g: g * mask))


def sigmoid(x: ArrayLike) -> DifferentiableValue:
    x = constant(x)
    out = expit(x.value)
    return node(out, (x, lambda g: g * out * (1.0 - out)))


def tanh(x: ArrayLike) -> DifferentiableValue:
    x = constant(x)
    out = np.tanh(x.value)
    return node(out, (x, lambda g: g * (1.0 - out * out)))


_ACTIVATIONS = {"relu": relu, "sigmoid": sigmoid, "tanh": tanh}


def activation(kind: str, x: ArrayLike) -> DifferentiableValue:
    """Elementwise ``relu``, ``sigmoid`` or ``tanh``."""
    try:
        return _ACTIVATIONS[kind](x)
    except KeyError:
        raise ArgumentError(f"unknown activation {kind!r}") from None


def softmax(x: ArrayLike) -> DifferentiableValue:
    """Softmax over the last axis with max-subtraction."""
    x = constant(x)
    if x.ndim == 0 or x.shape[-1] < 1:
        raise EmptyInputError("softmax needs at least one element")
    shifted = np.exp(x.value - x.value.max(axis=-1, keepdims=True))
    out = shifted / shifted.sum(axis=-1, keepdims=True)

    def rule(g: np.ndarray) -> np.ndarray:
        return out * (g - (g * out).sum(axis=-1, keepdims=True))

    return node(out, (x, rule))


def cross_entropy_loss(probs: ArrayLike, target: Union[int, Sequence[int], np.ndarray]) -> DifferentiableValue:
    """``-ln p[target]`` with ``p`` floored at 1e-12; batches average over rows."""
    probs = constant(probs)
    batched = probs.ndim == 2
    rows = probs.value if batched else probs.value[None, :]
    targets = np.atleast_1d(np.asarray(target, dtype=np.int64))
    n_classes = rows.shape[1]
    if targets.shape[0] != rows.shape[0]:
        raise DimensionError(f"{targets.shape[0]} targets for {rows.shape[0]} rows", axis=0)
    if np.any(targets < 0) or np.any(targets >= n_classes):
        raise ArgumentError(f"target outside [0, {n_classes}): {targets.tolist()}")

    index = np.arange(rows.shape[0])
    picked = rows[index, targets]
    clipped = np.maximum(picked, PROBABILITY_FLOOR)
    loss = float(-np.log(clipped).mean())

    def rule(g: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(rows)
        live = picked >= PROBABILITY_FLOOR
        grad[index, targets] = np.where(live, -1.0 / (clipped * rows.shape[0]), 0.0) * float(g)
        return grad if batched else grad[0]

    return node(np.array(loss), (probs, rule))


def mse_loss(pred: ArrayLike, target: ArrayLike, weights: Optional[np.ndarray] = None) -> DifferentiableValue:
    """Mean of squared elementwise differences.

    With ``weights`` (same shape, non-negative) this is ``sum(w * d**2) / sum(w)``;
    unit weights give the plain mean.
    """
    pred, target = constant(pred), constant(target)
    if pred.shape != target.shape:
        mismatch = next(
            (axis for axis, (p, t) in enumerate(zip(pred.shape, target.shape)) if p != t),
            min(len(pred.shape), len(target.shape)),
        )
        raise DimensionError(f"shapes {pred.shape} and {target.shape} differ", axis=mismatch)
    diff = pred.value - target.value
    if weights is None:
        weights = np.ones_like(diff)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != diff.shape:
        raise DimensionError(f"weights {weights.shape} do not match {diff.shape}", axis=0)
    if np.any(weights < 0):
        raise ArgumentError("loss weights must be non-negative")
    total = weights.sum() if diff.size else 1.0
    if total <= 0:
        raise ArgumentError("loss weights sum to zero")
    return node(
        np.array((weights * diff * diff).sum() / total),
        (pred, lambda g: 2.0 * float(g) * weights * diff / total),
        (target, lambda g: -2.0 * float(g) * weights * diff / total),
    )
