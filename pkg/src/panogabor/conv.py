"""Convolution primitives on ERP feature tensors ``(C, H, W)``.

All kernels are applied as cross-correlation. Padding wraps around
horizontally (longitude is periodic) and replicates the edge rows
vertically. Every output pixel is accumulated in a fixed tap order, so
results do not depend on thread count and a circular column shift of the
input shifts the output by the same amount, bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .errors import ShapeError
from .gabor import stack_kernels

AGGREGATES = ("mean", "max", "sum")
SE_REDUCTION = 16


def _as_tensor(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"expected a (C, H, W) tensor, got shape {x.shape}")
    return x


def pad_erp(x, p):
    """Pad the last two axes by ``p``: wrap horizontally, replicate vertically."""
    pad = [(0, 0)] * (x.ndim - 2)
    x = np.pad(x, pad + [(0, 0), (p, p)], mode="wrap")
    return np.pad(x, pad + [(p, p), (0, 0)], mode="edge")


def _correlate(padded, kernel, h, w):
    k = kernel.shape[-1]
    out = np.zeros(np.broadcast_shapes(kernel.shape[:-2], padded.shape[:-2]) + (h, w))
    for i in range(k):
        for j in range(k):
            out += kernel[..., i, j, None, None] * padded[..., i : i + h, j : j + w]
    return out


def _check_kernel(kernel):
    kernel = np.asarray(kernel, dtype=np.float64)
    k = kernel.shape[-1]
    if kernel.shape[-2] != k or k % 2 != 1:
        raise ShapeError(f"kernel must be square with odd size, got {kernel.shape}")
    return kernel


def conv2d_wrap(x, kernel, channel=None):
    """Correlate one plane with a ``k x k`` kernel, output the same size.

    ``x`` is an ``(H, W)`` plane or a ``(C, H, W)`` tensor together with the
    ``channel`` to filter.
    """
    kernel = _check_kernel(kernel)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        if channel is None:
            raise ValueError("channel index required for a (C, H, W) tensor")
        x = x[channel]
    elif x.ndim != 2:
        raise ShapeError(f"expected (H, W) or (C, H, W), got {x.shape}")
    h, w = x.shape
    return _correlate(pad_erp(x, kernel.shape[-1] // 2), kernel, h, w)


def _aggregate(responses, mode):
    if mode == "mean":
        return responses.mean(axis=1)
    if mode == "max":
        return responses.max(axis=1)
    if mode == "sum":
        return responses.sum(axis=1)
    raise ValueError(f"unknown aggregate {mode!r}; expected one of {AGGREGATES}")


def _channel_chunks(n, plane_size):
    # bounds the (chunk, 8, H, W) response buffer; results are per channel,
    # so chunking never changes them
    size = max(1, min(n, 2_000_000 // max(1, 8 * plane_size)))
    return [slice(s, min(s + size, n)) for s in range(0, n, size)]


def pano_gabor_conv(x, banks, aggregate="mean"):
    """Depthwise latitude-aware Gabor filtering of an H-channel tensor.

    Channel ``i`` is correlated with each of the eight kernels of
    ``banks[i]`` and the eight responses are merged by ``aggregate``.
    ``banks`` is a list of :class:`~panogabor.gabor.FilterBank` or an
    ``(H, n, k, k)`` array.
    """
    x = _as_tensor(x)
    c, h, w = x.shape
    if c != h:
        raise ShapeError(f"PanoGabor convolution needs channels == height, got C={c}, H={h}")
    kernels = _check_kernel(stack_kernels(banks))
    if kernels.ndim != 4 or kernels.shape[0] != c:
        raise ShapeError(f"need one bank per channel: {c} channels, kernels {kernels.shape}")
    if aggregate not in AGGREGATES:
        raise ValueError(f"unknown aggregate {aggregate!r}; expected one of {AGGREGATES}")
    p = kernels.shape[-1] // 2

    def run(sl):
        padded = pad_erp(x[sl], p)[:, None]
        return _aggregate(_correlate(padded, kernels[sl], h, w), aggregate)

    return np.concatenate(parallel_map(run, _channel_chunks(c, h * w)))


def latitude_filter(img, banks, aggregate="mean"):
    """Filter each row of an image with the bank of its own latitude.

    Equivalent to running :func:`pano_gabor_conv` on an H-channel tensor
    whose channels all equal the image, and keeping row ``r`` of channel
    ``r``. Works for any number of image channels.
    """
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[None]
    _, h, w = img.shape
    kernels = _check_kernel(stack_kernels(banks))
    if kernels.shape[0] != h:
        raise ShapeError(f"need one bank per row: H={h}, kernels {kernels.shape}")
    k = kernels.shape[-1]
    per_row = kernels.transpose(1, 0, 2, 3)  # (n, H, k, k)

    def run(ch):
        padded = pad_erp(img[ch], k // 2)
        acc = np.zeros((per_row.shape[0], h, w))
        for i in range(k):
            for j in range(k):
                acc += per_row[:, :, i, j, None] * padded[i : i + h, j : j + w]
        return _aggregate(acc[None], aggregate)[0]

    out = np.stack(parallel_map(run, range(img.shape[0])))
    return out[0] if squeeze else out


def conv1x1(x, weight, bias=None):
    """Per-pixel affine map over channels: ``out[o] = sum_c weight[o, c] * x[c] + bias[o]``."""
    x = _as_tensor(x)
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 2 or weight.shape[1] != x.shape[0]:
        raise ShapeError(f"weight {weight.shape} does not match {x.shape[0]} input channels")
    n_out = weight.shape[0]
    bias = np.zeros(n_out) if bias is None else np.asarray(bias, dtype=np.float64)
    if bias.shape != (n_out,):
        raise ShapeError(f"bias {bias.shape} does not match {n_out} output channels")
    out = np.broadcast_to(bias[:, None, None], (n_out,) + x.shape[1:]).copy()
    for c in range(x.shape[0]):
        out += weight[:, c, None, None] * x[c]
    return out


@dataclass
class SeWeights:
    """Squeeze-and-excitation bottleneck: ``reduce`` is ``(h, C)``, ``expand`` ``(C, h)``."""

    reduce_weight: np.ndarray
    reduce_bias: np.ndarray
    expand_weight: np.ndarray
    expand_bias: np.ndarray

    @property
    def channels(self):
        return self.reduce_weight.shape[1]

    def validate(self):
        hidden, c = self.reduce_weight.shape
        if (
            self.reduce_bias.shape != (hidden,)
            or self.expand_weight.shape != (c, hidden)
            or self.expand_bias.shape != (c,)
        ):
            raise ShapeError(
                "inconsistent SE weights: reduce %s/%s, expand %s/%s"
                % (
                    self.reduce_weight.shape,
                    self.reduce_bias.shape,
                    self.expand_weight.shape,
                    self.expand_bias.shape,
                )
            )


def se_hidden(channels, reduction=SE_REDUCTION):
    return max(1, channels // reduction)


def spatial_mean(x):
    """Per-channel mean over ``(H, W)``.

    Values are sorted before summing, so the result is bitwise invariant to
    any permutation of the pixels (circular shifts included).
    """
    flat = np.sort(x.reshape(x.shape[0], -1), axis=1)
    return flat.sum(axis=1) / flat.shape[1]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def se_scale(x, w):
    x = _as_tensor(x)
    w.validate()
    if w.channels != x.shape[0]:
        raise ShapeError(f"SE layer expects {w.channels} channels, got {x.shape[0]}")
    squeezed = spatial_mean(x)
    # explicit products/sums rather than BLAS: fixed reduction order
    hidden = np.maximum((w.reduce_weight * squeezed).sum(axis=1) + w.reduce_bias, 0.0)
    return _sigmoid((w.expand_weight * hidden).sum(axis=1) + w.expand_bias)


def se_layer(x, w):
    """Rescale each channel by ``sigmoid(expand(relu(reduce(mean(x)))))``."""
    s = se_scale(x, w)
    return np.asarray(x, dtype=np.float64) * s[:, None, None]
