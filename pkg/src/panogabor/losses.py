"""Spherical Sobel gradients, the depth training objective and its
analytic gradient.

The objective is ``berhu(pred, gt) + eta * spherical_gradient_loss(pred, gt)``
with ``e = gt - pred``::

    berhu     = mean( |e|                    if |e| <= theta
                      (e^2 + delta^2)/(2 delta) otherwise )
    grad_loss = mean(|Gx(gt) - Gx(pred)|) + mean(|Gy(gt) - Gy(pred)|)

``Gx``/``Gy`` correlate the 3x3 gnomonic tangent patch around each pixel
with the Sobel kernels, so they are linear in the depth map.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ShapeError
from .geometry import check_erp_shape, tangent_sampler

log = logging.getLogger(__name__)

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()
_SOBEL = {"x": SOBEL_X, "y": SOBEL_Y}


@dataclass(frozen=True)
class LossConfig:
    theta: float = 0.2
    delta: float = 0.2
    eta: float = 0.5

    def __post_init__(self):
        if not self.theta > 0 or not self.delta > 0 or not self.eta >= 0:
            raise ValueError(f"invalid loss config {self}")


def _depth(d):
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2:
        raise ShapeError(f"depth map must be 2-D, got shape {d.shape}")
    check_erp_shape(*d.shape)
    if not np.all(np.isfinite(d)):
        raise ValueError("depth map contains non-finite values")
    return d


def _pair(pred, gt):
    pred, gt = _depth(pred), _depth(gt)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")
    return pred, gt


def _sobel(axis):
    try:
        return _SOBEL[axis]
    except KeyError:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}") from None


def spherical_gradient(d, axis="x"):
    """Sobel response of each pixel's 3x3 tangent patch."""
    d = _depth(d)
    s = _sobel(axis)
    patches = tangent_sampler(*d.shape).sample(d)
    out = np.zeros(d.shape)
    # the kernels are antisymmetric: pair each positive tap with its mirror
    # so a constant patch gives exactly zero
    for i in range(3):
        for j in range(3):
            if s[i, j] > 0:
                mi, mj = (i, 2 - j) if axis == "x" else (2 - i, j)
                out += s[i, j] * (patches[..., i, j] - patches[..., mi, mj])
    return out


def spherical_gradient_adjoint(g, axis="x"):
    """Transpose of :func:`spherical_gradient` applied to a map ``g``."""
    g = np.asarray(g, dtype=np.float64)
    s = _sobel(axis)
    return tangent_sampler(*g.shape).adjoint(g[..., None, None] * s)


def berhu_terms(e, cfg):
    a = np.abs(e)
    return np.where(a <= cfg.theta, a, e * e / (2 * cfg.delta) + cfg.delta / 2)


def berhu_loss(pred, gt, cfg=LossConfig()):
    """Reverse Huber loss, mean over pixels."""
    pred, gt = _pair(pred, gt)
    return float(berhu_terms(gt - pred, cfg).mean())


def spherical_gradient_loss(pred, gt):
    pred, gt = _pair(pred, gt)
    dx = spherical_gradient(gt, "x") - spherical_gradient(pred, "x")
    dy = spherical_gradient(gt, "y") - spherical_gradient(pred, "y")
    return float(np.abs(dx).mean() + np.abs(dy).mean())


def total_loss(pred, gt, cfg=LossConfig()):
    return berhu_loss(pred, gt, cfg) + cfg.eta * spherical_gradient_loss(pred, gt)


def loss_breakdown(pred, gt, cfg=LossConfig()):
    b = berhu_loss(pred, gt, cfg)
    g = spherical_gradient_loss(pred, gt)
    return {"berhu": b, "gradient": g, "total": b + cfg.eta * g}


def total_loss_grad(pred, gt, cfg=LossConfig()):
    """Analytic derivative of :func:`total_loss` with respect to ``pred``.

    At ``|e| == theta`` the quadratic branch is used; wherever an absolute
    value sits exactly at zero its subgradient is taken as 0.
    """
    pred, gt = _pair(pred, gt)
    n = pred.size
    e = gt - pred
    quad = np.abs(e) >= cfg.theta
    grad = np.where(quad, -e / cfg.delta, -np.sign(e)) / n
    if cfg.eta:
        for axis in ("x", "y"):
            diff = spherical_gradient(gt, axis) - spherical_gradient(pred, axis)
            grad -= (cfg.eta / n) * spherical_gradient_adjoint(np.sign(diff), axis)
    return grad


def fit_depth(init, gt, steps=200, lr=0.1, cfg=LossConfig()):
    """Fit a depth map to ``gt`` by plain gradient descent on the objective.

    ``lr`` is a per-pixel step: each update is
    ``pred -= lr * N * total_loss_grad(pred, gt)`` with ``N`` the pixel
    count, which keeps the step size independent of resolution.

    Returns ``(pred, trace)`` where ``trace[k]`` is the loss before step
    ``k`` and ``trace[-1]`` the loss of the returned map.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if not lr >= 0:
        raise ValueError("lr must be non-negative")
    pred, gt = _pair(init, gt)
    pred = pred.copy()
    n = pred.size
    trace = []
    for step in range(steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            loss = total_loss(pred, gt, cfg)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss became non-finite at step {step}", step)
        trace.append(loss)
        if step == steps:
            break
        if lr:
            with np.errstate(over="ignore", invalid="ignore"):
                pred = pred - (lr * n) * total_loss_grad(pred, gt, cfg)
            if not np.all(np.isfinite(pred)):
                raise DivergenceError(f"depth became non-finite at step {step + 1}", step + 1)
    log.debug("fit_depth: loss %.6g -> %.6g over %d steps", trace[0], trace[-1], steps)
    return pred, np.asarray(trace)
