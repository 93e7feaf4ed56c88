"""Finite-difference verification of :func:`panogabor.losses.total_loss_grad`."""

from dataclasses import dataclass

import numpy as np

from .losses import LossConfig, spherical_gradient, total_loss, total_loss_grad
from .synthetic import random_pair

DEFAULT_STEP = 1e-3
DEFAULT_TOLERANCE = 1e-4


@dataclass
class GradCheckResult:
    max_abs_error: float
    checked: int
    excluded: int
    tolerance: float
    step: float

    @property
    def passed(self):
        return self.checked > 0 and self.max_abs_error < self.tolerance

    def to_dict(self):
        return {
            "max_abs_error": self.max_abs_error,
            "checked": self.checked,
            "excluded": self.excluded,
            "tolerance": self.tolerance,
            "step": self.step,
            "passed": self.passed,
        }


def _kink_adjacent(pred, gt, cfg, h):
    """Pixels whose +-h perturbation may cross a non-differentiable point.

    That is: ``|e|`` within ``h`` of 0 or ``theta``, or some Sobel
    difference touched by the pixel lying within ``h`` times its
    sensitivity of zero.
    """
    e = np.abs(gt - pred)
    near = (e <= h) | (np.abs(e - cfg.theta) <= h)
    if cfg.eta == 0:
        return near
    diffs = {ax: spherical_gradient(gt, ax) - spherical_gradient(pred, ax) for ax in ("x", "y")}
    basis = np.zeros_like(pred)
    for idx in np.ndindex(pred.shape):
        if near[idx]:
            continue
        basis[idx] = 1.0
        for ax, d in diffs.items():
            sens = np.abs(spherical_gradient(basis, ax))
            if np.any((sens > 0) & (np.abs(d) <= h * sens)):
                near[idx] = True
                break
        basis[idx] = 0.0
    return near


def check_gradient(pred, gt, cfg=LossConfig(), h=DEFAULT_STEP, tolerance=DEFAULT_TOLERANCE):
    """Compare the analytic gradient with central differences, pixel by pixel."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    analytic = total_loss_grad(pred, gt, cfg)
    skip = _kink_adjacent(pred, gt, cfg, h)
    worst = 0.0
    probe = pred.copy()
    for idx in np.ndindex(pred.shape):
        if skip[idx]:
            continue
        probe[idx] = pred[idx] + h
        up = total_loss(probe, gt, cfg)
        probe[idx] = pred[idx] - h
        down = total_loss(probe, gt, cfg)
        probe[idx] = pred[idx]
        worst = max(worst, abs((up - down) / (2 * h) - analytic[idx]))
    n_skip = int(skip.sum())
    return GradCheckResult(float(worst), pred.size - n_skip, n_skip, tolerance, h)


def run_default_gradcheck(seed=0):
    """The shipped gate: seeded 16x32 pair, default loss settings."""
    pred, gt = random_pair(16, 32, seed)
    return check_gradient(pred, gt)
