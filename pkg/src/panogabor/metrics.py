"""Monocular depth evaluation metrics (Abs Rel, Sq Rel, RMSE, delta accuracies)."""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ShapeError

DELTA_BASE = 1.25
MIN_PRED = 1e-6


@dataclass(frozen=True)
class MetricReport:
    abs_rel: float
    sq_rel: float
    rmse: float
    delta1: float
    delta2: float
    delta3: float
    valid_pixels: int

    def to_dict(self):
        return asdict(self)


def depth_metrics(pred, gt, mask=None, median_scaling=False):
    """Evaluate ``pred`` against ``gt`` over valid pixels.

    Pixels with ``gt <= 0`` are always excluded, as are pixels where
    ``mask`` is False. Predictions are clamped to at least 1e-6 before any
    ratio is taken. delta values are percentages.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")
    valid = gt > 0
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != gt.shape:
            raise ShapeError(f"mask {mask.shape} does not match depth shape {gt.shape}")
        valid &= mask
    n = int(valid.sum())
    if n == 0:
        raise ValueError("no valid pixels to evaluate")
    d = gt[valid]
    p = pred[valid]
    if median_scaling:
        p = p * (np.median(d) / np.median(p))
    p = np.maximum(p, MIN_PRED)

    err = d - p
    ratio = np.maximum(d / p, p / d)
    deltas = [100.0 * float(np.mean(ratio < DELTA_BASE**k)) for k in (1, 2, 3)]
    return MetricReport(
        abs_rel=float(np.mean(np.abs(err) / d)),
        sq_rel=float(np.mean(err**2 / d)),
        rmse=float(np.sqrt(np.mean(err**2))),
        delta1=deltas[0],
        delta2=deltas[1],
        delta3=deltas[2],
        valid_pixels=n,
    )
