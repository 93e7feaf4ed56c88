"""Deterministic synthetic panoramas and depth maps used by the demos."""

import numpy as np

from .geometry import latitudes, latlon_to_ray, longitudes


def smooth_sphere_image(height, width):
    """Sum of three low-frequency sinusoids of the unit ray.

    Continuous on the sphere, so it has no seam at lon = +-pi and no
    singularity at the poles.
    """
    lat = latitudes(height)[:, None]
    lon = longitudes(width)[None, :]
    ray = latlon_to_ray(lat, lon)
    x, y, z = ray[..., 0], ray[..., 1], ray[..., 2]
    return np.sin(1.5 * x + 0.3) + 0.8 * np.cos(2.0 * y + 0.5) + 0.5 * np.sin(2.0 * z + x)


def synthetic_room_depth(height, width):
    """Smooth positive depth map (metres) spanning a typical indoor range,
    roughly 3 to 8.5 m."""
    img = smooth_sphere_image(height, width)
    return 5.0 + 1.5 * img


def standard_pair(height=32, width=64):
    """The ``(init, gt)`` pair for the fitting demo: gt is a smooth room,
    init is the constant mean of gt."""
    gt = synthetic_room_depth(height, width)
    init = np.full_like(gt, gt.mean())
    return init, gt


def random_pair(height=16, width=32, seed=0):
    """Seeded ``(pred, gt)`` pair for gradient checks."""
    rng = np.random.default_rng(seed)
    gt = rng.uniform(1.0, 4.0, size=(height, width))
    pred = gt + rng.normal(0.0, 0.3, size=(height, width))
    return pred, gt
