"""Latitude-aware Gabor filter banks for ERP feature maps.

Every bank holds eight 3x3 kernels at orientations ``pi * i / 8``,
``i = 1..8``. A distortion coefficient ``c`` derived from the latitude of
a row raises the carrier frequency (and shrinks the envelope) towards the
poles, where ERP stretches content horizontally.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import latitudes

N_ORIENTATIONS = 8
DISTORTION_MODES = ("linear", "cosine", "inverse_cosine")
INVERSE_COSINE_CAP = 10.0

# Meshgrid over (-1, 0, 1); y runs down the rows, x along the columns.
_Y, _X = np.meshgrid(np.arange(-1.0, 2.0), np.arange(-1.0, 2.0), indexing="ij")


@dataclass(frozen=True)
class GaborParams:
    thetas: np.ndarray
    psi: float
    frequency: float
    sigma: float
    epsilon: float
    coefficient: float

    @classmethod
    def from_coefficient(cls, c, epsilon=0.0):
        f = (np.pi / 2) * np.sqrt(2.0) ** epsilon * (1.0 + c)
        return cls(
            thetas=orientations(),
            psi=np.pi * epsilon,
            frequency=f,
            sigma=np.pi / (f + 0.1),
            epsilon=float(epsilon),
            coefficient=float(c),
        )


@dataclass(frozen=True)
class FilterBank:
    kernels: np.ndarray  # (8, 3, 3)
    params: GaborParams


def orientations():
    return np.pi * np.arange(1, N_ORIENTATIONS + 1) / N_ORIENTATIONS


def distortion_coefficient(lat, mode="linear"):
    """Distortion coefficient for latitude ``lat`` (radians).

    ``linear``: ``|lat| * pi / 2``. ``cosine``: ``cos(lat)``.
    ``inverse_cosine``: ``1 / cos(lat)`` capped at 10.
    """
    lat = np.asarray(lat, dtype=np.float64)
    if np.any(~np.isfinite(lat)) or np.any(np.abs(lat) > np.pi / 2):
        raise ValueError("latitude must lie in [-pi/2, pi/2]")
    if mode == "linear":
        c = np.abs(lat * np.pi / 2)
    elif mode == "cosine":
        c = np.cos(lat)
    elif mode == "inverse_cosine":
        cos = np.atleast_1d(np.cos(lat))
        c = np.full_like(cos, INVERSE_COSINE_CAP)
        ok = cos > 1.0 / INVERSE_COSINE_CAP
        c[ok] = 1.0 / cos[ok]
        c = c.reshape(lat.shape)
    else:
        raise ValueError(f"unknown distortion mode {mode!r}; expected one of {DISTORTION_MODES}")
    return c if c.ndim else float(c)


def distortion_profile(height, mode="linear"):
    """Per-row coefficients for an ERP of ``height`` rows."""
    return distortion_coefficient(latitudes(height), mode)


def _lattice_cos_table():
    c = np.empty(16)
    c[:5] = [1.0, np.cos(np.pi / 8), np.sqrt(0.5), np.sin(np.pi / 8), 0.0]
    c[5:9] = -c[3::-1]
    c[9:] = c[7:0:-1]
    return c


_COS16 = _lattice_cos_table()


def _cos_sin(theta):
    """cos/sin that are exact under theta -> theta + pi on the pi/8 lattice.

    Angles within a few ulp of ``pi * k / 8`` take tabulated values with
    exact sign symmetry; anything else falls back to libm.
    """
    theta = np.asarray(theta, dtype=np.float64)
    k = np.round(theta * (8 / np.pi))
    on_grid = np.abs(theta - k * (np.pi / 8)) <= 8 * np.spacing(np.maximum(np.abs(theta), 1.0))
    ki = np.mod(k, 16).astype(np.int64)
    cos = np.where(on_grid, _COS16[ki], np.cos(theta))
    sin = np.where(on_grid, _COS16[np.mod(ki - 4, 16)], np.sin(theta))
    return cos, sin


def _gabor_parts(f, theta, psi, sigma):
    cos, sin = _cos_sin(theta)
    cos, sin = cos[..., None, None], sin[..., None, None]
    x_rot = _X * cos + _Y * sin
    # x_rot**2 + y_rot**2 == x**2 + y**2; using the right side keeps the
    # envelope bitwise identical across orientations.
    envelope = np.exp(-0.5 * ((_X**2 + _Y**2) / sigma**2)) * np.ones_like(x_rot)
    carrier = np.cos(f * x_rot + psi)
    return envelope, carrier


def gabor_kernel(f, theta, psi, sigma):
    """3x3 Gabor kernel(s); ``theta`` may be an array of orientations."""
    if not f > 0 or not sigma > 0:
        raise ValueError(f"frequency and sigma must be positive, got f={f}, sigma={sigma}")
    envelope, carrier = _gabor_parts(f, theta, psi, sigma)
    g = envelope * carrier
    return g / (2 * np.pi * sigma**2)


def pano_gabor_bank(c, epsilon=0.0):
    """Eight-orientation bank for distortion coefficient ``c``."""
    if not c >= 0:
        raise ValueError(f"distortion coefficient must be non-negative, got {c}")
    p = GaborParams.from_coefficient(c, epsilon)
    return FilterBank(gabor_kernel(p.frequency, p.thetas, p.psi, p.sigma), p)


def latitude_bank_stack(height, epsilon=0.0, mode="linear"):
    """One bank per ERP row (equivalently per channel of an H-channel tensor)."""
    if height < 1:
        raise ValueError(f"height must be at least 1, got {height}")
    return [pano_gabor_bank(c, epsilon) for c in np.atleast_1d(distortion_profile(height, mode))]


def stack_kernels(banks):
    """``(len(banks), 8, 3, 3)`` array from a list of banks (or pass-through)."""
    if isinstance(banks, np.ndarray):
        return banks
    return np.stack([b.kernels for b in banks])


def export_bank_image(banks, scale=16):
    """Render banks as a uint8 grid: one row of eight tiles per bank.

    Each kernel is min-max normalised on its own; a flat kernel renders as
    mid-gray 128. Tiles are upscaled by nearest neighbour ``scale``.
    """
    k = stack_kernels(banks if not isinstance(banks, FilterBank) else [banks])
    n, m, kh, kw = k.shape
    lo = k.min(axis=(2, 3), keepdims=True)
    hi = k.max(axis=(2, 3), keepdims=True)
    span = hi - lo
    flat = span == 0
    norm = np.where(flat, 0.5, (k - lo) / np.where(flat, 1.0, span))
    tiles = np.where(flat, 128, np.round(norm * 255)).astype(np.uint8)
    tiles = tiles.repeat(scale, axis=2).repeat(scale, axis=3)
    return tiles.transpose(0, 2, 1, 3).reshape(n * kh * scale, m * kw * scale)
