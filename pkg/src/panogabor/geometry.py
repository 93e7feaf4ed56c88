"""Equirectangular (ERP) coordinates, cubemap reprojection and gnomonic
tangent-patch sampling.

Conventions
-----------
Images are ``(C, H, W)`` or ``(H, W)`` arrays with ``W == 2 * H``. Pixel
centres sit at half-pixel offsets::

    lat(r) = pi/2 - (r + 0.5) * pi / H      (north at row 0)
    lon(c) = -pi  + (c + 0.5) * 2 * pi / W  (east to the right)

The unit ray for ``(lat, lon)`` is ``(cos(lat) sin(lon), sin(lat),
cos(lat) cos(lon))``, i.e. +y is up and lon = 0 looks down +z.

Horizontal sampling wraps around; vertical sampling beyond the first or
last row clamps to that row.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._parallel import parallel_map
from .errors import ShapeError

FACE_NAMES = ("front", "right", "back", "left", "up", "down")

# (forward, right, up) per face before yaw rotation, as (x, y, z)
_FACE_AXES = np.array(
    [
        [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
        [[1, 0, 0], [0, 0, -1], [0, 1, 0]],
        [[0, 0, -1], [-1, 0, 0], [0, 1, 0]],
        [[-1, 0, 0], [0, 0, 1], [0, 1, 0]],
        [[0, 1, 0], [1, 0, 0], [0, 0, -1]],
        [[0, -1, 0], [1, 0, 0], [0, 0, 1]],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class LatLonGrid:
    height: int
    width: int

    @property
    def lat(self):
        return latitudes(self.height)

    @property
    def lon(self):
        return longitudes(self.width)


@dataclass
class CubemapFaces:
    """Six 90 degree faces, ``faces.shape == (6, C, S, S)`` in FACE_NAMES order."""

    face_size: int
    yaw_offset: float
    faces: np.ndarray

    def face(self, name):
        return self.faces[FACE_NAMES.index(name)]


@dataclass
class TangentPatch:
    center: tuple
    size: int
    angular_step: float
    values: np.ndarray


def latitudes(height):
    # Integer numerator keeps lat(H-1-r) == -lat(r) bit for bit.
    r = np.arange(height, dtype=np.float64)
    return (height - 1 - 2 * r) * (np.pi / (2 * height))


def longitudes(width):
    c = np.arange(width, dtype=np.float64)
    return (2 * c + 1 - width) * (np.pi / width)


def check_erp_shape(height, width):
    if height < 1 or width < 1:
        raise ShapeError(f"ERP dimensions must be positive, got {height}x{width}")
    if width != 2 * height:
        raise ShapeError(f"ERP width must be twice the height, got {height}x{width}")


def erp_grid(height, width):
    """Return the :class:`LatLonGrid` for an ``height x width`` panorama."""
    if height < 2:
        raise ShapeError(f"ERP height must be at least 2, got {height}")
    check_erp_shape(height, width)
    return LatLonGrid(int(height), int(width))


def _as_chw(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img[None], True
    if img.ndim != 3:
        raise ShapeError(f"expected (H, W) or (C, H, W) image, got shape {img.shape}")
    return img, False


def _lerp2(img, ra, rb, ca, cb, fy, fx):
    # Difference form: a constant image is reproduced exactly.
    a = img[..., ra, ca]
    b = img[..., ra, cb]
    c = img[..., rb, ca]
    d = img[..., rb, cb]
    top = a + fx * (b - a)
    bot = c + fx * (d - c)
    return top + fy * (bot - top)


def bilinear_sample(img, lat, lon):
    """Sample an ERP image at arbitrary ``(lat, lon)`` in radians.

    ``lat`` and ``lon`` broadcast against each other. The result has shape
    ``(C,) + broadcast_shape`` for a ``(C, H, W)`` image and
    ``broadcast_shape`` for an ``(H, W)`` image.
    """
    chw, squeeze = _as_chw(img)
    _, h, w = chw.shape
    lat, lon = np.broadcast_arrays(np.asarray(lat, np.float64), np.asarray(lon, np.float64))
    if not (np.all(np.isfinite(lat)) and np.all(np.isfinite(lon))):
        raise ValueError("lat/lon must be finite")
    rf = (np.pi / 2 - lat) * (h / np.pi) - 0.5
    cf = (np.mod(lon + np.pi, 2 * np.pi)) * (w / (2 * np.pi)) - 0.5
    r0 = np.floor(rf)
    c0 = np.floor(cf)
    fy = rf - r0
    fx = cf - c0
    r0 = r0.astype(np.int64)
    c0 = c0.astype(np.int64)
    ra = np.clip(r0, 0, h - 1)
    rb = np.clip(r0 + 1, 0, h - 1)
    ca = np.mod(c0, w)
    cb = np.mod(c0 + 1, w)
    out = _lerp2(chw, ra, rb, ca, cb, fy, fx)
    return out[0] if squeeze else out


# ---------------------------------------------------------------------------
# Tangent (gnomonic) sampling


def tangent_offsets(height, width, size=3, angular_step=None):
    """Pixel offsets ``(drow, dcol)`` of a gnomonic grid, per row.

    Returns two ``(H, size, size)`` arrays. Entry ``[r, i, j]`` is the
    displacement, in fractional pixels, from pixel ``(r, c)`` to the sphere
    point under tangent-plane coordinates ``x = (j - k) * step`` (east),
    ``y = (k - i) * step`` (north) with ``k = size // 2``. The offsets do not
    depend on the column.
    """
    if size % 2 != 1 or size < 1:
        raise ValueError(f"patch size must be odd, got {size}")
    if angular_step is None:
        angular_step = 2 * np.pi / width
    if not angular_step > 0:
        raise ValueError("angular_step must be positive")
    lat0 = latitudes(height)[:, None, None]
    k = np.arange(size, dtype=np.float64) - size // 2
    y = (-k[:, None] * angular_step) * np.ones((1, size))
    x = (k[None, :] * angular_step) * np.ones((size, 1))
    s = 1.0 / np.sqrt(1.0 + x * x + y * y)
    sin0, cos0 = np.sin(lat0), np.cos(lat0)
    lat = np.arcsin(np.clip(s * (sin0 + y * cos0), -1.0, 1.0))
    dlon = np.arctan2(x * np.ones_like(lat0), cos0 - y * sin0)
    drow = (lat0 - lat) * (height / np.pi)
    dcol = dlon * (width / (2 * np.pi))
    centre = size // 2
    drow[:, centre, centre] = 0.0
    dcol[:, centre, centre] = 0.0
    return drow, dcol


class _TangentSampler:
    """Precomputed gather tables for tangent sampling on one lattice."""

    def __init__(self, height, width, size, angular_step):
        self.height, self.width, self.size = height, width, size
        drow, dcol = tangent_offsets(height, width, size, angular_step)
        rf = np.arange(height)[:, None, None] + drow
        r0 = np.floor(rf)
        c0 = np.floor(dcol)
        self.fy = rf - r0
        self.fx = dcol - c0
        r0 = r0.astype(np.int64)
        self.ra = np.clip(r0, 0, height - 1)
        self.rb = np.clip(r0 + 1, 0, height - 1)
        self.coff = c0.astype(np.int64)
        self.cols = np.arange(width)

    def _indices(self, i, j):
        ra = self.ra[:, i, j][:, None]
        rb = self.rb[:, i, j][:, None]
        ca = np.mod(self.cols[None, :] + self.coff[:, i, j][:, None], self.width)
        cb = np.mod(ca + 1, self.width)
        return ra, rb, ca, cb, self.fy[:, i, j][:, None], self.fx[:, i, j][:, None]

    def sample(self, plane):
        """``(..., H, W)`` -> ``(..., H, W, size, size)``."""
        out = np.empty(plane.shape + (self.size, self.size))
        for i in range(self.size):
            for j in range(self.size):
                ra, rb, ca, cb, fy, fx = self._indices(i, j)
                out[..., i, j] = _lerp2(plane, ra, rb, ca, cb, fy, fx)
        return out

    def adjoint(self, weights):
        """Transpose of :meth:`sample` for a single plane."""
        out = np.zeros((self.height, self.width))
        for i in range(self.size):
            for j in range(self.size):
                ra, rb, ca, cb, fy, fx = self._indices(i, j)
                g = weights[..., i, j]
                ra, rb = np.broadcast_to(ra, g.shape), np.broadcast_to(rb, g.shape)
                np.add.at(out, (ra, ca), g * (1 - fx) * (1 - fy))
                np.add.at(out, (ra, cb), g * fx * (1 - fy))
                np.add.at(out, (rb, ca), g * (1 - fx) * fy)
                np.add.at(out, (rb, cb), g * fx * fy)
        return out


@lru_cache(maxsize=32)
def _sampler(height, width, size, angular_step):
    return _TangentSampler(height, width, size, angular_step)


def tangent_sampler(height, width, size=3, angular_step=None):
    check_erp_shape(height, width)
    if angular_step is None:
        angular_step = 2 * np.pi / width
    return _sampler(int(height), int(width), int(size), float(angular_step))


def tangent_patches(img, size=3, angular_step=None):
    """Tangent patches for every pixel: ``(..., H, W) -> (..., H, W, size, size)``."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[-2:]
    return tangent_sampler(h, w, size, angular_step).sample(img)


def tangent_patch(img, row, col, size=3, angular_step=None):
    """Tangent patch centred on pixel ``(row, col)``."""
    if size % 2 != 1:
        raise ValueError(f"patch size must be odd, got {size}")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[-2:]
    if angular_step is None:
        angular_step = 2 * np.pi / w
    sampler = tangent_sampler(h, w, size, angular_step)
    values = np.empty(img.shape[:-2] + (size, size))
    for i in range(size):
        for j in range(size):
            ra, rb, ca, cb, fy, fx = sampler._indices(i, j)
            c = col % w
            values[..., i, j] = _lerp2(
                img, ra[row, 0], rb[row, 0], ca[row, c], cb[row, c], fy[row, 0], fx[row, 0]
            )
    return TangentPatch((row, col), size, float(angular_step), values)


# ---------------------------------------------------------------------------
# Cubemaps


def _yaw_rotate(v, yaw):
    """Rotate ``(..., 3)`` vectors about +y so that longitudes increase by ``yaw``."""
    c, s = np.cos(yaw), np.sin(yaw)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    return np.stack([x * c + z * s, y, -x * s + z * c], axis=-1)


def face_rays(face_size, face_index, yaw_offset=0.0):
    """Unnormalised rays ``(S, S, 3)`` through the pixel centres of one face."""
    t = (2 * (np.arange(face_size) + 0.5) / face_size) - 1.0
    v, u = np.meshgrid(t, t, indexing="ij")
    fwd, right, up = _FACE_AXES[face_index]
    rays = fwd + u[..., None] * right - v[..., None] * up
    return _yaw_rotate(rays, yaw_offset)


def ray_to_latlon(rays):
    x, y, z = rays[..., 0], rays[..., 1], rays[..., 2]
    lat = np.arctan2(y, np.hypot(x, z))
    lon = np.arctan2(x, z)
    return lat, lon


def latlon_to_ray(lat, lon):
    cl = np.cos(lat)
    return np.stack([cl * np.sin(lon), np.sin(lat) * np.ones_like(lon), cl * np.cos(lon)], axis=-1)


def erp_to_cubemap(img, face_size=None, yaw_offset=0.0):
    """Resample an ERP image onto six cube faces.

    ``yaw_offset`` (radians) turns every face about the vertical axis; a
    value of ``pi / 4`` gives the 45 degree rotated cubemap.
    """
    chw, _ = _as_chw(img)
    _, h, w = chw.shape
    check_erp_shape(h, w)
    if face_size is None:
        face_size = w // 4
    if face_size < 2:
        raise ValueError(f"face_size must be at least 2, got {face_size}")

    def one(k):
        lat, lon = ray_to_latlon(face_rays(face_size, k, yaw_offset))
        return bilinear_sample(chw, lat, lon)

    faces = np.stack(parallel_map(one, range(6)))
    return CubemapFaces(int(face_size), float(yaw_offset), faces)


def assign_faces(rays):
    """Face index per ray by the max-axis rule; ties go to the earlier face."""
    a = np.abs(rays)
    m = a.max(axis=-1)
    out = np.full(rays.shape[:-1], -1, dtype=np.int64)
    tests = []
    for fwd in _FACE_AXES[:, 0]:
        axis = int(np.argmax(np.abs(fwd)))
        sign = fwd[axis]
        tests.append((rays[..., axis] * sign > 0) & (a[..., axis] == m))
    for k, hit in enumerate(tests):
        out[(out < 0) & hit] = k
    return out


def cubemap_to_erp(faces, height, width):
    """Resample six cube faces back onto an ``height x width`` ERP lattice."""
    check_erp_shape(height, width)
    data = np.asarray(faces.faces, dtype=np.float64)
    if data.ndim == 3:
        data = data[:, None]
    if data.shape[0] != 6 or data.shape[-1] != data.shape[-2]:
        raise ShapeError(f"expected (6, C, S, S) faces, got {data.shape}")
    s = data.shape[-1]
    lat = latitudes(height)[:, None]
    lon = longitudes(width)[None, :]
    rays = _yaw_rotate(latlon_to_ray(lat, lon), -faces.yaw_offset)
    which = assign_faces(rays)
    out = np.zeros((data.shape[1], height, width))
    for k in range(6):
        sel = which == k
        if not np.any(sel):
            continue
        r = rays[sel]
        fwd, right, up = _FACE_AXES[k]
        t = r @ fwd
        u = (r @ right) / t
        v = -(r @ up) / t
        jf = np.clip((u + 1) * (s / 2) - 0.5, 0, s - 1)
        if_ = np.clip((v + 1) * (s / 2) - 0.5, 0, s - 1)
        i0 = np.minimum(np.floor(if_).astype(np.int64), s - 1)
        j0 = np.minimum(np.floor(jf).astype(np.int64), s - 1)
        fy = if_ - i0
        fx = jf - j0
        i1 = np.minimum(i0 + 1, s - 1)
        j1 = np.minimum(j0 + 1, s - 1)
        out[:, sel] = _lerp2(data[k], i0, i1, j0, j1, fy, fx)
    return out


def psnr(reference, test, mask=None, peak=None):
    """Peak signal-to-noise ratio in dB; ``peak`` defaults to the reference range."""
    reference = np.asarray(reference, np.float64)
    test = np.asarray(test, np.float64)
    if mask is not None:
        mask = np.broadcast_to(mask, reference.shape)
        reference, test = reference[mask], test[mask]
    if peak is None:
        peak = reference.max() - reference.min()
    mse = np.mean((reference - test) ** 2)
    if mse == 0:
        return float("inf")
    return float(10 * np.log10(peak**2 / mse))
