"""File formats: tensor files, PFM depth maps, PNG images, depth colouring.

Tensor file (``.pgt``), little-endian::

    b"PGTN" | u32 version (=1) | u32 rank | u32 dims[rank] | float32 payload

PFM: grayscale ``Pf`` or colour ``PF``; a negative scale marks
little-endian data; rows are stored bottom to top.

16-bit depth PNGs store millimetres: ``pixel = round(depth_m * 1000)``.
"""

import struct
from pathlib import Path

import matplotlib
import numpy as np
import png

from .errors import FormatError

TENSOR_MAGIC = b"PGTN"
TENSOR_VERSION = 1
DEPTH_PNG_SCALE = 1000.0  # pixel units per metre

# 256-entry RGB table (matplotlib's viridis listing); fixed, so depth
# renders are reproducible.
COLORMAP = np.round(np.asarray(matplotlib.colormaps["viridis"].colors) * 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# tensor files


def save_tensor(path, arr):
    arr = np.asarray(arr, dtype="<f4", order="C")
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<II", TENSOR_VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def load_tensor(path):
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != TENSOR_MAGIC:
        raise FormatError(f"{path}: not a PGTN tensor file (bad magic)", position=0, section="magic")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header", position=len(data), section="header")
    version, rank = struct.unpack_from("<II", data, 4)
    if version != TENSOR_VERSION:
        raise FormatError(f"{path}: unsupported version {version}", position=4, section="version")
    end = 12 + 4 * rank
    if len(data) < end:
        raise FormatError(f"{path}: truncated dims", position=len(data), section="dims")
    dims = struct.unpack_from(f"<{rank}I", data, 12)
    expected = 4 * int(np.prod(dims, dtype=np.int64))
    if len(data) - end != expected:
        raise FormatError(
            f"{path}: payload is {len(data) - end} bytes, dims {dims} need {expected}",
            position=end,
            section="payload",
        )
    return np.frombuffer(data, dtype="<f4", offset=end).reshape(dims).astype(np.float32)


# ---------------------------------------------------------------------------
# PFM


def _pfm_tokens(data, count):
    """Split the first ``count`` whitespace-separated header tokens."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PFM header", position=pos, section="header")
        tokens.append((data[start:pos], start))
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pfm(path):
    """Read a PFM file: ``(H, W)`` for ``Pf``, ``(3, H, W)`` for ``PF``."""
    data = Path(path).read_bytes()
    tokens, offset = _pfm_tokens(data, 4)
    (tag, _), (w_raw, w_pos), (h_raw, h_pos), (s_raw, s_pos) = tokens
    if tag not in (b"Pf", b"PF"):
        raise FormatError(f"{path}: bad PFM tag {tag!r}", position=0, section="tag")
    try:
        width = int(w_raw)
    except ValueError:
        raise FormatError(f"{path}: bad PFM width {w_raw!r}", position=w_pos, section="width") from None
    try:
        height = int(h_raw)
    except ValueError:
        raise FormatError(f"{path}: bad PFM height {h_raw!r}", position=h_pos, section="height") from None
    try:
        scale = float(s_raw)
    except ValueError:
        raise FormatError(f"{path}: bad PFM scale {s_raw!r}", position=s_pos, section="scale") from None
    if width <= 0 or height <= 0 or scale == 0:
        raise FormatError(f"{path}: invalid PFM header values", position=w_pos, section="header")
    channels = 3 if tag == b"PF" else 1
    dtype = "<f4" if scale < 0 else ">f4"
    need = 4 * width * height * channels
    if len(data) - offset < need:
        raise FormatError(
            f"{path}: raster has {len(data) - offset} bytes, need {need}", position=offset, section="raster"
        )
    arr = np.frombuffer(data, dtype=dtype, count=width * height * channels, offset=offset)
    arr = arr.reshape(height, width, channels)[::-1].astype(np.float32)
    if channels == 1:
        return arr[..., 0]
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def write_pfm(path, arr):
    """Write ``(H, W)`` as ``Pf`` or ``(3, H, W)`` as ``PF``, little-endian."""
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim == 2:
        tag, raster = b"Pf", arr
    elif arr.ndim == 3 and arr.shape[0] == 3:
        tag, raster = b"PF", arr.transpose(1, 2, 0)
    else:
        raise ValueError(f"PFM needs (H, W) or (3, H, W), got {arr.shape}")
    h, w = raster.shape[:2]
    with open(path, "wb") as fh:
        fh.write(tag + b"\n" + f"{w} {h}\n".encode() + b"-1.0\n")
        fh.write(np.ascontiguousarray(raster[::-1], dtype="<f4").tobytes())


# ---------------------------------------------------------------------------
# PNG


def write_png(path, arr, bitdepth=8):
    """Write ``(H, W)`` gray or ``(H, W, 3)`` RGB integers at 8 or 16 bits."""
    arr = np.asarray(arr)
    if bitdepth not in (8, 16):
        raise ValueError("bitdepth must be 8 or 16")
    if arr.ndim == 2:
        grey, planes = True, 1
    elif arr.ndim == 3 and arr.shape[2] == 3:
        grey, planes = False, 3
    else:
        raise ValueError(f"PNG needs (H, W) or (H, W, 3), got {arr.shape}")
    top = (1 << bitdepth) - 1
    if arr.size and (arr.min() < 0 or arr.max() > top):
        raise ValueError(f"values outside [0, {top}] for {bitdepth}-bit PNG")
    h, w = arr.shape[:2]
    writer = png.Writer(w, h, greyscale=grey, bitdepth=bitdepth, compression=6)
    rows = arr.astype(np.uint16 if bitdepth == 16 else np.uint8).reshape(h, w * planes)
    with open(path, "wb") as fh:
        writer.write(fh, rows)


def read_png(path):
    """Read a gray or RGB(A) PNG as ``(H, W)`` or ``(H, W, C)`` unsigned ints."""
    try:
        w, h, rows, info = png.Reader(filename=str(path)).read()
        data = np.vstack([np.asarray(r) for r in rows])
    except png.Error as exc:
        raise FormatError(f"{path}: {exc}", section="png") from None
    planes = info["planes"]
    dtype = np.uint16 if info["bitdepth"] > 8 else np.uint8
    data = data.astype(dtype).reshape(h, w, planes)
    return data[..., 0] if planes == 1 else data


def write_depth_png16(path, depth):
    mm = np.clip(np.round(np.asarray(depth, np.float64) * DEPTH_PNG_SCALE), 0, 65535)
    write_png(path, mm.astype(np.uint16), bitdepth=16)


def read_depth_png16(path):
    return read_png(path).astype(np.float64) / DEPTH_PNG_SCALE


def colorize(values, vmin=None, vmax=None):
    """Map a 2-D array onto :data:`COLORMAP`, returning ``(H, W, 3)`` uint8."""
    values = np.asarray(values, dtype=np.float64)
    lo = np.min(values) if vmin is None else vmin
    hi = np.max(values) if vmax is None else vmax
    if hi <= lo:
        idx = np.full(values.shape, 128, dtype=np.int64)
    else:
        idx = np.clip(np.round((values - lo) / (hi - lo) * 255), 0, 255).astype(np.int64)
    return COLORMAP[idx]


# ---------------------------------------------------------------------------
# generic loaders keyed on extension


def load_image(path):
    """Load an image as a float ``(C, H, W)`` array.

    ``.pfm`` and ``.pgt`` are returned as stored (a 2-D tensor gains a
    channel axis); 8/16-bit PNGs are scaled to [0, 1].
    """
    suffix = Path(path).suffix.lower()
    if suffix == ".pfm":
        arr = read_pfm(path)
    elif suffix == ".pgt":
        arr = load_tensor(path)
    elif suffix == ".png":
        raw = read_png(path)
        arr = raw.astype(np.float64) / (65535.0 if raw.dtype == np.uint16 else 255.0)
        if arr.ndim == 3:
            arr = arr[..., :3].transpose(2, 0, 1)
    else:
        raise FormatError(f"{path}: unsupported image extension {suffix!r}", section="extension")
    arr = np.asarray(arr, dtype=np.float64)
    return arr[None] if arr.ndim == 2 else arr


def load_depth(path):
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        return read_depth_png16(path)
    arr = load_image(path)
    if arr.shape[0] != 1:
        raise FormatError(f"{path}: depth map must have one channel, got {arr.shape[0]}", section="channels")
    return arr[0]


def save_image(path, arr):
    """Save ``(C, H, W)`` by extension; PNGs clip to [0, 1] and use 8 bits."""
    suffix = Path(path).suffix.lower()
    arr = np.asarray(arr, dtype=np.float64)
    if suffix == ".pgt":
        save_tensor(path, arr)
    elif suffix == ".pfm":
        write_pfm(path, arr[0] if arr.ndim == 3 and arr.shape[0] == 1 else arr)
    elif suffix == ".png":
        img = arr[0] if arr.shape[0] == 1 else arr[:3].transpose(1, 2, 0)
        write_png(path, np.round(np.clip(img, 0, 1) * 255).astype(np.uint8))
    else:
        raise FormatError(f"{path}: unsupported image extension {suffix!r}", section="extension")
