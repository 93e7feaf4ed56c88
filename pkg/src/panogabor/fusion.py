"""Forward pass of the channel-wise and spatial-wise unidirectional fusion
module (CS-UFM), plus deterministic weight initialisation and the binary
weights file.

Pipeline for two ERP feature tensors ``a``, ``b`` of shape ``(C_in, H, W)``::

    x     = concat(a, b)                      (2 C_in, H, W)
    r     = conv1x1(x, compress)              (H, H, W)   residual features
    e     = pano_gabor_conv(r, banks)         (H, H, W)   enhanced features
    g     = e * mean_over_channels(r)         spatial-wise gate
    s     = se_layer(g, se)
    out   = conv1x1(s, output)                (C_out, H, W)
"""

import struct
from dataclasses import dataclass

import numpy as np

from .conv import SeWeights, conv1x1, pano_gabor_conv, se_hidden, se_layer, AGGREGATES
from .errors import FormatError, ShapeError
from .gabor import DISTORTION_MODES, latitude_bank_stack, stack_kernels

WEIGHTS_MAGIC = b"PGFW"
WEIGHTS_VERSION = 1

TENSOR_NAMES = (
    "compress.weight",
    "compress.bias",
    "pg.kernels",
    "se.reduce.weight",
    "se.reduce.bias",
    "se.expand.weight",
    "se.expand.bias",
    "output.weight",
    "output.bias",
)


@dataclass
class FusionConfig:
    aggregate: str = "mean"
    epsilon: float = 0.0
    distortion_mode: str = "linear"
    c_out: int = 16

    def validate(self):
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"unknown aggregate {self.aggregate!r}")
        if self.distortion_mode not in DISTORTION_MODES:
            raise ValueError(f"unknown distortion mode {self.distortion_mode!r}")
        if self.c_out < 1:
            raise ValueError("c_out must be positive")


@dataclass
class FusionWeights:
    compress_weight: np.ndarray  # (H, 2 C_in)
    compress_bias: np.ndarray  # (H,)
    pg_kernels: np.ndarray  # (H, 8, 3, 3)
    se: SeWeights
    output_weight: np.ndarray  # (C_out, H)
    output_bias: np.ndarray  # (C_out,)

    @property
    def height(self):
        return self.compress_weight.shape[0]

    @property
    def c_in(self):
        return self.compress_weight.shape[1] // 2

    @property
    def c_out(self):
        return self.output_weight.shape[0]

    def tensors(self):
        return {
            "compress.weight": self.compress_weight,
            "compress.bias": self.compress_bias,
            "pg.kernels": self.pg_kernels,
            "se.reduce.weight": self.se.reduce_weight,
            "se.reduce.bias": self.se.reduce_bias,
            "se.expand.weight": self.se.expand_weight,
            "se.expand.bias": self.se.expand_bias,
            "output.weight": self.output_weight,
            "output.bias": self.output_bias,
        }

    @classmethod
    def from_tensors(cls, t):
        w = cls(
            t["compress.weight"],
            t["compress.bias"],
            t["pg.kernels"],
            SeWeights(t["se.reduce.weight"], t["se.reduce.bias"], t["se.expand.weight"], t["se.expand.bias"]),
            t["output.weight"],
            t["output.bias"],
        )
        w.validate()
        return w

    def validate(self):
        """Check the channel chain ``2 C_in -> H -> H -> C_out``."""
        cw = self.compress_weight
        if cw.ndim != 2 or cw.shape[1] % 2 or cw.shape[1] == 0:
            raise ShapeError(f"compress.weight must be (H, 2*C_in), got {cw.shape}")
        h = cw.shape[0]
        problems = []
        if self.compress_bias.shape != (h,):
            problems.append(f"compress.bias {self.compress_bias.shape} != ({h},)")
        if self.pg_kernels.ndim != 4 or self.pg_kernels.shape[0] != h:
            problems.append(f"pg.kernels {self.pg_kernels.shape} needs {h} banks")
        if self.se.channels != h:
            problems.append(f"SE layer has {self.se.channels} channels, expected {h}")
        if self.output_weight.ndim != 2 or self.output_weight.shape[1] != h:
            problems.append(f"output.weight {self.output_weight.shape} must take {h} channels")
        elif self.output_bias.shape != (self.output_weight.shape[0],):
            problems.append(f"output.bias {self.output_bias.shape} mismatch")
        if problems:
            raise ShapeError("inconsistent fusion weights: " + "; ".join(problems))
        self.se.validate()
        for name, arr in self.tensors().items():
            if not np.all(np.isfinite(arr)):
                raise ShapeError(f"{name} contains non-finite values")


def init_weights(c_in, height, seed=0, scheme="uniform", cfg=None):
    """Deterministic weights for an ``H``-row feature map.

    ``uniform`` draws every matrix and bias from ``U(-1/sqrt(fan_in),
    1/sqrt(fan_in))`` using ``numpy.random.default_rng(seed)``.
    ``constant`` fills every matrix with ``1/fan_in`` and biases with 0.
    The Gabor kernels always come from :func:`latitude_bank_stack`.
    """
    cfg = cfg or FusionConfig()
    cfg.validate()
    hidden = se_hidden(height)
    shapes = [
        ("compress", (height, 2 * c_in)),
        ("se.reduce", (hidden, height)),
        ("se.expand", (height, hidden)),
        ("output", (cfg.c_out, height)),
    ]
    rng = np.random.default_rng(seed)
    mats = {}
    for name, (n_out, fan_in) in shapes:
        if scheme == "uniform":
            bound = 1.0 / np.sqrt(fan_in)
            mats[name] = (rng.uniform(-bound, bound, (n_out, fan_in)), rng.uniform(-bound, bound, n_out))
        elif scheme == "constant":
            mats[name] = (np.full((n_out, fan_in), 1.0 / fan_in), np.zeros(n_out))
        else:
            raise ValueError(f"unknown init scheme {scheme!r}")
    # stored as float32 so a save/load round trip is exact
    mats = {k: tuple(m.astype(np.float32) for m in v) for k, v in mats.items()}
    kernels = stack_kernels(latitude_bank_stack(height, cfg.epsilon, cfg.distortion_mode))
    return FusionWeights(
        *mats["compress"],
        kernels.astype(np.float32),
        SeWeights(*mats["se.reduce"], *mats["se.expand"]),
        *mats["output"],
    )


def cs_ufm_forward(a, b, w, cfg=None):
    """Fuse two ``(C_in, H, W)`` ERP feature tensors into ``(C_out, H, W)``."""
    cfg = cfg or FusionConfig()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 3:
        raise ShapeError(f"inputs must share a (C, H, W) shape, got {a.shape} and {b.shape}")
    w.validate()
    c_in, h, _ = a.shape
    if w.c_in != c_in or w.height != h:
        raise ShapeError(f"weights expect C_in={w.c_in}, H={w.height}; inputs have C_in={c_in}, H={h}")
    x = np.concatenate([a, b])
    r = conv1x1(x, w.compress_weight, w.compress_bias)
    e = pano_gabor_conv(r, w.pg_kernels, cfg.aggregate)
    gate = r.mean(axis=0)
    s = se_layer(e * gate, w.se)
    return conv1x1(s, w.output_weight, w.output_bias)


# ---------------------------------------------------------------------------
# weights file: "PGFW", u32 version, then records of
#   u32 name_len, name bytes, u32 rank, u32 dims[rank], float32 payload
# all little-endian.


def save_weights(w, path):
    w.validate()
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", WEIGHTS_VERSION))
        for name, arr in w.tensors().items():
            arr = np.ascontiguousarray(arr, dtype="<f4")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, section):
        if self.pos + n > len(self.data):
            raise FormatError(
                f"truncated weights file while reading {section}", position=self.pos, section=section
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, section):
        return struct.unpack("<I", self.take(4, section))[0]


def load_weights(path):
    """Read a weights file; raises :class:`FormatError` or :class:`ShapeError`."""
    with open(path, "rb") as fh:
        data = fh.read()
    rd = _Reader(data)
    if rd.take(4, "magic") != WEIGHTS_MAGIC:
        raise FormatError("not a PGFW weights file (bad magic)", position=0, section="magic")
    version = rd.u32("version")
    if version != WEIGHTS_VERSION:
        raise FormatError(f"unsupported weights version {version}", position=4, section="version")
    tensors = {}
    while rd.pos < len(data):
        start = rd.pos
        name_len = rd.u32("record name length")
        name = rd.take(name_len, "record name").decode("utf-8", errors="replace")
        if name not in TENSOR_NAMES:
            raise FormatError(f"unknown tensor {name!r}", position=start, section=name)
        rank = rd.u32(f"{name} rank")
        dims = struct.unpack(f"<{rank}I", rd.take(4 * rank, f"{name} dims"))
        count = int(np.prod(dims, dtype=np.int64))
        payload = rd.take(4 * count, f"{name} payload")
        tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)
    missing = [n for n in TENSOR_NAMES if n not in tensors]
    if missing:
        raise FormatError(
            f"weights file is missing {', '.join(missing)}", position=rd.pos, section=missing[0]
        )
    return FusionWeights.from_tensors(tensors)
