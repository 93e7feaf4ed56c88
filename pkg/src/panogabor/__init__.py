"""Distortion-aware Gabor filtering, spherical gradients, feature fusion and
depth losses/metrics for equirectangular 360 panoramas."""

from .conv import SeWeights, conv1x1, conv2d_wrap, latitude_filter, pano_gabor_conv, se_layer
from .errors import DivergenceError, FormatError, PanoGaborError, ShapeError
from .fusion import FusionConfig, FusionWeights, cs_ufm_forward, init_weights, load_weights, save_weights
from .gabor import (
    FilterBank,
    GaborParams,
    distortion_coefficient,
    export_bank_image,
    gabor_kernel,
    latitude_bank_stack,
    pano_gabor_bank,
)
from .geometry import (
    CubemapFaces,
    LatLonGrid,
    TangentPatch,
    bilinear_sample,
    cubemap_to_erp,
    erp_grid,
    erp_to_cubemap,
    tangent_patch,
)
from .losses import (
    LossConfig,
    berhu_loss,
    fit_depth,
    spherical_gradient,
    spherical_gradient_loss,
    total_loss,
    total_loss_grad,
)
from .metrics import MetricReport, depth_metrics

__version__ = "0.1.0"
