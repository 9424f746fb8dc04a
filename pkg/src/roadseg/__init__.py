"""LIDAR road-segmentation toolkit.

Converts raw 64-layer scans into bird-eye-view and spherical-view feature
tensors (classical statistics plus range-image surface normals), simulates
32/16-layer scanners by whole-layer removal, and scores predicted confidence
maps against projected ground truth.
"""

from .bev import BEVImage, BEVMask, load_bev_gt, project_bev
from .core import (
    DEFAULT_ROAD_CLASS,
    FormatError,
    PointCloudScan,
    PointLabels,
    Tensor,
    read_labels,
    read_scan,
    read_tensor,
    write_tensor,
)
from .layering import (
    AzimuthTrace,
    LayerDetectionError,
    LayeredScan,
    assign_layers,
    compute_azimuth,
    subsample,
)
from .metrics import (
    Confusion,
    MetricsReport,
    PRCurve,
    average_precision,
    confusion,
    evaluate,
    evaluate_frames,
    f1_score,
    pr_curve,
)
from .normals import (
    NormalMap,
    RangeGradients,
    back_project,
    estimate_normals,
    normals_to_points,
    normals_to_rgb,
    range_gradients,
    tangent_vectors,
)
from .sv import (
    SVImage,
    SVMask,
    SphericalCoords,
    project_sv,
    project_sv_labels,
    project_sv_uniform,
    to_spherical,
)

__version__ = "0.1.0"
