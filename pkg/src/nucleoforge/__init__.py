"""Skeleton maps, contour-aware losses, synthetic nuclei masks and metrics."""

from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyContourSet,
    NotAContourPixel,
    NucleoforgeError,
    PlacementExhausted,
    ScoreOutOfRange,
    TooSmall,
)
from .estimators import SkeletonMapTransformer, WatershedSplitter
from .loss import (
    LossBreakdown,
    LossParams,
    adversarial_terms,
    contrast_report,
    loss_gradient,
    optimize_patch,
    s1_term,
    s2_term,
    sharpness_loss,
    smoothness_loss,
    total_loss,
)
from .quality import QualityConstants, QualityReport, fsim, gmsd, quality_report, ssim
from .raster import ContourSet, connected_components, contour_mask, erode_once, extract_contours, to_grayscale
from .segmentation import MatchResult, SegReport, aji, dq_sq_pq, iou_matching, seg_report, watershed_split
from .synth import SynthConfig, batch_gen, gen_nuclei_masks
from .topo import distance_map, erosion_depth, skeleton_map, topo_skeleton

__version__ = "0.1.0"
