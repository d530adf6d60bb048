"""Intrinsic image decomposition toolkit.

Factor an image I into reflectance R and shading S with I = R * S:
percentile-anchored tone mapping, ground-truth generation, the full
multi-term decomposition loss suite with analytic gradients, a bilateral
smoothness operator, a per-image variational solver, and the WHDR / SAW /
MIT evaluation metrics.
"""

from .annotations import (
    OrdinalJudgment,
    OrdinalJudgmentSet,
    SawAnnotationSet,
    SuperpixelLabels,
    augment_judgments,
    dilate_points,
    sample_cgi_ordinals,
    slic_superpixels,
)
from .bilateral import BilateralOperator, brute_force_quadratic, build_operator
from .evaluation import MitMetrics, PrCurve, mit_metrics, saw_pr, whdr
from .image import (
    Decomposition,
    GradientField,
    LinearImage,
    LogImage,
    Pyramid,
    build_pyramid,
    chromaticity,
    gradients,
    intensity,
)
from .io import GroundTruthTriple, make_ground_truth, read_pfm, read_png, write_pfm, write_png
from .losses import (
    LossResult,
    LossWeights,
    composite_cgi,
    composite_iiw,
    composite_saw,
    constant_shading_loss,
    grad_match,
    ordinal_loss,
    reconstruction_loss,
    reflectance_smoothness,
    shading_smoothness,
    shadow_boundary_loss,
    si_mse,
)
from .solver import SolveConfig, SolveReport, decompose, score
from .tonemap import ToneMapParams, tonemap

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
