"""Mask-geometry metrics and textural separability probes.

The package quantifies two things about a segmentation target: how
tree-like its silhouette is (contour pixel rate, difference of Gini
dispersion) and how textually distinct it is from its immediate
surroundings (held-out accuracy of a linear probe over conv features).
A CLI drives corpus-scale runs, synthetic corpus generation, geometry
ablations and correlation reports against IoU.
"""

from .errors import SegmetricsError
from .imgcore import (
    BBox,
    LabeledComponents,
    StructuringElement,
    connected_components,
    dilate,
    erode_diamond,
    make_element,
    neighbor_counts,
    resize_image,
    resize_mask_nn,
    skeletonize,
    tight_bbox,
)
from .separability import (
    ConvFilterBank,
    LinearProbe,
    ProbeConfig,
    boundary_band,
    extract_features,
    load_filter_bank,
    random_filter_bank,
    save_filter_bank,
    textural_separability,
    train_probe,
)
from .stats import (
    CorrelationReport,
    MetricSeries,
    aggregate,
    correlate,
    iou,
    kendall_tau,
    majority_vote,
    morans_i,
    pearson_r,
    spearman_rho,
)
from .synthgen import (
    PromptSet,
    SynthSpec,
    TextureBank,
    generate_dataset,
    place_object,
    sample_component,
    sample_prompts,
    texturize,
    thicken_skeleton,
    zoom_to_scale,
)
from .treelike import GiniMap, TreelikeConfig, cpr, dogd, gini_map, gini_std

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "ConvFilterBank",
    "CorrelationReport",
    "GiniMap",
    "LabeledComponents",
    "LinearProbe",
    "MetricSeries",
    "ProbeConfig",
    "PromptSet",
    "SegmetricsError",
    "StructuringElement",
    "SynthSpec",
    "TextureBank",
    "TreelikeConfig",
    "aggregate",
    "boundary_band",
    "connected_components",
    "correlate",
    "cpr",
    "dilate",
    "erode_diamond",
    "dogd",
    "extract_features",
    "generate_dataset",
    "gini_map",
    "gini_std",
    "iou",
    "kendall_tau",
    "load_filter_bank",
    "majority_vote",
    "make_element",
    "morans_i",
    "neighbor_counts",
    "pearson_r",
    "place_object",
    "random_filter_bank",
    "resize_image",
    "resize_mask_nn",
    "sample_component",
    "sample_prompts",
    "save_filter_bank",
    "skeletonize",
    "spearman_rho",
    "texturize",
    "textural_separability",
    "thicken_skeleton",
    "tight_bbox",
    "train_probe",
    "zoom_to_scale",
]
