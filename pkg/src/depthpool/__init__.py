"""Depth-video action segmentation and rank-pooled dynamic images."""

from .config import BaselineParams, PipelineConfig, dump_config, load_config
from .depth_io import (
    DepthFrame,
    DepthSequence,
    DynamicImage,
    load_depth_sequence,
    load_dynamic_image,
    quantize_field,
    save_depth_png_dir,
    save_depth_sequence,
    save_dynamic_image,
)
from .fusion_eval import (
    NO_LABEL,
    PredictionRecord,
    jaccard_class,
    jaccard_sequence,
    l1_normalize,
    labels_from_segments,
    mean_jaccard,
    product_fuse,
    recognition_rate,
)
from .rank_pooling import (
    HierarchyConfig,
    RankPoolParams,
    hierarchical_bidirectional,
    hierarchical_rank_pool,
    rank_pool,
    rank_pool_bidirectional,
    rank_pool_layer,
    smoothed_features,
)
from .representations import (
    BackgroundParams,
    DynamicImageSet,
    GmmParams,
    NormalField,
    build_ddi,
    build_ddmni,
    build_ddni,
    compute_normals,
    gmm_foreground,
    remove_background,
)
from .segmentation import (
    ActionSegment,
    QomParams,
    SegmentationModel,
    compute_qom,
    fit_segmentation_model,
    levenshtein_segmentation_score,
    qom_profile,
    segment_actions,
)

__version__ = "0.1.0"
