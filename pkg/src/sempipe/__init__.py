"""SEM filter-image analysis pipeline: preprocessing, porometry, label
curation, segmentation evaluation, and a synthetic ground-truth generator."""

from .annotations import (
    Annotation,
    ParticleClass,
    Polygon,
    ShapeMetrics,
    classify_fiber,
    parse_label_file,
    rasterize,
    shape_metrics,
    write_label_file,
)
from .dataset import (
    DatasetEntry,
    FilterType,
    SizeFilterMode,
    SizeFilterRule,
    SplitResult,
    filter_small_particles,
    prune_empty_images,
    stratified_split,
)
from .enhance import (
    BinaryMask,
    ClaheConfig,
    binarize,
    clahe,
    otsu_binarize,
    otsu_threshold,
)
from .evaluation import (
    EvalReport,
    MatchConfig,
    average_precision,
    compute_metrics,
    fitness_score,
    mask_iou,
    match_predictions,
)
from .image_core import GrayImage, center_crop, load_image, save_image
from .porometry import (
    ComponentLabeling,
    PoreEstimate,
    connected_components,
    estimate_pore_size,
)
from .synthgen import SynthConfig, SynthSample, generate_dataset, generate_sample

__version__ = "0.1.0"
