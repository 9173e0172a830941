"""planforge: boundary-constrained diffusion workbench for vector floorplans."""

from .geometry import (
    Boundary,
    BubbleGraph,
    Floorplan,
    Point,
    Polygon,
    Room,
    ROOM_TYPES,
    extract_adjacency,
    out_of_boundary_ratio,
    point_in_polygon,
    polygon_area,
    rasterize,
)
from .dataset import (
    CornerHistogram,
    DatasetManifest,
    FloorplanRecord,
    apply_drift,
    build_corner_histogram,
    few_shot_subset,
    gen_pentagon_set,
    load_dataset,
    sample_corner_counts,
    save_dataset,
)
from .diffusion import (
    LayoutTensor,
    NoiseSchedule,
    SampleRequest,
    cfg_blend,
    cosine_schedule,
    forward_diffuse,
    predict_x0,
)
from .denoiser import (
    AttentionMasks,
    Denoiser,
    ModelConfig,
    TrainConfig,
    build_masks,
    fine_tune,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .sampler import sample
from .estimator import FloorplanDiffusion
from .metrics import (
    MetricsReport,
    boundary_compatibility,
    diversity_score,
    evaluate,
    fid,
    graph_compatibility,
)
from .features import FeatureExtractor, geometric_features, raster_projection_features
from .errors import (
    CheckpointError,
    ConfigMismatchError,
    NumericError,
    ParseError,
    PlanforgeError,
    ValidationError,
)

__version__ = "0.1.0"
