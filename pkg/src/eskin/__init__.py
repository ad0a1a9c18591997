"""Synthetic capacitive e-skin toolkit: a seeded simulator of a 10 x 10
stretchable sensor grid plus the learning pipeline that decouples global
stretch, contact location, and contact force from one 20-channel frame."""

from .config import RunConfig, apply_seed, load_config
from .core import (
    FRAME_HEADER,
    N_FEATURES,
    NODE_ZERO,
    PROTOCOL_FORCES,
    PROTOCOL_STRETCHES,
    Axis,
    CapacitanceFrame,
    Dataset,
    DatasetMeta,
    NodeCoord,
    SingleContactSample,
    TerminalId,
    TwoContactSample,
    load_dataset,
    node_id,
    read_dataset,
    read_frames,
    save_dataset,
    write_dataset,
    write_frames,
)
from .errors import (
    ConfigError,
    CoverageError,
    DegenerateLabelsError,
    EskinError,
    FactorizationError,
    ParseError,
    ProtocolError,
    SchemaError,
    SingularDesignError,
    UndefinedMetricError,
    ValidationError,
)
from .evalkit import (
    ConfusionMatrix,
    FoldPlan,
    MetricsReport,
    confusion,
    cross_validate,
    cross_validate_two,
    mse,
    r2,
    stratified_kfold,
    write_report_files,
)
from .pipeline import (
    ContactEstimate,
    PipelineConfig,
    TrainedPipeline,
    TrainedTwoPipeline,
    TwoContactEstimate,
    infer_single,
    infer_two,
    load_pipeline,
    save_pipeline,
    train_single,
    train_two,
)
from .sim import (
    Contact,
    SingleForceProtocol,
    SkinModel,
    TwoForceProtocol,
    derive_seed,
    generate_single_force_dataset,
    generate_two_force_dataset,
    simulate_frame,
)

__version__ = "0.1.0"
