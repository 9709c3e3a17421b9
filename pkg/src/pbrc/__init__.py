"""Reservoir-computing sequence classifiers: ESN, BRC and parallel BRC.

Encoders turn variable-length keypoint sequences into fixed-length state
vectors; a closed-form ridge readout maps those to class scores. All
randomness flows from one 64-bit seed through a counter-based generator,
so every result is bit-reproducible.
"""

from .bidir import BidirReservoir, bidir_encode, init_bidir, reverse_sequence
from .dataset import (
    Dataset,
    DatasetManifest,
    KeypointSequence,
    LandmarkGroup,
    NormStats,
    apply_norm,
    default_landmark_layout,
    fit_norm,
    load_dataset,
    resample_frames,
    resample_sequence,
    save_dataset,
    synth_generate,
)
from .errors import (
    ConvergenceError,
    DataError,
    DegenerateMatrixError,
    DegenerateTaskError,
    DimensionError,
    EmptyInputError,
    EncodingError,
    IntegrityError,
    NumericError,
    ParseError,
    PbrcError,
    SchemaError,
    SingularMatrixError,
    UnknownLabelError,
)
from .linalg import (
    RngStream,
    estimate_spectral_radius,
    random_matrix,
    rescale_to_spectral_radius,
    ridge_solve,
)
from .model import (
    FORMAT_VERSION,
    TOPOLOGIES,
    ModelArtifact,
    TopologyEncoder,
    build_encoder,
    load_model,
    save_model,
)
from .parallel import PbrcEncoder, encode_dataset, init_pbrc, pbrc_encode
from .readout import (
    Metrics,
    RidgeReadout,
    evaluate,
    fit_readout,
    one_hot_targets,
    rank_classes,
    top_k,
)
from .reservoir import (
    POOLING_POLICIES,
    ReservoirConfig,
    ReservoirWeights,
    StateTrajectory,
    apply_washout,
    esn_encode,
    init_reservoir,
    pool,
    run,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BidirReservoir",
    "ConvergenceError",
    "DataError",
    "Dataset",
    "DatasetManifest",
    "DegenerateMatrixError",
    "DegenerateTaskError",
    "DimensionError",
    "EmptyInputError",
    "EncodingError",
    "FORMAT_VERSION",
    "IntegrityError",
    "KeypointSequence",
    "LandmarkGroup",
    "Metrics",
    "ModelArtifact",
    "NormStats",
    "NumericError",
    "POOLING_POLICIES",
    "ParseError",
    "PbrcEncoder",
    "PbrcError",
    "ReservoirConfig",
    "ReservoirWeights",
    "RidgeReadout",
    "RngStream",
    "SchemaError",
    "SingularMatrixError",
    "StateTrajectory",
    "TOPOLOGIES",
    "TopologyEncoder",
    "UnknownLabelError",
    "apply_norm",
    "apply_washout",
    "bidir_encode",
    "build_encoder",
    "default_landmark_layout",
    "encode_dataset",
    "esn_encode",
    "estimate_spectral_radius",
    "evaluate",
    "fit_norm",
    "fit_readout",
    "init_bidir",
    "init_pbrc",
    "init_reservoir",
    "load_dataset",
    "load_model",
    "one_hot_targets",
    "pbrc_encode",
    "pool",
    "random_matrix",
    "rank_classes",
    "rescale_to_spectral_radius",
    "resample_frames",
    "resample_sequence",
    "reverse_sequence",
    "ridge_solve",
    "run",
    "save_dataset",
    "save_model",
    "step",
    "synth_generate",
    "top_k",
]
