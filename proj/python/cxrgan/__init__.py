"""Python access to the cxrgan core: metrics, weight bundles and pipeline stages."""

import torch  # noqa: F401  (loads libtorch for the extension)

from ._cxrgan import (
    ChecksumError,
    ConfigError,
    FingerprintError,
    IoError,
    MissingArtifactError,
    ShapeError,
    TrainingInstabilityError,
    __version__,
    backbone_features,
    classification_report,
    confusion_matrix,
    denormalize,
    gradient_penalty_linear,
    load_config,
    normalize,
    parameter_counts,
    read_bundle,
    render_report,
    roc_curve,
    run,
)
from .weights import export_state_dict, write_bundle

__all__ = [
    "ChecksumError",
    "ConfigError",
    "FingerprintError",
    "IoError",
    "MissingArtifactError",
    "ShapeError",
    "TrainingInstabilityError",
    "__version__",
    "backbone_features",
    "classification_report",
    "confusion_matrix",
    "denormalize",
    "export_state_dict",
    "gradient_penalty_linear",
    "load_config",
    "normalize",
    "parameter_counts",
    "read_bundle",
    "render_report",
    "roc_curve",
    "run",
    "write_bundle",
]
