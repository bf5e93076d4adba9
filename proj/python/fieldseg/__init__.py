"""Critical-region segmentation, compression and statistics for grayscale images."""

from ._fieldseg import (
    FieldsegError,
    anneal,
    compress,
    criticality,
    default_m,
    kl_divergence,
    reconstruct,
    segment,
    shapiro_wilk,
    sweep,
)

__all__ = [
    "FieldsegError",
    "anneal",
    "compress",
    "criticality",
    "default_m",
    "kl_divergence",
    "reconstruct",
    "segment",
    "shapiro_wilk",
    "sweep",
]
__version__ = "0.1.0"
