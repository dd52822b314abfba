"""Amplitude-phase separation, kriging and clustering for spatial functional data."""

from spafda.fdcore import (
    Grid,
    PsiFunction,
    SampledFunction,
    SrsfFunction,
    WarpingFunction,
    group_action,
    psi_to_warp,
    srsf_inverse,
    srsf_transform,
    warp_compose,
    warp_invert,
    warp_to_psi,
)
from spafda.dataio import SpatialDataset

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "SampledFunction",
    "SrsfFunction",
    "WarpingFunction",
    "PsiFunction",
    "SpatialDataset",
    "srsf_transform",
    "srsf_inverse",
    "group_action",
    "warp_compose",
    "warp_invert",
    "warp_to_psi",
    "psi_to_warp",
]
