"""Voxel-level segmentation and spatial evaluation for brain tumour MRI.

Volumes are numpy arrays of shape (nx, ny, nz); spacing is in mm per axis.
"""

from ._core import (
    EmptyMaskError,
    FormatError,
    GeometryMismatch,
    InvalidArgument,
    IoError,
    VoxelvalError,
    boundary,
    dice,
    dilate_mm,
    edt,
    fuse,
    gaussian_smooth,
    hausdorff95,
    jaccard,
    load,
    one_way_anova,
    rim_profile,
    save_labels,
    save_scalar,
    sign_flip_permutation,
    spatial_report,
    surface_dice,
)

__version__ = "0.1.0"

__all__ = [
    "EmptyMaskError",
    "FormatError",
    "GeometryMismatch",
    "InvalidArgument",
    "IoError",
    "VoxelvalError",
    "boundary",
    "dice",
    "dilate_mm",
    "edt",
    "fuse",
    "gaussian_smooth",
    "hausdorff95",
    "jaccard",
    "load",
    "one_way_anova",
    "rim_profile",
    "save_labels",
    "save_scalar",
    "sign_flip_permutation",
    "spatial_report",
    "surface_dice",
]
