"""Orthogonal uncertainty representation for long-tailed classification."""

from ._orthotail import (
    CovAccumulator,
    OrthoDirection,
    OrthotailError,
    batch_covariance,
    default_fractions,
    longtail_counts,
    orthogonal_direction,
    our_transform,
    rif,
    run_single,
    select_tail_classes,
    shift_manifold,
    smallest_eigvec,
    sym_eig,
    synth_gaussian_longtail,
    top_k_mean_eigval,
)

__all__ = [
    "CovAccumulator",
    "OrthoDirection",
    "OrthotailError",
    "batch_covariance",
    "default_fractions",
    "longtail_counts",
    "orthogonal_direction",
    "our_transform",
    "rif",
    "run_single",
    "select_tail_classes",
    "shift_manifold",
    "smallest_eigvec",
    "sym_eig",
    "synth_gaussian_longtail",
    "top_k_mean_eigval",
]
