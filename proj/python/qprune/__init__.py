"""Positive moment-preserving quadrature pruning."""

from ._qprune import (
    QpruneError,
    index_set_size,
    lp_solve,
    moment_residual,
    nnls,
    perturb_weights,
    prune,
    prune_matrix,
    sample,
    tv_distance,
    vandermonde,
)

__all__ = [
    "QpruneError",
    "index_set_size",
    "lp_solve",
    "moment_residual",
    "nnls",
    "perturb_weights",
    "prune",
    "prune_matrix",
    "sample",
    "tv_distance",
    "vandermonde",
]
