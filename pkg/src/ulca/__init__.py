"""Interactive linear dimensionality reduction for group comparison.

The package fits linear projections that contrast user-weighted group
structure (a unified family covering PCA, LDA, and contrastive PCA),
and supports steering those weights either directly or backward from
embedding-space gestures.
"""

from .group_stats import Dataset, GroupStats, compute_group_stats, standardize
from .model import UlcaFit, UlcaParams, fit, preset_params
from .solvers import Backend, Projection, SolverConfig

__all__ = [
    "Backend",
    "Dataset",
    "GroupStats",
    "Projection",
    "SolverConfig",
    "UlcaFit",
    "UlcaParams",
    "compute_group_stats",
    "fit",
    "preset_params",
    "standardize",
]

__version__ = "0.1.0"
