"""Confidence ellipses, centroid distances, and areas in a 2D embedding.

These quantities are the vocabulary that gestures and their costs are
expressed in: moving a group moves its centroid (changing the distance
matrix), scaling a group scales its ellipse area.

Ellipses assume a per-group Gaussian model: the level set containing
probability mass ``confidence`` of a 2D Gaussian lies at Mahalanobis
radius sqrt(-2 ln(1 - confidence)), the chi-squared quantile with two
degrees of freedom.  Covariances use the population divisor, matching
the raw-space statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyGroupError

__all__ = ["ConfidenceEllipse", "GroupGeometry", "confidence_ellipse", "group_geometry"]


@dataclass(frozen=True)
class ConfidenceEllipse:
    """An ellipse summarizing one group's spread.

    ``axes`` holds two orthogonal 2-vectors: principal directions
    scaled by the semi-axis lengths.  Degenerate groups (zero or
    rank-1 covariance) get floored semi-axes so the area is always
    strictly positive.
    """

    center: np.ndarray
    axes: np.ndarray  # 2x2, row i = direction_i * semi_axis_i
    confidence: float
    area: float

    @property
    def semi_axes(self) -> np.ndarray:
        return np.linalg.norm(self.axes, axis=1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points on or inside the ellipse."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lengths = self.semi_axes
        units = self.axes / lengths[:, None]
        local = (pts - self.center) @ units.T
        return (local / lengths) ** 2 @ np.ones(2) <= 1.0 + 1e-12


@dataclass(frozen=True)
class GroupGeometry:
    """Per-group ellipses plus the symmetric centroid-distance matrix."""

    ellipses: tuple[ConfidenceEllipse, ...]
    distances: np.ndarray

    @property
    def areas(self) -> np.ndarray:
        return np.array([e.area for e in self.ellipses])

    @property
    def centers(self) -> np.ndarray:
        return np.vstack([e.center for e in self.ellipses])


def _degenerate_floor(points: np.ndarray) -> float:
    """1e-6 times the bounding-box diagonal (1e-6 itself for a point mass)."""
    spread = points.max(axis=0) - points.min(axis=0)
    diag = float(np.linalg.norm(spread))
    return 1e-6 * (diag if diag > 0 else 1.0)


def confidence_ellipse(
    points: np.ndarray, confidence: float = 0.5, floor: float | None = None
) -> ConfidenceEllipse:
    """Fit the Gaussian confidence ellipse of a 2D point set.

    Parameters
    ----------
    points : ndarray, shape (m, 2)
    confidence : float in (0, 1)
        Probability mass the ellipse should contain under the fitted
        Gaussian; 0.5 by default.
    floor : float, optional
        Minimum semi-axis length.  Defaults to 1e-6 times the
        bounding-box diagonal of ``points``; callers with a wider
        scene (e.g. a full embedding) pass its scale instead so all
        groups share one floor.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise DimensionMismatchError(f"expected (m, 2) points, got {points.shape}")
    if points.shape[0] < 1:
        raise DimensionMismatchError("need at least one point")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")

    if floor is None:
        floor = _degenerate_floor(points)
    center = points.mean(axis=0)
    centered = points - center
    cov = centered.T @ centered / points.shape[0]
    evals, evecs = np.linalg.eigh(cov)

    radius = math.sqrt(-2.0 * math.log(1.0 - confidence))
    semi = np.maximum(np.sqrt(np.maximum(evals, 0.0)) * radius, floor)
    axes = evecs.T * semi[:, None]
    area = math.pi * float(semi[0] * semi[1])
    return ConfidenceEllipse(
        center=center, axes=axes, confidence=confidence, area=area
    )


def group_geometry(
    Z: np.ndarray,
    y: np.ndarray,
    confidence: float = 0.5,
    n_groups: int | None = None,
) -> GroupGeometry:
    """Ellipses and centroid distances for every group in an embedding.

    The degenerate floor is computed once from the whole embedding's
    bounding box, so all groups are floored consistently.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y)
    if Z.ndim != 2 or Z.shape[1] != 2:
        raise DimensionMismatchError(f"expected (n, 2) embedding, got {Z.shape}")
    if Z.shape[0] != y.shape[0]:
        raise DimensionMismatchError(
            f"{Z.shape[0]} embedding rows but {y.shape[0]} labels"
        )
    if n_groups is None:
        n_groups = int(y.max()) if y.size else 0
    if n_groups < 1:
        raise EmptyGroupError("no groups present")

    floor = _degenerate_floor(Z)
    ellipses = []
    for j in range(1, n_groups + 1):
        rows = Z[y == j]
        if rows.shape[0] == 0:
            raise EmptyGroupError(f"group {j} has no rows")
        ellipses.append(confidence_ellipse(rows, confidence, floor=floor))

    centers = np.vstack([e.center for e in ellipses])
    diff = centers[:, None, :] - centers[None, :, :]
    distances = np.linalg.norm(diff, axis=2)
    return GroupGeometry(ellipses=tuple(ellipses), distances=distances)
