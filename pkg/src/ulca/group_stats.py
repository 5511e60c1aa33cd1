"""Per-group first and second moments of a labeled dataset.

Everything downstream (objective assembly, solvers, ellipse geometry)
consumes the quantities computed here, so they are calculated once per
dataset and cached on the :class:`Dataset` instance.

Covariances use the population convention (divide by the group size,
not ``n - 1``).  The between-group matrix of group ``j`` is the rank-1
outer product of the offset of its mean from the grand mean.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, EmptyGroupError, NonFiniteInputError

__all__ = ["Dataset", "GroupStats", "compute_group_stats", "standardize"]


@dataclass(frozen=True)
class GroupStats:
    """Sufficient statistics of a labeled dataset.

    Attributes
    ----------
    means : ndarray, shape (c, d)
        Per-group means, row ``j - 1`` for group ``j``.
    grand_mean : ndarray, shape (d,)
        Mean of all rows regardless of label.
    within : ndarray, shape (c, d, d)
        Population covariance of each group about its own mean.
    between : ndarray, shape (c, d, d)
        Rank-1 outer product ``(mu_j - mu)(mu_j - mu)^T`` per group.
    counts : ndarray, shape (c,)
        Number of rows per group.
    """

    means: np.ndarray
    grand_mean: np.ndarray
    within: np.ndarray
    between: np.ndarray
    counts: np.ndarray

    @property
    def n_groups(self) -> int:
        return self.means.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]


def _validate(X: np.ndarray, y: np.ndarray, n_groups: int) -> None:
    if X.ndim != 2:
        raise DimensionMismatchError(f"X must be 2-D, got ndim={X.ndim}")
    if y.ndim != 1:
        raise DimensionMismatchError(f"y must be 1-D, got ndim={y.ndim}")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(
            f"X has {X.shape[0]} rows but y has {y.shape[0]} labels"
        )
    if not np.all(np.isfinite(X)):
        raise NonFiniteInputError("X contains NaN or infinite entries")
    if n_groups < 1:
        raise DimensionMismatchError(f"need at least one group, got {n_groups}")
    present = np.unique(y)
    if present.size and (present.min() < 1 or present.max() > n_groups):
        raise DimensionMismatchError(
            f"labels must lie in 1..{n_groups}, found range "
            f"[{present.min()}, {present.max()}]"
        )
    for j in range(1, n_groups + 1):
        if not np.any(y == j):
            raise EmptyGroupError(f"group {j} has no rows")


def compute_group_stats(X: np.ndarray, y: np.ndarray, n_groups: int) -> GroupStats:
    """Compute per-group means and covariance matrices.

    Parameters
    ----------
    X : ndarray, shape (n, d)
        Data rows.
    y : ndarray, shape (n,)
        Integer labels in ``1..n_groups``.
    n_groups : int
        Number of groups ``c``.

    Returns
    -------
    GroupStats

    Raises
    ------
    DimensionMismatchError
        If shapes disagree or labels fall outside ``1..n_groups``.
    NonFiniteInputError
        If ``X`` contains NaN or infinities.
    EmptyGroupError
        If some group in ``1..n_groups`` has no rows.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    _validate(X, y, n_groups)

    n, d = X.shape
    grand_mean = X.mean(axis=0)
    means = np.empty((n_groups, d))
    within = np.empty((n_groups, d, d))
    between = np.empty((n_groups, d, d))
    counts = np.empty(n_groups, dtype=int)

    for j in range(1, n_groups + 1):
        rows = X[y == j]
        counts[j - 1] = rows.shape[0]
        mu_j = rows.mean(axis=0)
        means[j - 1] = mu_j
        centered = rows - mu_j
        within[j - 1] = centered.T @ centered / rows.shape[0]
        offset = mu_j - grand_mean
        between[j - 1] = np.outer(offset, offset)

    return GroupStats(
        means=means,
        grand_mean=grand_mean,
        within=within,
        between=between,
        counts=counts,
    )


def standardize(data):
    """Z-score each column; constant columns map to zero.

    Uses the population standard deviation so that standardized data has
    unit population variance per column.  Accepts either a plain matrix
    (returns a matrix) or a :class:`Dataset` (returns a new Dataset with
    the same labels and names).
    """
    if isinstance(data, Dataset):
        return Dataset(
            X=standardize(data.X),
            y=data.y,
            n_groups=data.n_groups,
            feature_names=data.feature_names,
            group_names=data.group_names,
            source=data.source,
        )
    X = np.asarray(data, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    safe = np.where(sd > 0, sd, 1.0)
    Z = (X - mu) / safe
    Z[:, sd == 0] = 0.0
    return Z


@dataclass
class Dataset:
    """A labeled dataset plus cached group statistics.

    Parameters
    ----------
    X : ndarray, shape (n, d)
    y : ndarray, shape (n,)
        Labels in ``1..n_groups``.
    n_groups : int
    feature_names : list of str, optional
        Defaults to ``x1..xd``.
    group_names : list of str, optional
        Display names per group. Defaults to ``"1".."c"``.
    source : str, optional
        Where the data came from (e.g. a CSV path), recorded in snapshots.
    """

    X: np.ndarray
    y: np.ndarray
    n_groups: int
    feature_names: list[str] | None = None
    group_names: list[str] | None = None
    source: str | None = None
    _stats: GroupStats | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        _validate(self.X, self.y, self.n_groups)
        if self.feature_names is None:
            self.feature_names = [f"x{i + 1}" for i in range(self.X.shape[1])]
        if len(self.feature_names) != self.X.shape[1]:
            raise DimensionMismatchError(
                f"{len(self.feature_names)} feature names for "
                f"{self.X.shape[1]} columns"
            )
        if self.group_names is None:
            self.group_names = [str(j) for j in range(1, self.n_groups + 1)]
        if len(self.group_names) != self.n_groups:
            raise DimensionMismatchError(
                f"{len(self.group_names)} group names for {self.n_groups} groups"
            )

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def stats(self) -> GroupStats:
        """Group statistics, computed on first access and cached."""
        if self._stats is None:
            self._stats = compute_group_stats(self.X, self.y, self.n_groups)
        return self._stats

    def content_hash(self) -> str:
        """SHA-256 over the raw bytes of X and y (row-major float64/int64)."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(self.y, dtype=np.int64).tobytes())
        return h.hexdigest()
