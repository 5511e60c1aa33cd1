"""Weighted-covariance objective assembly, fitting, and presets.

Given per-group statistics and per-group weights, two matrices are
assembled:

    C0 = sum_j w_tg[j] * C_wi_j  +  sum_j w_bw[j] * C_bw_j  +  gamma0 * I
    C1 = sum_j w_bg[j] * C_wi_j  +  gamma1 * I

and the projection maximizes either tr(M^T C0 M) / tr(M^T C1 M)
(trace-ratio mode, ``alpha`` unset) or tr(M^T (C0 - alpha*C1) M)
(relaxed mode, fixed ``alpha``).  Classic methods fall out as weight
presets: per-group PCA, LDA, contrastive PCA, and its
contrasting-clusters variant.

A ridge of 1 replaces a user-supplied gamma of 0 whenever the
corresponding weighted sum vanishes, so the ratio denominator can
never be identically zero (e.g. all-zero background weights turn the
denominator into tr(M^T M) = d').
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError, ZeroVectorError
from .group_stats import Dataset, GroupStats
from .solvers import (
    Projection,
    SolverConfig,
    canonicalize_axes,
    solve_trace_difference,
    solve_trace_ratio,
    varimax,
)

__all__ = [
    "UlcaParams",
    "UlcaFit",
    "assemble_c0_c1",
    "fit",
    "transform",
    "project_axis",
    "preset_params",
    "PRESET_NAMES",
]

PRESET_NAMES = ("pca", "lda", "cpca", "ccpca")


@dataclass(frozen=True)
class UlcaParams:
    """Weights and trade-off parameters for one fit.

    Weights are per-group tuples in [0, 1].  ``alpha`` is the fixed
    trade-off of relaxed mode; ``None`` selects trace-ratio mode,
    where the trade-off is solved for.
    """

    w_tg: tuple[float, ...]
    w_bg: tuple[float, ...]
    w_bw: tuple[float, ...]
    alpha: float | None = None
    gamma0: float = 0.0
    gamma1: float = 0.0
    dprime: int = 2

    def __post_init__(self) -> None:
        for name in ("w_tg", "w_bg", "w_bw"):
            w = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, w)
            if any(not 0.0 <= v <= 1.0 for v in w):
                raise ValueError(f"{name} entries must lie in [0, 1], got {w}")
        if not (len(self.w_tg) == len(self.w_bg) == len(self.w_bw)):
            raise DimensionMismatchError(
                f"weight vectors differ in length: "
                f"{len(self.w_tg)}, {len(self.w_bg)}, {len(self.w_bw)}"
            )
        if self.alpha is not None and self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.gamma0 < 0 or self.gamma1 < 0:
            raise ValueError("gamma0 and gamma1 must be >= 0")
        if self.dprime < 1:
            raise ValueError(f"dprime must be >= 1, got {self.dprime}")

    @property
    def n_groups(self) -> int:
        return len(self.w_tg)

    @property
    def ratio_mode(self) -> bool:
        return self.alpha is None


@dataclass
class UlcaFit:
    """A fitted projection together with the embedding it produces.

    ``params_used`` records the resolved parameters: effective gammas
    after zero-sum forcing, and the solved trade-off in ratio mode.
    ``embedding`` is exactly ``X @ projection.M``.
    """

    projection: Projection
    params_used: UlcaParams
    embedding: np.ndarray


def assemble_c0_c1(
    stats: GroupStats, params: UlcaParams
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Build the numerator and denominator matrices from weights.

    Returns ``(C0, C1, gamma0_eff, gamma1_eff)``.  A gamma given as 0
    is forced to 1 when its weighted sum is the zero matrix (largest
    entry below 1e-14 times the largest entry across the group
    covariances), so downstream ratios stay well defined.
    """
    c = stats.n_groups
    if params.n_groups != c:
        raise DimensionMismatchError(
            f"params describe {params.n_groups} groups, stats have {c}"
        )
    d = stats.n_features
    w_tg = np.asarray(params.w_tg)
    w_bg = np.asarray(params.w_bg)
    w_bw = np.asarray(params.w_bw)

    sum0 = np.tensordot(w_tg, stats.within, axes=1) + np.tensordot(
        w_bw, stats.between, axes=1
    )
    sum1 = np.tensordot(w_bg, stats.within, axes=1)

    data_scale = max(
        float(np.abs(stats.within).max()), float(np.abs(stats.between).max()), 1e-300
    )
    eps = 1e-14 * data_scale

    gamma0_eff = params.gamma0
    if gamma0_eff == 0.0 and float(np.abs(sum0).max()) < eps:
        gamma0_eff = 1.0
    gamma1_eff = params.gamma1
    if gamma1_eff == 0.0 and float(np.abs(sum1).max()) < eps:
        gamma1_eff = 1.0

    eye = np.eye(d)
    return sum0 + gamma0_eff * eye, sum1 + gamma1_eff * eye, gamma0_eff, gamma1_eff


def fit(data: Dataset, params: UlcaParams, cfg: SolverConfig | None = None) -> UlcaFit:
    """Fit a projection to the dataset under the given parameters.

    Ratio mode when ``params.alpha`` is None, relaxed (fixed-alpha)
    mode otherwise.  The solved projection is varimax-rotated (when
    enabled and d' > 1) and canonicalized; neither step changes the
    objective value, only the basis within the solution span.
    """
    cfg = cfg or SolverConfig()
    if params.dprime > data.n_features:
        raise DimensionMismatchError(
            f"dprime={params.dprime} exceeds data dimension {data.n_features}"
        )
    C0, C1, g0, g1 = assemble_c0_c1(data.stats, params)

    if params.ratio_mode:
        proj = solve_trace_ratio(C0, C1, params.dprime, cfg)
        alpha_resolved = proj.alpha_used
    else:
        proj = solve_trace_difference(
            C0 - params.alpha * C1, params.dprime, cfg, alpha=params.alpha
        )
        alpha_resolved = params.alpha

    if cfg.apply_varimax and params.dprime > 1:
        proj = replace(proj, M=canonicalize_axes(varimax(proj.M)))

    params_used = replace(
        params, alpha=alpha_resolved, gamma0=g0, gamma1=g1
    )
    return UlcaFit(
        projection=proj,
        params_used=params_used,
        embedding=data.X @ proj.M,
    )


def transform(fitted: UlcaFit, X_new: np.ndarray) -> np.ndarray:
    """Project new rows with the fitted M."""
    X_new = np.asarray(X_new, dtype=float)
    d = fitted.projection.M.shape[0]
    if X_new.ndim != 2 or X_new.shape[1] != d:
        raise DimensionMismatchError(
            f"expected (m, {d}) input, got {X_new.shape}"
        )
    return X_new @ fitted.projection.M


def project_axis(fitted: UlcaFit, v: np.ndarray) -> np.ndarray:
    """Loadings of a drawn embedding direction: M v / ||v||.

    The result is unit-norm because M has orthonormal columns, so it
    reads directly as per-attribute contributions to the direction.
    """
    v = np.asarray(v, dtype=float).ravel()
    M = fitted.projection.M
    if v.shape[0] != M.shape[1]:
        raise DimensionMismatchError(
            f"direction has {v.shape[0]} entries, projection has {M.shape[1]} columns"
        )
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVectorError("cannot project a zero direction")
    return M @ (v / norm)


def preset_params(
    name: str,
    n_groups: int,
    *,
    target_group: int = 1,
    background_group: int | None = None,
    alpha: float | None = None,
    gamma0: float = 0.0,
    gamma1: float = 0.0,
    dprime: int = 2,
    counts: np.ndarray | None = None,
    count_weighted: bool = False,
) -> UlcaParams:
    """Parameter configurations reproducing classic methods.

    pca
        Principal components of ``target_group``'s covariance alone.
    lda
        Between-group over within-group trace ratio.  With
        ``count_weighted`` (requires ``counts``), weights are n_j / n,
        which reproduces the textbook n-averaged scatter matrices
        exactly; otherwise all weights are 1.
    cpca
        Contrast ``target_group`` against ``background_group``
        (defaults to the first group other than the target).
    ccpca
        Maximize every group's variance while suppressing everything
        but the target in the denominator.

    ``alpha`` selects relaxed mode for any preset; leaving it ``None``
    keeps trace-ratio mode (the usual choice for lda).
    """
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    if not 1 <= target_group <= n_groups:
        raise ValueError(f"target_group must be in 1..{n_groups}, got {target_group}")

    zeros = np.zeros(n_groups)
    ones = np.ones(n_groups)
    e_tg = np.zeros(n_groups)
    e_tg[target_group - 1] = 1.0

    if name == "pca":
        w_tg, w_bg, w_bw = e_tg, zeros, zeros
    elif name == "lda":
        if count_weighted:
            if counts is None:
                raise ValueError("count_weighted lda requires counts")
            counts = np.asarray(counts, dtype=float)
            if counts.shape[0] != n_groups:
                raise DimensionMismatchError(
                    f"{counts.shape[0]} counts for {n_groups} groups"
                )
            frac = counts / counts.sum()
            w_tg, w_bg, w_bw = zeros, frac, frac
        else:
            w_tg, w_bg, w_bw = zeros, ones, ones
    elif name == "cpca":
        if background_group is None:
            background_group = 2 if target_group == 1 else 1
        if not 1 <= background_group <= n_groups or background_group == target_group:
            raise ValueError(
                f"background_group must be in 1..{n_groups} and differ from "
                f"target_group, got {background_group}"
            )
        e_bg = np.zeros(n_groups)
        e_bg[background_group - 1] = 1.0
        w_tg, w_bg, w_bw = e_tg, e_bg, zeros
    else:  # ccpca
        w_tg, w_bg, w_bw = ones, ones - e_tg, zeros

    return UlcaParams(
        w_tg=tuple(w_tg),
        w_bg=tuple(w_bg),
        w_bw=tuple(w_bw),
        alpha=alpha,
        gamma0=gamma0,
        gamma1=gamma1,
        dprime=dprime,
    )
