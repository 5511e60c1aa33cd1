"""Backward parameter selection: from embedding gestures to weights.

A user gesture edits the *geometry* of the embedding — it moves a
group centroid or scales a group's confidence ellipse.  This module
turns the edited geometry into an ideal target (an
:class:`InteractionSpec`), defines how far a candidate parameter
vector lands from that target (distance cost + area-ratio cost), and
searches parameter space with the derivative-free box-constrained
optimizer in :mod:`ulca.cobyla`.

The search variable is theta = (w_tg, w_bg, w_bw, log10 alpha): 3c
weight coordinates in [0, 1] plus the trade-off on a log scale in
[1e-3, 1e3].  Every candidate evaluation is one relaxed (fixed-alpha)
fit with the EVD backend plus one geometry pass, so it is deterministic
and cheap.

An evaluation harness reproducing the mimicked-gesture protocol
(random gesture on synthetic Gaussian mixtures, accuracy measured
against a 1000-evaluation reference optimum) lives here too; the CLI
exposes it.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import cobyla
from .errors import DimensionMismatchError, NonPositiveAreaError
from .geometry import GroupGeometry, group_geometry
from .group_stats import Dataset
from .model import UlcaParams, fit
from .solvers import Backend, SolverConfig

__all__ = [
    "GestureKind",
    "InteractionSpec",
    "BackwardConfig",
    "BackwardResult",
    "CostValue",
    "cost_dist",
    "cost_area",
    "total_cost",
    "cobyla_minimize",
    "backward_select",
    "move_centroid_spec",
    "scale_ellipse_spec",
    "pack_theta",
    "unpack_theta",
    "theta_bounds",
    "synthesize_mixture",
    "mimic_gesture",
    "evaluate_protocol",
]

LOG_ALPHA_MIN = -3.0
LOG_ALPHA_MAX = 3.0


class GestureKind(Enum):
    MOVE_CENTROID = "move_centroid"
    SCALE_ELLIPSE = "scale_ellipse"


class CostValue(float):
    """A cost clamped to [0, 1] that remembers the unclamped value.

    ``raw`` is the value before clamping; ``degenerate`` marks an
    all-zero ideal distance matrix (cost defined as 0); ``failed``
    marks a candidate whose fit raised (cost pinned to 1).
    """

    raw: float
    degenerate: bool
    failed: bool

    def __new__(
        cls,
        value: float,
        raw: float | None = None,
        degenerate: bool = False,
        failed: bool = False,
    ) -> "CostValue":
        obj = super().__new__(cls, value)
        obj.raw = float(value if raw is None else raw)
        obj.degenerate = degenerate
        obj.failed = failed
        return obj


@dataclass(frozen=True)
class InteractionSpec:
    """The geometric target a gesture asks for.

    ``ideal_distances`` and ``ideal_areas`` equal the pre-gesture
    geometry with exactly the gestured quantity replaced: a moved
    centroid rewrites row/column ``target_group`` of the distances, a
    scale factor s multiplies that group's area by s².
    """

    kind: GestureKind
    target_group: int
    ideal_distances: np.ndarray
    ideal_areas: np.ndarray

    def __post_init__(self) -> None:
        l = np.asarray(self.ideal_distances, dtype=float)
        a = np.asarray(self.ideal_areas, dtype=float)
        object.__setattr__(self, "ideal_distances", l)
        object.__setattr__(self, "ideal_areas", a)
        c = a.shape[0]
        if l.shape != (c, c):
            raise DimensionMismatchError(
                f"distances are {l.shape}, expected ({c}, {c})"
            )
        if not np.allclose(l, l.T, atol=1e-9):
            raise ValueError("ideal distances must be symmetric")
        if np.any(np.abs(np.diagonal(l)) > 1e-12) or np.any(l < 0):
            raise ValueError("ideal distances need a zero diagonal and no negatives")
        if np.any(a <= 0):
            raise NonPositiveAreaError("ideal areas must be strictly positive")
        if not 1 <= self.target_group <= c:
            raise ValueError(f"target_group must be in 1..{c}")

    @property
    def n_groups(self) -> int:
        return self.ideal_areas.shape[0]


@dataclass(frozen=True)
class BackwardConfig:
    """Cost mix and optimizer budget for one backward-selection run."""

    r_dist: float
    r_area: float
    max_iters: int = 40
    rho_init: float = 0.25
    rho_final: float = 1e-4

    def __post_init__(self) -> None:
        if self.r_dist < 0 or self.r_area < 0:
            raise ValueError("cost weights must be nonnegative")
        if abs(self.r_dist + self.r_area - 1.0) > 1e-9:
            raise ValueError("r_dist + r_area must equal 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.rho_final < self.rho_init:
            raise ValueError("need 0 < rho_final < rho_init")

    @classmethod
    def for_kind(cls, kind: GestureKind, max_iters: int = 40) -> "BackwardConfig":
        """Default cost mixes: moves weight distances, scales weight areas."""
        if kind is GestureKind.MOVE_CENTROID:
            return cls(r_dist=0.8, r_area=0.2, max_iters=max_iters)
        return cls(r_dist=0.2, r_area=0.8, max_iters=max_iters)


@dataclass
class BackwardResult:
    """Best parameters found plus the search record."""

    params: UlcaParams
    cost: CostValue
    cost_init: float
    iterations: int
    trace: list[tuple[np.ndarray, float]]
    accuracy: float | None = None
    cancelled: bool = False
    evaluations: list[tuple[np.ndarray, float]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# gesture -> ideal geometry


def move_centroid_spec(
    geom: GroupGeometry, target_group: int, new_center: np.ndarray
) -> InteractionSpec:
    """Ideal geometry for dragging group ``target_group`` to a new center."""
    centers = geom.centers
    c = centers.shape[0]
    k = target_group - 1
    new_center = np.asarray(new_center, dtype=float).ravel()
    if new_center.shape[0] != 2:
        raise DimensionMismatchError("new center must be a 2-vector")
    ideal = geom.distances.copy()
    for i in range(c):
        dist = float(np.linalg.norm(new_center - centers[i])) if i != k else 0.0
        ideal[k, i] = dist
        ideal[i, k] = dist
    return InteractionSpec(
        kind=GestureKind.MOVE_CENTROID,
        target_group=target_group,
        ideal_distances=ideal,
        ideal_areas=geom.areas,
    )


def scale_ellipse_spec(
    geom: GroupGeometry, target_group: int, factor: float
) -> InteractionSpec:
    """Ideal geometry for scaling group ``target_group``'s ellipse by ``factor``."""
    if factor <= 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    areas = geom.areas.copy()
    areas[target_group - 1] *= factor**2
    return InteractionSpec(
        kind=GestureKind.SCALE_ELLIPSE,
        target_group=target_group,
        ideal_distances=geom.distances,
        ideal_areas=areas,
    )


# ---------------------------------------------------------------------------
# cost terms


def cost_dist(l_ideal: np.ndarray, l_new: np.ndarray) -> CostValue:
    """Normalized distance strain between ideal and achieved centroids.

    sqrt( sum (l' - l_hat)^2 / sum l'^2 ), clamped to [0, 1].  An
    all-zero ideal (single group, or all centroids coincident) returns
    0 with the degenerate flag set rather than dividing by zero.
    """
    l_ideal = np.asarray(l_ideal, dtype=float)
    l_new = np.asarray(l_new, dtype=float)
    if l_ideal.shape != l_new.shape:
        raise DimensionMismatchError(
            f"distance matrices differ: {l_ideal.shape} vs {l_new.shape}"
        )
    denom = float((l_ideal**2).sum())
    if denom == 0.0:
        return CostValue(0.0, raw=0.0, degenerate=True)
    raw = math.sqrt(float(((l_ideal - l_new) ** 2).sum()) / denom)
    return CostValue(min(raw, 1.0), raw=raw)


def cost_area(k: int, a_ideal: np.ndarray, a_new: np.ndarray) -> CostValue:
    """Mean relative error of group k's area ratios against the others.

    (1/c) * sum_i |a'_k/a'_i - a_k/a_i| / (a'_k/a'_i), clamped to
    [0, 1].  The i = k term is identically zero.  Ratios make the cost
    invariant to uniform rescaling of the whole embedding.
    """
    a_ideal = np.asarray(a_ideal, dtype=float)
    a_new = np.asarray(a_new, dtype=float)
    if a_ideal.shape != a_new.shape:
        raise DimensionMismatchError(
            f"area vectors differ: {a_ideal.shape} vs {a_new.shape}"
        )
    if np.any(a_ideal <= 0) or np.any(a_new <= 0):
        raise NonPositiveAreaError("areas must be strictly positive")
    c = a_ideal.shape[0]
    if not 1 <= k <= c:
        raise ValueError(f"group {k} out of range 1..{c}")
    i = k - 1
    r_ideal = a_ideal[i] / a_ideal
    r_new = a_new[i] / a_new
    raw = float((np.abs(r_ideal - r_new) / r_ideal).sum()) / c
    return CostValue(min(raw, 1.0), raw=raw)


def total_cost(
    spec: InteractionSpec,
    cfg: BackwardConfig,
    theta: UlcaParams,
    data: Dataset,
    solver_cfg: SolverConfig | None = None,
    confidence: float = 0.5,
) -> CostValue:
    """Cost of one candidate: fit, measure geometry, mix the two terms.

    The candidate fit always runs relaxed (fixed alpha) on the EVD
    backend with varimax skipped — rotations of the embedding plane
    change neither distances nor areas, and the inner loop needs speed
    and determinism.  A candidate whose fit raises costs 1 (worst)
    with the ``failed`` flag set.
    """
    if theta.alpha is None:
        raise ValueError("candidate parameters must carry a fixed alpha")
    inner_cfg = replace(
        solver_cfg or SolverConfig(), backend=Backend.EVD, apply_varimax=False
    )
    try:
        fitted = fit(data, theta, inner_cfg)
        geom = group_geometry(
            fitted.embedding, data.y, confidence, n_groups=data.n_groups
        )
    except Exception:
        # Large-but-finite raw value so the search can still rank failures.
        return CostValue(1.0, raw=1e6, failed=True)
    j_dist = cost_dist(spec.ideal_distances, geom.distances)
    j_area = cost_area(spec.target_group, spec.ideal_areas, geom.areas)
    value = cfg.r_dist * float(j_dist) + cfg.r_area * float(j_area)
    return CostValue(
        value,
        raw=cfg.r_dist * j_dist.raw + cfg.r_area * j_area.raw,
        degenerate=j_dist.degenerate or j_area.degenerate,
    )


# ---------------------------------------------------------------------------
# theta packing and the optimizer wrapper


def pack_theta(params: UlcaParams) -> np.ndarray:
    """(w_tg, w_bg, w_bw, log10 alpha) as a flat search vector."""
    alpha = params.alpha if params.alpha is not None else 1.0
    log_alpha = math.log10(min(max(alpha, 10.0**LOG_ALPHA_MIN), 10.0**LOG_ALPHA_MAX))
    return np.concatenate([params.w_tg, params.w_bg, params.w_bw, [log_alpha]])


def unpack_theta(theta: np.ndarray, template: UlcaParams) -> UlcaParams:
    """Rebuild UlcaParams from a search vector, keeping template gammas."""
    theta = np.asarray(theta, dtype=float)
    c = (theta.shape[0] - 1) // 3
    if theta.shape[0] != 3 * c + 1 or c != template.n_groups:
        raise DimensionMismatchError(
            f"theta has {theta.shape[0]} entries, expected {3 * template.n_groups + 1}"
        )
    w = np.clip(theta[: 3 * c], 0.0, 1.0)
    return replace(
        template,
        w_tg=tuple(w[:c]),
        w_bg=tuple(w[c : 2 * c]),
        w_bw=tuple(w[2 * c : 3 * c]),
        alpha=10.0 ** float(theta[-1]),
    )


def theta_bounds(n_groups: int) -> tuple[np.ndarray, np.ndarray]:
    """Box constraints: weights in [0,1], log10 alpha in [-3, 3]."""
    lower = np.concatenate([np.zeros(3 * n_groups), [LOG_ALPHA_MIN]])
    upper = np.concatenate([np.ones(3 * n_groups), [LOG_ALPHA_MAX]])
    return lower, upper


def cobyla_minimize(
    f: Callable[[np.ndarray], float],
    theta0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    cfg: BackwardConfig,
    cancel: Callable[[], bool] | None = None,
    progress: Callable[[int, float], None] | None = None,
) -> cobyla.CobylaResult:
    """Run the trust-region search under a BackwardConfig's budget."""
    return cobyla.minimize(
        f,
        theta0,
        lower,
        upper,
        max_evals=cfg.max_iters,
        rho_init=cfg.rho_init,
        rho_final=cfg.rho_final,
        cancel=cancel,
        progress=progress,
    )


def backward_select(
    spec: InteractionSpec,
    state,
    cfg: BackwardConfig | None = None,
    e_opt: float | None = None,
    cancel: Callable[[], bool] | None = None,
    progress: Callable[[int, float], None] | None = None,
) -> BackwardResult:
    """Search parameters whose embedding realizes the gestured geometry.

    ``state`` is anything session-shaped: it must expose ``dataset``,
    ``params`` (the incumbent UlcaParams, the search start), ``fit``
    (for the resolved alpha when the session runs in ratio mode),
    ``solver_cfg``, and ``confidence``.

    The start point is evaluated first, so the returned cost never
    exceeds the incumbent's.  When ``e_opt`` (a reference optimum from
    a long run) is supplied, the accuracy (e_init - e)/(e_init - e_opt)
    is filled in; a zero denominator leaves it None.

    The search itself minimizes the *unclamped* cost: large overshoots
    would otherwise flatten to a constant 1 and starve the optimizer of
    signal.  Clamping is monotone, so the same point is optimal on both
    scales; ``cost`` and ``cost_init`` report the clamped values while
    ``trace`` and ``evaluations`` keep the raw sequence the search saw.
    """
    cfg = cfg or BackwardConfig.for_kind(spec.kind)
    data: Dataset = state.dataset
    incumbent: UlcaParams = state.params
    if incumbent.alpha is None:
        incumbent = replace(incumbent, alpha=state.fit.params_used.alpha)
    solver_cfg = getattr(state, "solver_cfg", None)
    confidence = getattr(state, "confidence", 0.5)

    def f(theta_vec: np.ndarray) -> float:
        theta = unpack_theta(theta_vec, incumbent)
        return total_cost(
            spec, cfg, theta, data, solver_cfg, confidence=confidence
        ).raw

    reported = progress
    if progress is not None:
        def reported(n_evals: int, best: float) -> None:
            progress(n_evals, min(best, 1.0))

    lower, upper = theta_bounds(data.n_groups)
    res = cobyla_minimize(
        f, pack_theta(incumbent), lower, upper, cfg, cancel=cancel, progress=reported
    )

    best = unpack_theta(res.x, incumbent)
    final_cost = total_cost(spec, cfg, best, data, solver_cfg, confidence=confidence)
    cost_init = min(res.cost_init, 1.0)
    accuracy = None
    if e_opt is not None and cost_init != e_opt:
        accuracy = (cost_init - float(final_cost)) / (cost_init - e_opt)
    return BackwardResult(
        params=best,
        cost=final_cost,
        cost_init=cost_init,
        iterations=res.n_evaluations,
        trace=res.trace,
        accuracy=accuracy,
        cancelled=res.cancelled,
        evaluations=res.evaluations,
    )


# ---------------------------------------------------------------------------
# mimicked-gesture evaluation harness


@dataclass
class _EvalState:
    """Minimal session-shaped holder for protocol runs."""

    dataset: Dataset
    params: UlcaParams
    fit: object
    solver_cfg: SolverConfig
    confidence: float = 0.5


def synthesize_mixture(
    n: int, d: int, c: int, rng: np.random.Generator
) -> Dataset:
    """Random labeled Gaussian mixture: one anisotropic blob per group."""
    sizes = [n // c + (1 if j < n % c else 0) for j in range(c)]
    rows, labels = [], []
    for j, size in enumerate(sizes, start=1):
        mean = rng.normal(scale=2.0, size=d)
        Q = np.linalg.qr(rng.standard_normal((d, d)))[0]
        scales = rng.uniform(0.5, 2.0, size=d)
        A = Q * scales
        rows.append(rng.standard_normal((size, d)) @ A.T + mean)
        labels.append(np.full(size, j))
    return Dataset(
        X=np.vstack(rows), y=np.concatenate(labels), n_groups=c
    )


def mimic_gesture(
    geom: GroupGeometry, Z: np.ndarray, rng: np.random.Generator
) -> InteractionSpec:
    """A random user-like gesture on an existing embedding.

    Picks a uniform group, then either drags its centroid to a uniform
    point inside the embedding's bounding box or scales its ellipse by
    a factor uniform in [0.5, 2].
    """
    c = len(geom.ellipses)
    k = int(rng.integers(1, c + 1))
    if rng.uniform() < 0.5:
        lo = Z.min(axis=0)
        hi = Z.max(axis=0)
        target = rng.uniform(lo, hi)
        return move_centroid_spec(geom, k, target)
    factor = float(rng.uniform(0.5, 2.0))
    return scale_ellipse_spec(geom, k, factor)


def _neutral_start(c: int, dprime: int) -> UlcaParams:
    return UlcaParams(
        w_tg=(1.0,) * c,
        w_bg=(1.0,) * c,
        w_bw=(1.0,) * c,
        alpha=1.0,
        dprime=dprime,
    )


def evaluate_protocol(
    n: int = 1000,
    d: int = 10,
    c: int = 2,
    m_values: tuple[int, ...] = (40,),
    trials: int = 50,
    seed: int = 7,
    e_opt_evals: int = 1000,
    dprime: int = 2,
) -> dict:
    """Mimicked-gesture evaluation: accuracy and completion time per budget.

    For each trial: synthesize a mixture, fit a neutral start, draw one
    random gesture, then run backward selection once per budget in
    ``m_values`` (timing each run) and once with ``e_opt_evals`` as the
    reference optimum.  Accuracy per case is
    (e_init - e) / (e_init - e_opt); cases with e_opt = e_init carry no
    signal and are discarded.  Returns a JSON-ready report.
    """
    rng = np.random.default_rng(seed)
    solver_cfg = SolverConfig(backend=Backend.EVD)
    per_m: dict[int, dict] = {
        m: {"accuracies": [], "seconds": [], "discarded": 0} for m in m_values
    }

    for _ in range(max(trials, 0)):
        data = synthesize_mixture(n, d, c, rng)
        start = _neutral_start(c, dprime)
        base_fit = fit(data, start, solver_cfg)
        geom = group_geometry(
            base_fit.embedding, data.y, 0.5, n_groups=c
        )
        spec = mimic_gesture(geom, base_fit.embedding, rng)
        state = _EvalState(
            dataset=data, params=start, fit=base_fit, solver_cfg=solver_cfg
        )

        ref_cfg = BackwardConfig.for_kind(spec.kind, max_iters=e_opt_evals)
        ref = backward_select(spec, state, ref_cfg)
        e_init = ref.cost_init
        e_opt = float(ref.cost)

        for m in m_values:
            run_cfg = BackwardConfig.for_kind(spec.kind, max_iters=m)
            t0 = time.perf_counter()
            res = backward_select(spec, state, run_cfg)
            elapsed = time.perf_counter() - t0
            per_m[m]["seconds"].append(elapsed)
            if e_init == e_opt:
                per_m[m]["discarded"] += 1
                continue
            per_m[m]["accuracies"].append(
                (e_init - float(res.cost)) / (e_init - e_opt)
            )

    settings = []
    for m in m_values:
        acc = per_m[m]["accuracies"]
        sec = per_m[m]["seconds"]
        settings.append(
            {
                "m": m,
                "trials": trials,
                "kept": len(acc),
                "discarded": per_m[m]["discarded"],
                "mean_accuracy": float(np.mean(acc)) if acc else None,
                "mean_seconds": float(np.mean(sec)) if sec else None,
            }
        )
    return {
        "n": n,
        "d": d,
        "c": c,
        "seed": seed,
        "e_opt_evals": e_opt_evals,
        "settings": settings,
    }
