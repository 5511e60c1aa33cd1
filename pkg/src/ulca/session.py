"""Live analysis state: current fit, display geometry, snapshots.

A session owns one dataset and the latest fitted projection, and runs
the full pipeline on every change:

    fit (solver) -> varimax -> canonicalize -> Procrustes-align to the
    previously displayed embedding -> group geometry -> drawn-axis
    loadings

The Procrustes rotation is folded into the stored projection, so the
embedding on screen, the projection matrix, and per-axis loadings are
always mutually consistent, and consecutive updates keep the user's
mental map (each refit is aligned to what was displayed last, not to
an ever-older reference).

Snapshots serialize the restorable state to canonical JSON (sorted
keys, no whitespace, shortest-round-trip floats), which makes the
save -> restore -> save cycle byte-identical.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .backward import (
    BackwardConfig,
    BackwardResult,
    GestureKind,
    InteractionSpec,
    backward_select,
    move_centroid_spec,
    scale_ellipse_spec,
)
from .errors import (
    DuplicateNameError,
    UlcaError,
    UnknownSnapshotError,
)
from .geometry import GroupGeometry, group_geometry
from .group_stats import Dataset
from .model import UlcaFit, UlcaParams, fit, preset_params, project_axis
from .solvers import Backend, Projection, SolverConfig, procrustes_align

__all__ = ["Gesture", "Session", "SNAPSHOT_VERSION"]

SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class Gesture:
    """A raw embedding-view gesture, before cost translation."""

    kind: GestureKind
    group: int
    x: float | None = None  # MOVE_CENTROID target position
    y: float | None = None
    factor: float | None = None  # SCALE_ELLIPSE uniform factor


def _canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


class Session:
    """Single-writer holder of the live analysis state.

    All mutating operations take an internal lock; long backward
    selections run outside it and only commit under it, so reads stay
    responsive and a stale result can be discarded on cancellation.
    """

    def __init__(
        self,
        dataset: Dataset,
        params: UlcaParams | None = None,
        solver_cfg: SolverConfig | None = None,
        confidence: float = 0.5,
    ) -> None:
        self._lock = threading.RLock()
        self.dataset = dataset
        self.solver_cfg = solver_cfg or SolverConfig()
        self.confidence = confidence
        self.params = params or preset_params("lda", dataset.n_groups)
        self.fit: UlcaFit | None = None
        self.geometry: GroupGeometry | None = None
        self.drawn_axes: list[tuple[np.ndarray, np.ndarray]] = []
        self.display_rotation = np.eye(self.params.dprime)
        self.snapshots: dict[str, str] = {}
        self._refit(align=False)

    # -- pipeline ----------------------------------------------------------

    def _refit(self, align: bool) -> UlcaFit:
        """Fit under current params; align to the displayed embedding."""
        new_fit = fit(self.dataset, self.params, self.solver_cfg)
        rotation = np.eye(self.params.dprime)
        if (
            align
            and self.fit is not None
            and self.fit.embedding.shape == new_fit.embedding.shape
        ):
            aligned, rotation = procrustes_align(
                self.fit.embedding, new_fit.embedding
            )
            new_fit = UlcaFit(
                projection=replace(
                    new_fit.projection, M=new_fit.projection.M @ rotation
                ),
                params_used=new_fit.params_used,
                embedding=aligned,
            )
        self.display_rotation = rotation
        self.fit = new_fit
        self._refresh_geometry()
        self._refresh_axes()
        return new_fit

    def _refresh_geometry(self) -> None:
        if self.params.dprime == 2:
            self.geometry = group_geometry(
                self.fit.embedding,
                self.dataset.y,
                self.confidence,
                n_groups=self.dataset.n_groups,
            )
        else:
            self.geometry = None

    def _refresh_axes(self) -> None:
        self.drawn_axes = [
            (v, project_axis(self.fit, v)) for v, _ in self.drawn_axes
        ]

    # -- operations --------------------------------------------------------

    def update_params(self, new_params: UlcaParams) -> dict:
        """Refit under new parameters and align the display.

        Returns a change summary with the solved objective, resolved
        trade-off, and any solver warning.
        """
        with self._lock:
            if new_params.n_groups != self.dataset.n_groups:
                raise UlcaError(
                    f"params describe {new_params.n_groups} groups, dataset has "
                    f"{self.dataset.n_groups}"
                )
            self.params = new_params
            fitted = self._refit(align=True)
            proj = fitted.projection
            return {
                "objective": proj.objective,
                "alpha": fitted.params_used.alpha,
                "iterations": proj.iterations,
                "converged": proj.converged,
                "warning": proj.warning,
            }

    def gesture_to_spec(self, gesture: Gesture) -> InteractionSpec:
        """Translate a raw gesture against the current geometry."""
        with self._lock:
            if self.geometry is None:
                raise UlcaError("gestures need a 2D embedding with geometry")
            if gesture.kind is GestureKind.MOVE_CENTROID:
                if gesture.x is None or gesture.y is None:
                    raise UlcaError("move gesture needs x and y")
                return move_centroid_spec(
                    self.geometry, gesture.group, np.array([gesture.x, gesture.y])
                )
            if gesture.factor is None:
                raise UlcaError("scale gesture needs a factor")
            return scale_ellipse_spec(self.geometry, gesture.group, gesture.factor)

    def apply_gesture(
        self,
        gesture: Gesture,
        cfg: BackwardConfig | None = None,
        cancel=None,
        progress=None,
    ) -> dict:
        """Backward-select parameters for a gesture and commit them.

        A cancelled run leaves the session untouched and reports
        ``cancelled: true``.  The summary carries the achieved cost,
        the start cost, and the committed parameters.
        """
        spec = self.gesture_to_spec(gesture)
        cfg = cfg or BackwardConfig.for_kind(spec.kind)
        result: BackwardResult = backward_select(
            spec, self, cfg, cancel=cancel, progress=progress
        )
        summary = {
            "cost": float(result.cost),
            "cost_init": float(result.cost_init),
            "iterations": result.iterations,
            "cancelled": result.cancelled,
        }
        if result.cancelled:
            return summary
        with self._lock:
            self.params = result.params
            self._refit(align=True)
            summary["params"] = self.params_dict()
            summary["objective"] = self.fit.projection.objective
        return summary

    def draw_axis(self, v: np.ndarray) -> np.ndarray:
        """Store a drawn embedding direction; returns its loadings."""
        with self._lock:
            v = np.asarray(v, dtype=float).ravel()
            loading = project_axis(self.fit, v)
            self.drawn_axes.append((v, loading))
            return loading

    def clear_axes(self) -> None:
        with self._lock:
            self.drawn_axes = []

    # -- snapshots -----------------------------------------------------------

    def params_dict(self, params: UlcaParams | None = None) -> dict:
        p = params or self.params
        return {
            "w_tg": list(p.w_tg),
            "w_bg": list(p.w_bg),
            "w_bw": list(p.w_bw),
            "alpha": p.alpha,
            "gamma0": p.gamma0,
            "gamma1": p.gamma1,
            "dprime": p.dprime,
        }

    @staticmethod
    def _params_from_dict(d: dict) -> UlcaParams:
        return UlcaParams(
            w_tg=tuple(d["w_tg"]),
            w_bg=tuple(d["w_bg"]),
            w_bw=tuple(d["w_bw"]),
            alpha=d["alpha"],
            gamma0=d["gamma0"],
            gamma1=d["gamma1"],
            dprime=d["dprime"],
        )

    def serialize_state(self) -> str:
        """Canonical JSON capture of everything needed to restore."""
        with self._lock:
            proj = self.fit.projection
            doc = {
                "version": SNAPSHOT_VERSION,
                "dataset": {
                    "source": self.dataset.source,
                    "hash": self.dataset.content_hash(),
                    "n_groups": self.dataset.n_groups,
                },
                "params": self.params_dict(),
                "params_used": self.params_dict(self.fit.params_used),
                "projection": {
                    "M": [list(row) for row in proj.M],  # row-major
                    "objective": proj.objective,
                    "alpha_used": proj.alpha_used,
                    "backend": proj.backend.value,
                    "iterations": proj.iterations,
                    "converged": proj.converged,
                },
                "display_rotation": [list(row) for row in self.display_rotation],
                "drawn_axes": [
                    {"v": list(v), "loading": list(loading)}
                    for v, loading in self.drawn_axes
                ],
                "confidence": self.confidence,
            }
            return _canonical_json(doc)

    def save_snapshot(self, name: str, overwrite: bool = False) -> None:
        if not name:
            raise UlcaError("snapshot name must be nonempty")
        with self._lock:
            if name in self.snapshots and not overwrite:
                raise DuplicateNameError(
                    f"snapshot {name!r} exists; pass overwrite to replace it"
                )
            self.snapshots[name] = self.serialize_state()

    def list_snapshots(self) -> list[str]:
        with self._lock:
            return list(self.snapshots)

    def restore_snapshot(self, name: str) -> dict:
        """Restore a saved state exactly (no refit of the projection)."""
        with self._lock:
            if name not in self.snapshots:
                raise UnknownSnapshotError(f"no snapshot named {name!r}")
            doc = json.loads(self.snapshots[name])
            if doc["dataset"]["hash"] != self.dataset.content_hash():
                raise UlcaError(
                    f"snapshot {name!r} was saved for a different dataset"
                )
            self.params = self._params_from_dict(doc["params"])
            params_used = self._params_from_dict(doc["params_used"])
            pd = doc["projection"]
            M = np.array(pd["M"], dtype=float)
            proj = Projection(
                M=M,
                objective=pd["objective"],
                alpha_used=pd["alpha_used"],
                backend=Backend(pd["backend"]),
                iterations=pd["iterations"],
                converged=pd["converged"],
            )
            self.fit = UlcaFit(
                projection=proj,
                params_used=params_used,
                embedding=self.dataset.X @ M,
            )
            self.display_rotation = np.array(doc["display_rotation"], dtype=float)
            self.drawn_axes = [
                (np.array(a["v"], dtype=float), np.array(a["loading"], dtype=float))
                for a in doc["drawn_axes"]
            ]
            self.confidence = doc["confidence"]
            self._refresh_geometry()
            return {"objective": proj.objective, "name": name}

    # -- invariant helper ------------------------------------------------------

    def consistency_error(self) -> float:
        """|stored objective - fresh refit objective| (should be < 1e-9)."""
        fresh = fit(self.dataset, self.params, self.solver_cfg)
        return abs(fresh.projection.objective - self.fit.projection.objective)
