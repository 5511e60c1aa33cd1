"""Box-constrained derivative-free minimizer with linear trust-region models.

COBYLA-style scheme: maintain a simplex of n+1 evaluated points, fit a
linear interpolation model through them, and step from the best vertex
against the model gradient, at most a trust radius ``rho`` away.  The
radius only shrinks (rho_init down to rho_final), candidate points are
projected into the box before evaluation (the objective is never
called outside it), and the incumbent best is returned whatever stops
the run — budget, radius collapse, or cancellation.

The algorithm is deterministic and never looks at the evaluation
budget when choosing a step, so a run with a larger budget replays a
shorter run's evaluation sequence exactly and can only end at an equal
or better incumbent.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

__all__ = ["CobylaResult", "minimize"]

_COND_LIMIT = 1e10  # simplex geometry considered degenerate beyond this
_SHRINK = 0.5


@dataclass
class CobylaResult:
    """Outcome of one minimization run.

    ``trace`` records the incumbent (x, cost) after each evaluation —
    its cost sequence is non-increasing by construction.  The raw
    evaluation sequence is kept separately in ``evaluations``.
    """

    x: np.ndarray
    cost: float
    cost_init: float
    n_evaluations: int
    trace: list[tuple[np.ndarray, float]] = field(default_factory=list)
    evaluations: list[tuple[np.ndarray, float]] = field(default_factory=list)
    cancelled: bool = False


class _Budget(Exception):
    """Internal: evaluation budget exhausted or run cancelled."""


class _Run:
    def __init__(self, f, lower, upper, max_evals, cancel, progress, progress_every):
        self.f = f
        self.lower = lower
        self.upper = upper
        self.max_evals = max_evals
        self.cancel = cancel
        self.progress = progress
        self.progress_every = progress_every
        self.nev = 0
        self.best_x: np.ndarray | None = None
        self.best_f = np.inf
        self.trace: list[tuple[np.ndarray, float]] = []
        self.evaluations: list[tuple[np.ndarray, float]] = []
        self.cancelled = False

    def evaluate(self, x: np.ndarray) -> float:
        if self.nev >= self.max_evals:
            raise _Budget
        if self.cancel is not None and self.cancel():
            self.cancelled = True
            raise _Budget
        fx = float(self.f(x))
        self.nev += 1
        self.evaluations.append((x.copy(), fx))
        if fx < self.best_f:
            self.best_f = fx
            self.best_x = x.copy()
        self.trace.append((self.best_x.copy(), self.best_f))
        if self.progress is not None and self.nev % self.progress_every == 0:
            self.progress(self.nev, self.best_f)
        return fx


def minimize(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_evals: int = 40,
    rho_init: float = 0.25,
    rho_final: float = 1e-4,
    cancel: Callable[[], bool] | None = None,
    progress: Callable[[int, float], None] | None = None,
    progress_every: int = 5,
) -> CobylaResult:
    """Minimize ``f`` over the box ``[lower, upper]``.

    Parameters
    ----------
    f : callable
        Objective; only ever called on points inside the box.
    x0 : ndarray
        Feasible starting point (projected into the box if not).
    lower, upper : ndarray
        Elementwise bounds, ``lower < upper``.
    max_evals : int
        Hard budget on objective evaluations.
    rho_init, rho_final : float
        Initial trust radius and the radius below which the run stops.
    cancel : callable, optional
        Polled between evaluations; returning True stops the run with
        the incumbent best.
    progress : callable, optional
        Called as ``progress(n_evaluations, best_cost)`` every
        ``progress_every`` evaluations.
    """
    x0 = np.asarray(x0, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = x0.shape[0]
    if lower.shape != x0.shape or upper.shape != x0.shape:
        raise ValueError("bounds must match x0 in shape")
    if np.any(lower >= upper):
        raise ValueError("need lower < upper elementwise")
    x0 = np.clip(x0, lower, upper)

    run = _Run(f, lower, upper, max_evals, cancel, progress, progress_every)

    def clip(x: np.ndarray) -> np.ndarray:
        return np.clip(x, lower, upper)

    def spanning_points(center: np.ndarray, rho: float) -> list[np.ndarray]:
        pts = []
        for i in range(n):
            step = np.zeros(n)
            step[i] = rho if center[i] + rho <= upper[i] else -rho
            pts.append(clip(center + step))
        return pts

    vertices: list[np.ndarray] = []
    values: list[float] = []

    try:
        vertices.append(x0)
        values.append(run.evaluate(x0))
        for p in spanning_points(x0, rho_init):
            vertices.append(p)
            values.append(run.evaluate(p))

        rho = rho_init
        while rho >= rho_final and run.nev < max_evals:
            best = int(np.argmin(values))
            vertices[0], vertices[best] = vertices[best], vertices[0]
            values[0], values[best] = values[best], values[0]
            b = vertices[0]
            f_b = values[0]

            A = np.vstack([v - b for v in vertices[1:]])
            if np.linalg.cond(A) > _COND_LIMIT:
                # Degenerate simplex: re-span around the best vertex at the
                # current radius and refit the model next pass.
                vertices = [b]
                values = [f_b]
                for p in spanning_points(b, rho):
                    vertices.append(p)
                    values.append(run.evaluate(p))
                continue

            g = np.linalg.solve(A, np.asarray(values[1:]) - f_b)
            # Feasible steepest-descent direction: drop components that push
            # into a bound we already sit on, so the step keeps its full
            # length inside the box instead of being clipped to nothing.
            direction = -g
            at_lower = (b <= lower + 1e-14) & (direction < 0)
            at_upper = (b >= upper - 1e-14) & (direction > 0)
            direction[at_lower | at_upper] = 0.0
            dnorm = float(np.linalg.norm(direction))
            if dnorm <= 1e-15 * max(1.0, abs(f_b)):
                # No feasible descent in the linear model at this radius.
                rho *= _SHRINK
                continue

            cand = clip(b + rho * direction / dnorm)
            if float(np.linalg.norm(cand - b)) < 1e-14:
                rho *= _SHRINK
                continue

            f_cand = run.evaluate(cand)
            predicted = float(g @ (b - cand))
            actual = f_b - f_cand

            # Swap the candidate in for the vertex whose removal keeps the
            # simplex volume healthy: s expresses cand in simplex coordinates,
            # and replacing vertex j scales the volume by |s_j|.
            s = np.linalg.solve(A.T, cand - b)
            usable = np.abs(s) >= 0.1 * float(np.abs(s).max() or 1.0)
            if np.any(usable):
                candidates = np.where(usable)[0]
                j = 1 + candidates[np.argmax(np.asarray(values[1:])[candidates])]
                vertices[j] = cand
                values[j] = f_cand

            if actual >= 0.1 * max(predicted, 0.0):
                continue
            # Failed step.  If the simplex is stale (vertices far outside the
            # trust region), spend the next evaluation pulling the farthest
            # one to the current scale instead of shrinking against a model
            # fitted at the wrong scale.
            spans = [float(np.linalg.norm(v - b)) for v in vertices[1:]]
            far = 1 + int(np.argmax(spans))
            if spans[far - 1] > 2.0 * rho:
                u = (vertices[far] - b) / spans[far - 1]
                pulled = clip(b + rho * u)
                if float(np.linalg.norm(pulled - b)) < 0.5 * rho:
                    pulled = clip(b - rho * u)
                if float(np.linalg.norm(pulled - b)) >= 1e-14:
                    vertices[far] = pulled
                    values[far] = run.evaluate(pulled)
                    continue
            rho *= _SHRINK
    except _Budget:
        pass

    if run.best_x is None:
        # Budget of zero or immediate cancellation: report the start point
        # without having evaluated it.
        run.best_x = x0.copy()
        run.best_f = np.inf

    return CobylaResult(
        x=run.best_x,
        cost=run.best_f,
        cost_init=run.evaluations[0][1] if run.evaluations else np.inf,
        n_evaluations=run.nev,
        trace=run.trace,
        evaluations=run.evaluations,
        cancelled=run.cancelled,
    )
