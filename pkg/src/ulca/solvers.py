"""Trace-difference and trace-ratio solvers over orthonormal projections.

Two problem forms are handled, both over matrices M with orthonormal
columns (d x d', d' <= d):

* trace difference:  maximize tr(M^T A M) for a fixed symmetric A,
* trace ratio:       maximize tr(M^T C0 M) / tr(M^T C1 M).

The ratio form is reduced to a sequence of difference subproblems
(Dinkelbach iteration): alpha_0 = 0, M_{t+1} maximizes
tr(M^T (C0 - alpha_t C1) M), alpha_{t+1} is the ratio at M_{t+1}, and
the alpha sequence increases monotonically until the subproblem optimum
is approximately zero.

Each difference subproblem is solved either by eigendecomposition (EVD:
top-d' eigenvectors) or by an iterative Riemannian ascent on the
Grassmann manifold (MANIFOLD).  The two backends are interchangeable;
the manifold path exists because it scales better when only a few
directions of a large matrix are needed, and it is held to a 1e-6
relative objective parity with the EVD path on moderately conditioned
problems (covariances of z-scored or similarly scaled data).  Like any
unpreconditioned Krylov-type method, the ascent cannot separate
eigenvalues whose gap is a ~1e-9 fraction of the spectral spread, so on
pathologically scaled inputs (attribute variances spanning 6+ decades)
it may settle on a non-maximal stationary point; detectable stalls set
``converged``/``warning``, but a stationary-point capture is silent.
Prefer the EVD backend (the default) for such data, or standardize
first.

Rotation utilities (varimax, sign/order canonicalization, Procrustes
alignment) act within the column span, so they never change the
objective value of a solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import DimensionMismatchError, EigenFailureError

__all__ = [
    "Backend",
    "SolverConfig",
    "Projection",
    "solve_trace_difference",
    "solve_trace_ratio",
    "solve_manifold",
    "varimax",
    "varimax_criterion",
    "canonicalize_axes",
    "procrustes_align",
]


class Backend(Enum):
    """Which numerical path solves the trace subproblems."""

    EVD = "evd"
    MANIFOLD = "manifold"


@dataclass
class SolverConfig:
    """Knobs for the solvers.

    Parameters
    ----------
    backend : Backend
        EVD (exact, dense) or MANIFOLD (iterative ascent).
    max_manifold_iters : int or None
        Iteration cap for the manifold ascent; ``None`` means use ``d``,
        the ambient dimension of the problem at hand.
    convergence_tol : float
        Relative objective-gain threshold that stops the manifold ascent.
    dinkelbach_max_iters : int
        Cap on ratio-mode outer iterations.
    dinkelbach_tol : float
        Ratio-mode stopping threshold, applied to the subproblem optimum
        relative to tr|C0| + tr|C1|.
    apply_varimax : bool
        Whether model-level fits rotate the projection for simple
        structure before canonicalization.
    seed : int
        Seed for the manifold starting point (the ascent starts from a
        random subspace; axis-aligned starts can sit on saddle points).
    """

    backend: Backend = Backend.EVD
    max_manifold_iters: int | None = None
    convergence_tol: float = 1e-8
    dinkelbach_max_iters: int = 30
    dinkelbach_tol: float = 1e-6
    apply_varimax: bool = True
    seed: int = 7

    def __post_init__(self) -> None:
        if self.convergence_tol <= 0 or self.dinkelbach_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dinkelbach_max_iters < 1:
            raise ValueError("dinkelbach_max_iters must be >= 1")
        if self.max_manifold_iters is not None and self.max_manifold_iters < 1:
            raise ValueError("max_manifold_iters must be >= 1")


@dataclass
class Projection:
    """A solved projection.

    ``M`` has orthonormal columns, sign-fixed and ordered by
    :func:`canonicalize_axes`.  ``objective`` is the final objective
    value: tr(M^T A M) in difference mode, the achieved ratio in ratio
    mode.  ``alpha_used`` is the trade-off value at the solution (the
    converged ratio in ratio mode, the caller's fixed value otherwise,
    ``None`` for a bare difference solve).  ``alpha_trace`` records the
    Dinkelbach alpha sequence for ratio solves.
    """

    M: np.ndarray
    objective: float
    alpha_used: float | None
    backend: Backend
    iterations: int
    converged: bool = True
    warning: str | None = None
    alpha_trace: tuple[float, ...] = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# small shared helpers


def _sym(A: np.ndarray) -> np.ndarray:
    """Symmetrize to absorb floating-point asymmetry."""
    return (A + A.T) / 2.0


def _trabs(A: np.ndarray) -> float:
    """Sum of absolute diagonal entries of the symmetrized matrix."""
    return float(np.abs(np.diagonal(_sym(A))).sum())


def _check_square(A: np.ndarray, dprime: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {A.shape}")
    d = A.shape[0]
    if not 1 <= dprime <= d:
        raise DimensionMismatchError(f"need 1 <= dprime <= {d}, got {dprime}")
    if not np.all(np.isfinite(A)):
        raise EigenFailureError("matrix contains NaN or infinite entries")
    return A


def _top_eigvecs(A: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k eigenpairs of a symmetric matrix, eigenvalues descending."""
    try:
        w, V = np.linalg.eigh(_sym(A))
    except np.linalg.LinAlgError as exc:
        raise EigenFailureError(f"eigendecomposition failed: {exc}") from exc
    w = w[::-1]
    V = V[:, ::-1]
    return w[:k], V[:, :k]


def _orth(B: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column span, dropping null directions."""
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        return U[:, :0]
    return U[:, s > 1e-12 * s[0]]


def _unit(B: np.ndarray) -> np.ndarray:
    """Scale to unit Frobenius norm; zero matrices pass through."""
    n = float(np.linalg.norm(B))
    return B / n if n > 0 else B


def _gradient_small(gnorm: float, A: np.ndarray) -> bool:
    """Stationarity test for the manifold ascent, relative to tr|A|."""
    return gnorm <= 1e-6 * max(_trabs(A), 1e-30)


# ---------------------------------------------------------------------------
# trace-difference solvers


def _evd_trace_difference(
    A: np.ndarray, dprime: int, _M0: np.ndarray | None = None
) -> tuple[np.ndarray, float, int]:
    w, V = _top_eigvecs(A, dprime)
    return V, float(w.sum()), 1


def _manifold_trace_difference(
    A: np.ndarray,
    dprime: int,
    cfg: SolverConfig,
    M0: np.ndarray | None = None,
) -> tuple[np.ndarray, float, int, float]:
    """Riemannian subspace ascent for max tr(M^T A M), M^T M = I.

    Each step forms the Rayleigh-Ritz optimum over the subspace spanned
    by the current iterate, a depth-3 block Krylov expansion of the
    Riemannian gradient (I - MM^T)AM, and the previous update direction,
    then retracts onto the manifold by orthonormalization.  The deeper
    block per iteration plays the role a trust-region method's inner
    solve would, so the iteration cap can stay at its small default.
    The objective is monotone non-decreasing because the search
    subspace always contains the current iterate.

    Returns (M, objective, iterations, final gradient norm).
    """
    d = A.shape[0]
    cap = cfg.max_manifold_iters if cfg.max_manifold_iters is not None else d
    cap = max(cap, 1)
    scale = max(_trabs(A), 1e-30)

    if M0 is None:
        rng = np.random.default_rng(cfg.seed + 1009 * d + dprime)
        M0 = np.linalg.qr(rng.standard_normal((d, dprime)))[0]
    M = M0
    AM = A @ M
    f = float(np.sum(M * AM))
    P: np.ndarray | None = None
    gnorm = math.inf
    gain = math.inf
    iters = 0

    for iters in range(1, cap + 1):
        G = AM - M @ (M.T @ AM)
        gnorm = float(np.linalg.norm(G))
        if gnorm <= 1e-9 * scale:
            break
        K = A @ G
        K -= M @ (M.T @ K)
        K2 = A @ K
        K2 -= M @ (M.T @ K2)
        # Normalize each block before stacking: K2 carries a ||A||^2
        # factor, and a block that dwarfs M would push M's columns
        # below the rank cutoff inside _orth, losing the current
        # iterate from the search span (and with it monotonicity).
        blocks = [M] + [_unit(B) for B in ((G, K, K2) if P is None else (G, K, K2, P))]
        S = _orth(np.hstack(blocks))
        try:
            w, Y = np.linalg.eigh(_sym(S.T @ A @ S))
        except np.linalg.LinAlgError as exc:
            raise EigenFailureError(f"reduced eigenproblem failed: {exc}") from exc
        top = Y[:, ::-1][:, :dprime]
        M_new = S @ top
        f_new = float(w[::-1][:dprime].sum())
        P = M_new - M @ (M.T @ M_new)
        gain = f_new - f
        M, f = M_new, f_new
        AM = A @ M
        # Judge progress against the objective itself, not tr|A|: near a
        # Dinkelbach fixed point the optimum is tiny compared to the
        # matrix scale, and a trace-relative test would stop while the
        # top eigenspace is still far away.  The small floor keeps the
        # test meaningful when the optimum itself is ~0.
        if gain <= cfg.convergence_tol * max(abs(f_new), 1e-6 * scale):
            G = AM - M @ (M.T @ AM)
            gnorm = float(np.linalg.norm(G))
            break

    return M, f, iters, gnorm


def solve_trace_difference(
    A: np.ndarray,
    dprime: int,
    cfg: SolverConfig | None = None,
    alpha: float | None = None,
) -> Projection:
    """Maximize tr(M^T A M) over orthonormal d x d' matrices.

    The optimum is the span of the top-d' eigenvectors of the
    symmetrized A, with objective equal to the sum of the d' largest
    eigenvalues.  The MANIFOLD backend reaches the same objective
    iteratively (within 1e-6 relative).

    Parameters
    ----------
    A : ndarray, shape (d, d)
        Symmetric objective matrix.
    dprime : int
        Number of columns of M.
    cfg : SolverConfig, optional
    alpha : float, optional
        Recorded on the result when A came from C0 - alpha*C1; purely
        informational here.
    """
    cfg = cfg or SolverConfig()
    A = _check_square(_sym(np.asarray(A, dtype=float)), dprime)

    if cfg.backend is Backend.EVD:
        M, fval, iters = _evd_trace_difference(A, dprime)
        converged, warning = True, None
    else:
        M, fval, iters, gnorm = _manifold_trace_difference(A, dprime, cfg)
        converged = _gradient_small(gnorm, A)
        warning = (
            None
            if converged
            else f"manifold ascent hit the iteration cap with gradient norm "
            f"{gnorm:.3e} (scale {_trabs(A):.3e})"
        )

    return Projection(
        M=canonicalize_axes(M),
        objective=fval,
        alpha_used=alpha,
        backend=cfg.backend,
        iterations=iters,
        converged=converged,
        warning=warning,
    )


# ---------------------------------------------------------------------------
# trace-ratio solver (Dinkelbach iteration)


def _dinkelbach(
    C0: np.ndarray,
    C1: np.ndarray,
    dprime: int,
    cfg: SolverConfig,
    subsolve,
    fresh=None,
) -> Projection:
    C0 = _sym(C0)
    C1 = _sym(C1)
    scale = max(_trabs(C0) + _trabs(C1), 1e-30)
    tol = cfg.dinkelbach_tol * scale

    alpha = 0.0
    trace = [alpha]
    M: np.ndarray | None = None
    subval = math.inf
    iters = 0

    incumbent: np.ndarray | None = None
    sub_ok = True
    for iters in range(1, cfg.dinkelbach_max_iters + 1):
        A = C0 - alpha * C1
        M, subval, sub_ok = subsolve(A, M)
        if fresh is not None and abs(subval) < tol:
            # An iterative subsolver can sit at a non-maximal stationary
            # point, where the warm start returns unchanged and the zero
            # subproblem value forges a termination certificate.  Probe
            # the same subproblem from a fresh random start and keep the
            # better solution; only an unbeaten certificate terminates.
            M2, f2, ok2 = fresh(A, iters)
            if f2 > subval + tol:
                M, subval, sub_ok = M2, f2, ok2
        num = float(np.sum(M * (C0 @ M)))
        den = float(np.sum(M * (C1 @ M)))
        if den <= 1e-15 * scale:
            # The ratio is unbounded along this subspace; freeze at a
            # large finite value and report non-convergence below.
            ratio = min(num / (1e-15 * scale), 1e15)
        else:
            ratio = num / den
        if incumbent is not None and ratio < alpha:
            # An inexact subsolve can step backwards; an exact one never
            # does (its optimum is >= 0 at the incumbent).  Resume from
            # the incumbent so the alpha sequence stays non-decreasing
            # and the returned M achieves the reported ratio.
            M, ratio = incumbent, alpha
        incumbent = M
        alpha = ratio
        trace.append(alpha)
        if abs(subval) < tol:
            break

    # The certificate is only as good as the final subproblem solve: a
    # capped-out inner iteration with a large residual gradient means the
    # zero optimum may be an underestimate, so report that honestly.
    converged = abs(subval) < tol and sub_ok
    if abs(subval) > 10 * tol:
        warning = (
            f"Dinkelbach iteration hit the cap with residual {abs(subval):.3e} "
            f"(tolerance {tol:.3e})"
        )
    elif not sub_ok:
        warning = (
            "the final trace-difference subproblem under-converged; the "
            "achieved ratio may be below the optimum"
        )
    else:
        warning = None

    return Projection(
        M=canonicalize_axes(M),
        objective=alpha,
        alpha_used=alpha,
        backend=cfg.backend,
        iterations=iters,
        converged=converged,
        warning=warning,
        alpha_trace=tuple(trace),
    )


def solve_trace_ratio(
    C0: np.ndarray,
    C1: np.ndarray,
    dprime: int,
    cfg: SolverConfig | None = None,
) -> Projection:
    """Maximize tr(M^T C0 M) / tr(M^T C1 M) over orthonormal M.

    Runs the Dinkelbach iteration from alpha = 0.  Each update sets
    alpha to the ratio achieved by the current subproblem optimum, so
    the alpha sequence is non-decreasing; it stops once the subproblem
    optimum is below ``dinkelbach_tol * (tr|C0| + tr|C1|)`` in absolute
    value, or at the iteration cap.  Hitting the cap with a residual
    above ten times the tolerance sets the ``warning`` field (the best
    iterate is still returned).

    Requires tr(C1) > 0; callers assembling C1 with a ridge term
    guarantee this.
    """
    cfg = cfg or SolverConfig()
    C0 = _check_square(np.asarray(C0, dtype=float), dprime)
    C1 = _check_square(np.asarray(C1, dtype=float), dprime)
    if C0.shape != C1.shape:
        raise DimensionMismatchError(
            f"C0 is {C0.shape} but C1 is {C1.shape}"
        )

    if cfg.backend is Backend.EVD:
        subsolve = lambda A, M0: (*_evd_trace_difference(A, dprime, M0)[:2], True)
        fresh = None
    else:

        def subsolve(A: np.ndarray, M0: np.ndarray | None):
            M, f, _, gnorm = _manifold_trace_difference(A, dprime, cfg, M0)
            return M, f, _gradient_small(gnorm, A)

        def fresh(A: np.ndarray, t: int):
            probe_cfg = replace(cfg, seed=cfg.seed + 7919 * t)
            M, f, _, gnorm = _manifold_trace_difference(A, dprime, probe_cfg, None)
            return M, f, _gradient_small(gnorm, A)

    return _dinkelbach(C0, C1, dprime, cfg, subsolve, fresh)


def solve_manifold(
    C0: np.ndarray,
    C1: np.ndarray,
    dprime: int,
    cfg: SolverConfig | None = None,
    alpha: float | None = None,
) -> Projection:
    """Solve either trace form with the manifold backend.

    ``alpha`` given: maximize tr(M^T (C0 - alpha*C1) M).  ``alpha``
    absent: ratio mode.  The result must match the EVD backend's
    objective within 1e-6 relative.
    """
    cfg = cfg or SolverConfig()
    mcfg = SolverConfig(
        backend=Backend.MANIFOLD,
        max_manifold_iters=cfg.max_manifold_iters,
        convergence_tol=cfg.convergence_tol,
        dinkelbach_max_iters=cfg.dinkelbach_max_iters,
        dinkelbach_tol=cfg.dinkelbach_tol,
        apply_varimax=cfg.apply_varimax,
        seed=cfg.seed,
    )
    if alpha is None:
        return solve_trace_ratio(C0, C1, dprime, mcfg)
    C0 = np.asarray(C0, dtype=float)
    C1 = np.asarray(C1, dtype=float)
    return solve_trace_difference(C0 - alpha * C1, dprime, mcfg, alpha=alpha)


# ---------------------------------------------------------------------------
# rotations within the column span


def varimax_criterion(M: np.ndarray) -> float:
    """Sum over columns of the variance of squared loadings."""
    sq = np.asarray(M, dtype=float) ** 2
    return float(sq.var(axis=0).sum())


def _pair_criterion(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.var(x * x) + np.var(y * y))


def varimax(M: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Rotate M within its column span for simple structure.

    Applies pairwise plane rotations, each chosen in closed form to
    maximize the varimax criterion for that column pair, sweeping all
    pairs until a full sweep improves the criterion by less than
    ``tol``.  A single-column M is returned unchanged (no plane to
    rotate in).  Column span and orthonormality are preserved exactly
    up to rounding.
    """
    L = np.array(M, dtype=float, copy=True)
    d, k = L.shape
    if k == 1:
        return L

    for _ in range(max_sweeps):
        before = varimax_criterion(L)
        for p in range(k - 1):
            for q in range(p + 1, k):
                x, y = L[:, p], L[:, q]
                u = x * x - y * y
                v = 2.0 * x * y
                a = u.sum()
                b = v.sum()
                c = (u * u - v * v).sum()
                e = 2.0 * (u * v).sum()
                num = e - 2.0 * a * b / d
                den = c - (a * a - b * b) / d
                if num == 0.0 and den == 0.0:
                    continue
                phi = math.atan2(num, den) / 4.0
                # The closed form pins 4*phi up to the quadrant; probe the
                # nearby stationary angles and keep the best to stay on the
                # maximizing branch regardless of sign convention.
                best_gain, best_xy = 0.0, None
                base = _pair_criterion(x, y)
                for ang in (phi, -phi, phi + math.pi / 4, phi - math.pi / 4):
                    ca, sa = math.cos(ang), math.sin(ang)
                    xn = x * ca + y * sa
                    yn = -x * sa + y * ca
                    gain = _pair_criterion(xn, yn) - base
                    if gain > best_gain:
                        best_gain, best_xy = gain, (xn, yn)
                if best_xy is not None:
                    L[:, p], L[:, q] = best_xy
        if varimax_criterion(L) - before < tol:
            break
    return L


def canonicalize_axes(M: np.ndarray) -> np.ndarray:
    """Fix column signs and order for a reproducible display.

    Each column is flipped so its sum is nonnegative (columns summing
    to zero are flipped so the largest-magnitude entry is positive),
    then columns are sorted by their maximum entry, descending, with
    ties keeping the original relative order.
    """
    M = np.array(M, dtype=float, copy=True)
    _, k = M.shape
    for j in range(k):
        s = M[:, j].sum()
        if abs(s) < 1e-12:
            col = M[:, j]
            s = col[np.argmax(np.abs(col))]
        if s < 0:
            M[:, j] = -M[:, j]
    order = np.argsort(-M.max(axis=0), kind="stable")
    return M[:, order]


def procrustes_align(
    Z_prev: np.ndarray, Z_new: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate a new embedding onto the previous one.

    Finds the orthogonal R (reflections permitted) minimizing
    ``||Z_prev - Z_new R||_F`` via the SVD of ``Z_new^T Z_prev`` and
    returns ``(Z_new R, R)``.  A zero cross-product matrix (e.g. an
    all-zero embedding) yields R = I.  Callers should fold R into the
    stored projection so loadings stay consistent with the display.
    """
    Z_prev = np.asarray(Z_prev, dtype=float)
    Z_new = np.asarray(Z_new, dtype=float)
    if Z_prev.shape != Z_new.shape:
        raise DimensionMismatchError(
            f"embeddings differ in shape: {Z_prev.shape} vs {Z_new.shape}"
        )
    k = Z_new.shape[1]
    B = Z_new.T @ Z_prev
    if not np.any(B):
        return Z_new.copy(), np.eye(k)
    U, _, Vt = np.linalg.svd(B)
    R = U @ Vt
    return Z_new @ R, R
