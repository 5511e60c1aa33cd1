"""Acceptance gate: one test per release criterion, one PASS/FAIL line each.

Every oracle here is computed independently with numpy/scipy primitives
(plain eigendecompositions, textbook scatter matrices), never through the
library's own solver stack, so agreement is evidence rather than tautology.
"""
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from ulca.backward import evaluate_protocol
from ulca.geometry import confidence_ellipse
from ulca.model import UlcaParams, fit, preset_params
from ulca.session import Gesture, GestureKind, Session
from ulca.solvers import Backend, SolverConfig, solve_trace_ratio

from conftest import make_mixture


@pytest.fixture
def report(capfd):
    """Verdict writer that bypasses output capture, so every criterion
    prints its PASS/FAIL line even on a plain ``pytest -v`` run."""

    def _report(name: str, ok: bool | None, detail: str) -> None:
        verdict = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        with capfd.disabled():
            print(f"{verdict} {name}: {detail}", flush=True)

    return _report


def _top_eigspace(A: np.ndarray, k: int) -> np.ndarray:
    w, V = np.linalg.eigh((A + A.T) / 2.0)
    return V[:, ::-1][:, :k]


def _angle(A: np.ndarray, B: np.ndarray) -> float:
    return float(subspace_angles(A, B).max())


def _scatter(X: np.ndarray, y: np.ndarray, c: int):
    """Textbook scatter matrices, straight from the definition."""
    n, d = X.shape
    grand = X.mean(axis=0)
    within = np.zeros((d, d))
    between = np.zeros((d, d))
    per_group = []
    for j in range(1, c + 1):
        rows = X[y == j]
        mu = rows.mean(axis=0)
        centered = rows - mu
        cov = centered.T @ centered / rows.shape[0]
        per_group.append((rows.shape[0], mu, cov))
        within += rows.shape[0] / n * cov
        between += rows.shape[0] / n * np.outer(mu - grand, mu - grand)
    return per_group, within, between


def test_reduction_oracles(report):
    """PCA / cPCA / LDA presets against plain-eigendecomposition oracles."""
    t0 = time.perf_counter()
    worst = {"pca": 0.0, "cpca": 0.0, "lda": 0.0}
    for seed in range(25):
        data = make_mixture(300, 10, 3, seed=seed)
        X, y = data.X, data.y
        per_group, Cw, Cb = _scatter(X, y, 3)

        tg = seed % 3 + 1
        bg = tg % 3 + 1
        cov_tg = per_group[tg - 1][2]
        cov_bg = per_group[bg - 1][2]

        proj = fit(data, preset_params("pca", 3, target_group=tg)).projection
        worst["pca"] = max(worst["pca"], _angle(proj.M, _top_eigspace(cov_tg, 2)))

        for alpha in (0.1, 1.0, 10.0):
            proj = fit(
                data,
                preset_params(
                    "cpca", 3, target_group=tg, background_group=bg, alpha=alpha
                ),
            ).projection
            oracle = _top_eigspace(cov_tg - alpha * cov_bg, 2)
            worst["cpca"] = max(worst["cpca"], _angle(proj.M, oracle))

        # independent Dinkelbach loop on the textbook scatter pair
        alpha_o, M_o = 0.0, None
        for _ in range(60):
            M_o = _top_eigspace(Cb - alpha_o * Cw, 2)
            alpha_o = np.trace(M_o.T @ Cb @ M_o) / np.trace(M_o.T @ Cw @ M_o)
        proj = fit(
            data,
            preset_params(
                "lda", 3, counts=data.stats.counts, count_weighted=True
            ),
        ).projection
        worst["lda"] = max(worst["lda"], _angle(proj.M, M_o))

    elapsed = time.perf_counter() - t0
    ok = (
        worst["pca"] < 1e-6
        and worst["cpca"] < 1e-6
        and worst["lda"] < 1e-4
        and elapsed < 30.0
    )
    report(
        "reduction-oracles",
        ok,
        f"25 datasets, worst angle pca={worst['pca']:.2e} cpca={worst['cpca']:.2e} "
        f"lda={worst['lda']:.2e} (gates 1e-6/1e-6/1e-4), {elapsed:.1f}s/30s",
    )
    assert worst["pca"] < 1e-6
    assert worst["cpca"] < 1e-6
    assert worst["lda"] < 1e-4
    assert elapsed < 30.0


def test_dinkelbach_certificate(report):
    """Monotone alpha and a near-zero final subproblem optimum, 100 pairs."""
    rng = np.random.default_rng(21)
    worst_residual = 0.0
    monotone = True
    for _ in range(100):
        d = int(rng.integers(2, 21))
        dp = int(rng.integers(1, min(3, d) + 1))
        B0 = rng.standard_normal((d, d))
        B1 = rng.standard_normal((d, d))
        C0 = B0 @ B0.T / d
        C1 = B1 @ B1.T / d + 0.1 * np.eye(d)
        res = solve_trace_ratio(C0, C1, dp)
        trace = np.array(res.alpha_trace)
        monotone = monotone and bool(np.all(np.diff(trace) >= -1e-12 * max(1.0, trace[-1])))
        w = np.linalg.eigvalsh((C0 + C0.T) / 2.0 - res.alpha_used * (C1 + C1.T) / 2.0)
        opt = float(np.sort(w)[::-1][:dp].sum())
        scale = float(np.abs(np.diagonal(C0)).sum() + np.abs(np.diagonal(C1)).sum())
        worst_residual = max(worst_residual, abs(opt) / scale)
    ok = monotone and worst_residual < 1e-5
    report(
        "dinkelbach-certificate",
        ok,
        f"100 pairs, alpha monotone={monotone}, worst |optimum|/scale="
        f"{worst_residual:.2e} (gate 1e-5)",
    )
    assert monotone
    assert worst_residual < 1e-5


def test_backend_parity(report):
    """EVD and manifold agree on the ratio objective within 1e-6 relative."""
    rng = np.random.default_rng(22)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 21))
        dp = int(rng.integers(1, min(3, d) + 1))
        B0 = rng.standard_normal((d, d))
        B1 = rng.standard_normal((d, d))
        C0 = B0 @ B0.T / d
        C1 = B1 @ B1.T / d + 0.1 * np.eye(d)
        evd = solve_trace_ratio(C0, C1, dp, SolverConfig(backend=Backend.EVD))
        man = solve_trace_ratio(C0, C1, dp, SolverConfig(backend=Backend.MANIFOLD))
        worst = max(worst, abs(evd.objective - man.objective) / abs(evd.objective))
    ok = worst < 1e-6
    report(
        "backend-parity",
        ok,
        f"100 instances d<=20 dprime in 1..3, worst rel gap={worst:.2e} (gate 1e-6)",
    )
    assert worst < 1e-6


def test_performance_envelope(report):
    """Fit wall-clock at the sizes the engine must handle interactively."""
    relaxed_data = make_mixture(10_000, 100, 3, seed=100)
    params = preset_params("ccpca", 3, alpha=1.0)
    t0 = time.perf_counter()
    fit(relaxed_data, params)
    relaxed_s = time.perf_counter() - t0

    ratio_data = make_mixture(5_000, 100, 3, seed=101)
    t0 = time.perf_counter()
    fit(ratio_data, preset_params("lda", 3))
    ratio_s = time.perf_counter() - t0

    ok = relaxed_s < 1.0 and ratio_s < 2.0
    report(
        "performance",
        ok,
        f"relaxed n=10000 d=100: {relaxed_s * 1000:.0f}ms (gate 1s); "
        f"trace-ratio n=5000 d=100: {ratio_s * 1000:.0f}ms (gate 2s)",
    )
    assert relaxed_s < 1.0
    assert ratio_s < 2.0


def test_backward_selection_protocol(report):
    """Mimicked-gesture recovery: accuracy and completion-time gates."""
    results = evaluate_protocol(
        n=1000, d=10, c=2, m_values=(40, 20), trials=50, seed=7, e_opt_evals=1000
    )
    by_m = {entry["m"]: entry for entry in results["settings"]}
    m40, m20 = by_m[40], by_m[20]
    total = m40["kept"] + m40["discarded"]
    ok = (
        total >= 50
        and m40["mean_accuracy"] is not None
        and m40["mean_accuracy"] >= 0.6
        and m40["mean_seconds"] < 5.0
        and m20["mean_seconds"] < 2.5
    )
    report(
        "backward-selection",
        ok,
        f"{total} gestures, kept {m40['kept']}; m=40 mean accuracy="
        f"{m40['mean_accuracy']:.3f} (gate 0.6), {m40['mean_seconds'] * 1000:.0f}ms "
        f"(gate 5s); m=20 {m20['mean_seconds'] * 1000:.0f}ms (gate 2.5s)",
    )
    assert total >= 50
    assert m40["mean_accuracy"] >= 0.6
    assert m40["mean_seconds"] < 5.0
    assert m20["mean_seconds"] < 2.5


def test_ellipse_calibration(report):
    """The 50% ellipse holds half the mass of a sampled Gaussian."""
    fractions = []
    for seed in (31, 32, 33):
        rng = np.random.default_rng(seed)
        L = rng.standard_normal((2, 2))
        cov = L @ L.T + 0.2 * np.eye(2)
        pts = rng.multivariate_normal(rng.uniform(-3, 3, 2), cov, size=10_000)
        ellipse = confidence_ellipse(pts, confidence=0.5)
        fractions.append(float(ellipse.contains(pts).mean()))
    ok = all(abs(f - 0.5) <= 0.05 for f in fractions)
    report(
        "ellipse-calibration",
        ok,
        f"contained fractions {['%.3f' % f for f in fractions]} (gate 0.50 +/- 0.05)",
    )
    for f in fractions:
        assert abs(f - 0.5) <= 0.05


def test_wine_walkthrough(wine, report):
    """Scripted analysis: discriminate, merge labels 1-2, boost label 2."""
    session = Session(wine)

    # non-gating attribute report at the discriminant stage
    M = np.abs(session.fit.projection.M)
    names = wine.feature_names
    prominent = set()
    for col in range(M.shape[1]):
        top = np.argsort(-M[:, col])[:5]
        prominent.update(names[i] for i in top)
    claimed = {"flavanoids", "proline", "color_intensity"}
    report(
        "wine-attributes",
        None,
        f"non-gating; top-5 loadings per axis = {sorted(prominent)}; "
        f"claimed trio present: {sorted(claimed & prominent)} of {sorted(claimed)}",
    )

    l_before = float(session.geometry.distances[0, 1])
    target = session.geometry.centers[0]
    merge = Gesture(
        GestureKind.MOVE_CENTROID, group=2, x=float(target[0]), y=float(target[1])
    )
    summary = session.apply_gesture(merge)
    l_after = float(session.geometry.distances[0, 1])
    merged = l_after < l_before and not summary["cancelled"]

    boost = UlcaParams(
        w_tg=(0.0, 1.0, 0.0),
        w_bg=(1.0, 0.0, 1.0),
        w_bw=(0.0, 0.0, 0.0),
        alpha=None,
        dprime=2,
    )
    session.update_params(boost)
    Z, y = session.fit.embedding, wine.y
    variances = [float(Z[y == j].var(axis=0).sum()) for j in (1, 2, 3)]
    boosted = variances[1] > variances[0] and variances[1] > variances[2]

    ok = merged and boosted
    report(
        "wine-walkthrough",
        ok,
        f"merge l(1,2) {l_before:.3f}->{l_after:.3f} (strict decrease), "
        f"label-2 variance {variances[1]:.2f} vs {variances[0]:.2f}/{variances[2]:.2f}",
    )
    assert merged
    assert boosted


def test_invariant_suites_standalone(report):
    """The named invariant suites run green on their own."""
    node_ids = [
        "tests/test_solvers.py::TestProjectionInvariants",
        "tests/test_solvers.py::TestVarimax",
        "tests/test_solvers.py::TestCanonicalizeAxes",
        "tests/test_solvers.py::TestProcrustes",
        "tests/test_backward.py::TestCostDist",
        "tests/test_backward.py::TestCostArea",
        "tests/test_session.py::TestSnapshots",
    ]
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", *node_ids],
        capture_output=True,
        text=True,
    )
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else "no output"
    ok = proc.returncode == 0
    report("invariant-suites", ok, f"standalone run: {tail}")
    assert ok, proc.stdout + proc.stderr
