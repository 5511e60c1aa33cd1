"""Command-line entry points: batch fitting, evaluation, serving.

Exit codes: 0 success, 2 bad flags, 3 unreadable/invalid data,
4 solver non-convergence under --strict, 5 requested port busy.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .backward import evaluate_protocol
from .dataio import load_csv_dataset, write_matrix_csv
from .errors import DataFormatError, UlcaError
from .group_stats import standardize
from .model import PRESET_NAMES, UlcaParams, fit, preset_params
from .solvers import Backend, SolverConfig

EXIT_OK = 0
EXIT_BAD_FLAGS = 2
EXIT_BAD_DATA = 3
EXIT_NO_CONVERGENCE = 4
EXIT_PORT_BUSY = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ulca",
        description="Interactive linear DR for group comparison: fit projections, "
        "evaluate gesture-driven parameter selection, serve the live UI.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a projection on a CSV dataset")
    p_fit.add_argument("--data", required=True, help="dataset CSV path")
    p_fit.add_argument("--label-col", required=True, help="label column name")
    p_fit.add_argument("--dims", type=int, default=2, help="embedding dimension")
    p_fit.add_argument("--w-tg", help="comma list of target weights")
    p_fit.add_argument("--w-bg", help="comma list of background weights")
    p_fit.add_argument("--w-bw", help="comma list of between-group weights")
    p_fit.add_argument(
        "--alpha", default="auto", help="'auto' for trace-ratio mode, or a number"
    )
    p_fit.add_argument("--gamma0", type=float, default=0.0)
    p_fit.add_argument("--gamma1", type=float, default=0.0)
    p_fit.add_argument("--backend", choices=["evd", "manifold"], default="evd")
    p_fit.add_argument(
        "--standardize", action="store_true", help="z-score attributes first"
    )
    p_fit.add_argument("--preset", choices=PRESET_NAMES)
    p_fit.add_argument("--target-group", type=int, default=1)
    p_fit.add_argument("--background-group", type=int)
    p_fit.add_argument(
        "--count-weighted",
        action="store_true",
        help="lda preset: weight groups by n_j/n",
    )
    p_fit.add_argument("--out-proj", help="write the projection matrix CSV here")
    p_fit.add_argument("--out-embedding", help="write the embedding CSV here")
    p_fit.add_argument(
        "--strict",
        action="store_true",
        help="treat solver non-convergence warnings as failures",
    )

    p_eval = sub.add_parser(
        "eval-backward", help="mimicked-gesture evaluation on synthetic data"
    )
    p_eval.add_argument("--n", type=int, default=1000, help="rows")
    p_eval.add_argument("--d", type=int, default=10, help="attributes")
    p_eval.add_argument("--c", type=int, default=2, help="groups")
    p_eval.add_argument(
        "--m", default="40", help="comma list of evaluation budgets"
    )
    p_eval.add_argument("--trials", type=int, default=50)
    p_eval.add_argument("--seed", type=int, default=7)
    p_eval.add_argument("--e-opt-evals", type=int, default=1000)

    p_serve = sub.add_parser("serve", help="run the HTTP/WebSocket service")
    p_serve.add_argument("--port", type=int, default=8040)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data", help="dataset CSV to load at startup")
    p_serve.add_argument("--label-col", help="label column name")
    p_serve.add_argument("--snapshot-dir", help="directory for snapshot files")
    p_serve.add_argument("--static-dir", help="UI bundle to serve at /")

    return parser


def _parse_weights(text: str, c: int, flag: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise SystemExit(
            _flag_error(f"{flag} must be a comma list of numbers, got {text!r}")
        )
    if len(values) != c:
        raise SystemExit(
            _flag_error(f"{flag} needs {c} entries (one per group), got {len(values)}")
        )
    return values


def _flag_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_BAD_FLAGS


def cmd_fit(args: argparse.Namespace) -> int:
    try:
        data = load_csv_dataset(args.data, args.label_col)
    except UlcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_DATA

    if args.standardize:
        data = standardize(data)

    if not 1 <= args.dims <= data.n_features:
        return _flag_error(
            f"--dims must be in 1..{data.n_features} for this dataset, got {args.dims}"
        )

    if args.alpha == "auto":
        alpha = None
    else:
        try:
            alpha = float(args.alpha)
        except ValueError:
            return _flag_error(f"--alpha must be 'auto' or a number, got {args.alpha!r}")
        if alpha < 0:
            return _flag_error(f"--alpha must be >= 0, got {alpha}")

    explicit = [w for w in (args.w_tg, args.w_bg, args.w_bw) if w is not None]
    c = data.n_groups
    try:
        if args.preset:
            if explicit:
                return _flag_error(
                    "--preset and explicit --w-* flags are mutually exclusive"
                )
            params = preset_params(
                args.preset,
                c,
                target_group=args.target_group,
                background_group=args.background_group,
                alpha=alpha,
                gamma0=args.gamma0,
                gamma1=args.gamma1,
                dprime=args.dims,
                counts=data.stats.counts if args.count_weighted else None,
                count_weighted=args.count_weighted,
            )
        else:
            if not explicit:
                return _flag_error("specify --preset or at least one of --w-tg/--w-bg/--w-bw")
            zeros = ",".join("0" for _ in range(c))
            params = UlcaParams(
                w_tg=_parse_weights(args.w_tg or zeros, c, "--w-tg"),
                w_bg=_parse_weights(args.w_bg or zeros, c, "--w-bg"),
                w_bw=_parse_weights(args.w_bw or zeros, c, "--w-bw"),
                alpha=alpha,
                gamma0=args.gamma0,
                gamma1=args.gamma1,
                dprime=args.dims,
            )
    except (ValueError, UlcaError) as exc:
        return _flag_error(str(exc))

    cfg = SolverConfig(
        backend=Backend.EVD if args.backend == "evd" else Backend.MANIFOLD
    )
    try:
        fitted = fit(data, params, cfg)
    except UlcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_DATA

    proj = fitted.projection
    axis_names = [f"axis_{i + 1}" for i in range(params.dprime)]
    if args.out_proj:
        write_matrix_csv(args.out_proj, proj.M, axis_names)
    if args.out_embedding:
        write_matrix_csv(args.out_embedding, fitted.embedding, axis_names)

    print(
        json.dumps(
            {
                "objective": proj.objective,
                "alpha": fitted.params_used.alpha,
                "iterations": proj.iterations,
                "converged": proj.converged,
                "warning": proj.warning,
                "gamma0": fitted.params_used.gamma0,
                "gamma1": fitted.params_used.gamma1,
            }
        )
    )
    if args.strict and not proj.converged:
        print("error: solver did not converge (--strict)", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_eval_backward(args: argparse.Namespace) -> int:
    try:
        m_values = tuple(int(v) for v in args.m.split(","))
    except ValueError:
        return _flag_error(f"--m must be a comma list of integers, got {args.m!r}")
    if args.n < 1 or args.d < 1 or args.c < 1 or args.trials < 0:
        return _flag_error("--n/--d/--c must be positive and --trials nonnegative")
    if any(m < 1 for m in m_values):
        return _flag_error("every --m budget must be >= 1")
    report = evaluate_protocol(
        n=args.n,
        d=args.d,
        c=args.c,
        m_values=m_values,
        trials=args.trials,
        seed=args.seed,
        e_opt_evals=args.e_opt_evals,
    )
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    if args.data is not None and args.label_col is None:
        return _flag_error("--label-col is required with --data")
    try:
        serve(
            port=args.port,
            data=args.data,
            host=args.host,
            label_col=args.label_col,
            snapshot_dir=args.snapshot_dir,
            static_dir=args.static_dir,
        )
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PORT_BUSY
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "fit":
        return cmd_fit(args)
    if args.command == "eval-backward":
        return cmd_eval_backward(args)
    return cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
