"""Command-line interface.

Subcommands: estimate, simulate, master-eq, sparse-cov, clime, diagnose.
Every command writes a primary artifact (CSV or JSON by extension) with a
JSON sidecar (`<out>.meta.json`) echoing the full configuration and package
version, so any run can be reproduced exactly. Primary outputs are written
to a temporary file and renamed, never partially written.

Exit codes: 0 success, 1 usage error, 2 numerical failure (the failure is
reported as JSON on stdout with a machine-readable ``code``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import RobustScatterError
from .estimators import (
    ScatterEstimate,
    ScatterMatrix,
    SolverConfig,
    maronna,
    maronna_regularized,
    resolve_u,
    tyler,
    tyler_regularized,
)
from .experiment import (
    ExperimentConfig,
    eigen_bounds_diag,
    quadratic_form_diagnostics,
    stieltjes_diag,
    weight_deviation_experiment,
)
from .master_equation import QMonteCarlo, solve_master
from .model import Dataset, load_dataset_csv, sample_covariance
from .samplers import DistributionSpec, RadialLaw, sample
from .sparse import clime as clime_solve
from .sparse import sparse_cov_estimate

KIND_BY_NAME = {"tyler": "TE", "maronna": "ME", "tyler-reg": "TRE", "maronna-reg": "MRE"}
DIST_BY_NAME = {
    "gaussian": "gaussian",
    "laplace": "laplace-iid",
    "permuted-smoothed": "permuted-smoothed",
    "elliptical": "elliptical",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str, payload) -> None:
    _write_text(path, json.dumps(payload, indent=2) + "\n")


def _write_sidecar(out_path: str, command: str, args: argparse.Namespace,
                   extra: dict, wall_time: float) -> None:
    echo = {k: v for k, v in vars(args).items() if k != "func"}
    payload = {
        "command": command,
        "version": __version__,
        "config": echo,
        "wall_time_s": wall_time,
    }
    payload.update(extra)
    _write_json(f"{out_path}.meta.json", payload)


def _norms_dict(norms) -> dict:
    return {"max": norms.max_norm, "l1": norms.l1_norm, "operator": norms.operator_norm}


def estimate_to_dict(est: ScatterEstimate, n: int) -> dict:
    return {
        "kind": est.kind,
        "p": est.matrix.p,
        "n": n,
        "alpha": est.alpha,
        "u": est.u.name if est.u is not None else None,
        "matrix": [float(v) for v in est.matrix.entries.ravel()],
        "weights": [float(v) for v in est.weights],
        "iterations": est.iterations,
        "residual": est.residual,
        "converged": est.converged,
    }


def estimate_from_dict(doc: dict) -> ScatterEstimate:
    p = int(doc["p"])
    u = resolve_u(doc["u"]) if doc.get("u") else None
    return ScatterEstimate(
        matrix=ScatterMatrix(np.array(doc["matrix"], dtype=float).reshape(p, p)),
        weights=np.array(doc["weights"], dtype=float),
        kind=doc["kind"],
        alpha=float(doc["alpha"]),
        iterations=int(doc["iterations"]),
        residual=float(doc["residual"]),
        converged=bool(doc["converged"]),
        u=u,
    )


def _matrix_csv_text(m: np.ndarray, digits: int = 10) -> str:
    lines = [",".join(f"{v:.{digits}g}" for v in row) for row in np.atleast_2d(m)]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_dist_args(sp, with_shape: bool) -> None:
    sp.add_argument("--dist", choices=sorted(DIST_BY_NAME), default="gaussian",
                    help="sampling distribution family")
    sp.add_argument("--sigma", type=float, default=0.01,
                    help="smoothing level for permuted-smoothed")
    sp.add_argument("--radial", default="constant:1",
                    help="radial law for elliptical: constant:c, chi:k or pareto:a")
    sp.add_argument("--mean", type=float, default=0.0,
                    help="constant mean added to every coordinate")
    if with_shape:
        sp.add_argument("--shape-file", default=None,
                        help="CSV file with the p x p population shape matrix")


def _parse_radial(text: str) -> RadialLaw:
    try:
        kind, _, arg = text.partition(":")
        return RadialLaw(kind, float(arg if arg else 1.0))
    except ValueError as exc:
        raise UsageError(f"bad --radial value {text!r}: {exc}") from None


def _dist_spec(args: argparse.Namespace, p: int) -> DistributionSpec:
    family = DIST_BY_NAME[args.dist]
    mean = None
    if getattr(args, "mean", 0.0):
        mean = np.full(p, float(args.mean))
    shape = None
    shape_file = getattr(args, "shape_file", None)
    if shape_file:
        shape = ScatterMatrix(load_dataset_csv(shape_file).samples)
        if shape.p != p:
            raise UsageError(f"--shape-file matrix is {shape.p}x{shape.p}, expected p={p}")
    return DistributionSpec(
        family=family,
        sigma_smooth=args.sigma,
        radial_law=_parse_radial(args.radial) if family == "elliptical" else None,
        mean=mean,
        shape=shape,
    )


def _threads(args: argparse.Namespace) -> int:
    if getattr(args, "threads", None) is not None:
        return args.threads
    return int(os.environ.get("ROBUST_SCATTER_THREADS", "1"))


def _solver_cfg(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(tol=args.tol, max_iter=args.max_iter)


def _run_estimator(kind: str, data: Dataset, args: argparse.Namespace) -> ScatterEstimate:
    cfg = _solver_cfg(args)
    if kind == "TE":
        return tyler(data, cfg)
    if kind == "ME":
        return maronna(data, resolve_u(args.u), cfg)
    if kind == "TRE":
        return tyler_regularized(data, args.alpha, cfg)
    return maronna_regularized(data, resolve_u(args.u), args.alpha, cfg)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_estimate(args) -> int:
    t0 = time.perf_counter()
    data = load_dataset_csv(args.input)
    kind = KIND_BY_NAME[args.kind]
    est = _run_estimator(kind, data, args)
    if not est.converged:
        _fail("non_convergence",
              f"{kind} did not converge within {args.max_iter} iterations "
              f"(residual {est.residual:.3g})")
        return 2
    _write_json(args.out, estimate_to_dict(est, data.n))
    _write_sidecar(args.out, "estimate", args, {}, time.perf_counter() - t0)
    return 0


def _cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    kind = KIND_BY_NAME[args.kind]
    dims = tuple(int(s) for s in args.dims.split(","))
    spec = _dist_spec(args, dims[0])
    if spec.mean is not None:
        raise UsageError("--mean is not supported by simulate (dimension varies)")
    cfg = ExperimentConfig(
        kind=kind,
        dist=spec,
        dims=dims,
        ratio=args.ratio,
        reps=args.reps,
        base_seed=args.seed,
        u=resolve_u(args.u) if kind in ("ME", "MRE") else None,
        alpha=args.alpha,
        tol=args.tol,
        max_iter=args.max_iter,
        mc_reps=args.mc_reps,
        tol_root=args.tol_root,
        threads=_threads(args),
    )
    report = weight_deviation_experiment(cfg)
    lines = ["p,n,linf_mean,linf_stderr,rmse_mean,rmse_stderr"]
    for r in report.rows:
        lines.append(
            f"{r.p},{r.n},{r.linf_mean:.10g},{r.linf_stderr:.10g},"
            f"{r.rmse_mean:.10g},{r.rmse_stderr:.10g}"
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    extra = {
        "slope_linf": report.slope_linf,
        "intercept_linf": report.intercept_linf,
        "r2_linf": report.r2_linf,
        "slope_rmse": report.slope_rmse,
        "intercept_rmse": report.intercept_rmse,
        "r2_rmse": report.r2_rmse,
        "predicted_weight": report.predicted_weight,
        "rows": [
            {
                "p": r.p, "n": r.n, "w_star": r.w_star,
                "linf_mean": r.linf_mean, "linf_stderr": r.linf_stderr,
                "rmse_mean": r.rmse_mean, "rmse_stderr": r.rmse_stderr,
                "failures": r.failures,
            }
            for r in report.rows
        ],
        "failures": [r.failures for r in report.rows],
        "experiment_wall_time_s": report.wall_time,
    }
    _write_sidecar(args.out, "simulate", args, extra, time.perf_counter() - t0)
    return 0


def _cmd_master_eq(args) -> int:
    t0 = time.perf_counter()
    p = args.p
    if args.n is not None:
        n = args.n
    elif args.gamma is not None:
        n = int(round(p / args.gamma))
    else:
        raise UsageError("master-eq needs either --n or --gamma")
    spec = _dist_spec(args, p)
    shape = spec.shape
    if shape is not None:
        spec = DistributionSpec(spec.family, spec.sigma_smooth, spec.radial_law,
                                spec.mean, None)
    if spec.mean is not None:
        raise UsageError("--mean is not supported by master-eq (zero-mean analysis)")
    u = resolve_u(args.u) if args.kind == "mre" else None
    res = solve_master(spec, shape, n, p, args.alpha, u=u, reps=args.reps,
                       seed=args.seed, tol_root=args.tol_root)
    gamma = p / n
    payload = {
        "kind": res.kind,
        "p": p,
        "n": n,
        "gamma": gamma,
        "alpha": args.alpha,
        "d_star": res.d_star,
        "bracket": list(res.bracket),
        "f_residual": res.f_residual,
        "mc_reps": res.mc_reps,
        "mc_stderr": res.mc_stderr,
        "predicted_weight": res.predicted_weight,
    }
    if res.kind == "TRE":
        # internal sanity: at the root, Q must equal 1/(1+alpha-gamma)
        mc = QMonteCarlo(spec, shape, n, p, args.reps, args.seed)
        q_at_root, _ = mc.q(1.0, args.alpha * res.d_star)
        payload["q_at_root"] = q_at_root
        payload["tre_identity_gap"] = abs(q_at_root - 1.0 / (1.0 + args.alpha - gamma))
    if args.out:
        _write_json(args.out, payload)
        _write_sidecar(args.out, "master-eq", args, {}, time.perf_counter() - t0)
    else:
        print(json.dumps(payload, indent=2))
    return 0


def _cmd_sparse_cov(args) -> int:
    t0 = time.perf_counter()
    data = load_dataset_csv(args.input)
    truth = load_dataset_csv(args.truth).samples if args.truth else None
    est = sparse_cov_estimate(data, args.c1, truth=truth, cfg=_solver_cfg(args))
    _write_text(args.out, _matrix_csv_text(est.matrix))
    extra = {
        "method": est.method,
        "threshold": est.parameter,
        "input_norms": _norms_dict(est.input_norms),
        "error_vs_truth": _norms_dict(est.error_vs_truth) if est.error_vs_truth else None,
    }
    _write_sidecar(args.out, "sparse-cov", args, extra, time.perf_counter() - t0)
    return 0


def _cmd_clime(args) -> int:
    t0 = time.perf_counter()
    data = load_dataset_csv(args.input)
    if args.proxy == "tyler":
        est = tyler(data, _solver_cfg(args))
        if not est.converged:
            _fail("non_convergence",
                  f"Tyler proxy did not converge (residual {est.residual:.3g})")
            return 2
        proxy = est.matrix
    else:
        proxy = sample_covariance(data)
    truth = load_dataset_csv(args.truth).samples if args.truth else None
    out = clime_solve(proxy, args.lam, truth=truth, threads=_threads(args))
    _write_text(args.out, _matrix_csv_text(out.matrix))
    extra = {
        "method": out.method,
        "lambda": out.parameter,
        "input_norms": _norms_dict(out.input_norms),
        "error_vs_truth": _norms_dict(out.error_vs_truth) if out.error_vs_truth else None,
    }
    _write_sidecar(args.out, "clime", args, extra, time.perf_counter() - t0)
    return 0


def _cmd_diagnose(args) -> int:
    t0 = time.perf_counter()
    if args.input:
        data = load_dataset_csv(args.input)
    else:
        if args.p is None or args.n is None or args.seed is None:
            raise UsageError("diagnose needs --input, or --p/--n/--seed for synthetic data")
        data = sample(_dist_spec(args, args.p), args.n, args.p, args.seed)
    payload = {"n": data.n, "p": data.p, "gamma": data.p / data.n}
    lmin, lmax = eigen_bounds_diag(data)
    payload["eigen_bounds"] = {"lambda_min": lmin, "lambda_max": lmax}
    payload["stieltjes"] = {"eps": args.eps, "m_hat": stieltjes_diag(data, args.eps)}
    if data.n > data.p:
        q = quadratic_form_diagnostics(data)
        payload["quadratic_forms"] = {
            "max_dev_full": q.max_dev_full,
            "max_dev_loo": q.max_dev_loo,
            "loo_target": 1.0 / (1.0 - q.gamma),
            "max_sherman_morrison_rel_err": q.max_sm_rel_err,
        }
    else:
        payload["quadratic_forms"] = None
    if args.out:
        _write_json(args.out, payload)
        _write_sidecar(args.out, "diagnose", args, {}, time.perf_counter() - t0)
    else:
        print(json.dumps(payload, indent=2))
    return 0


def _fail(code: str, message: str) -> None:
    print(json.dumps({"error": {"code": code, "message": message}}))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(
        prog="robust-scatter",
        description="Robust scatter-matrix estimation: Tyler/Maronna fixed points, "
                    "weight-concentration experiments, sparse covariance and precision pipelines.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    sp = sub.add_parser("estimate", formatter_class=fmt,
                        help="fit one estimator to a dataset CSV")
    sp.add_argument("--kind", choices=sorted(KIND_BY_NAME), required=True)
    sp.add_argument("--input", required=True, help="dataset CSV (n rows, p columns)")
    sp.add_argument("--out", required=True, help="output JSON path")
    sp.add_argument("--u", default="rational", help="weight function: rational or huber:t")
    sp.add_argument("--alpha", type=float, default=1.0, help="regularization (reg kinds)")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("simulate", formatter_class=fmt,
                        help="weight-deviation experiment over a dimension grid")
    sp.add_argument("--kind", choices=sorted(KIND_BY_NAME), required=True)
    _add_dist_args(sp, with_shape=False)
    sp.add_argument("--u", default="rational")
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--dims", required=True, help="comma-separated dimensions, e.g. 64,128,256")
    sp.add_argument("--ratio", type=int, default=2, help="n = ratio * p")
    sp.add_argument("--reps", type=int, default=50)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.add_argument("--mc-reps", type=int, default=200)
    sp.add_argument("--tol-root", type=float, default=1e-3)
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: ROBUST_SCATTER_THREADS or 1)")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("master-eq", formatter_class=fmt,
                        help="solve the limiting-weight master equation")
    sp.add_argument("--kind", choices=["tre", "mre"], required=True)
    _add_dist_args(sp, with_shape=True)
    sp.add_argument("--u", default="rational")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--gamma", type=float, default=None, help="p/n (alternative to --n)")
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--tol-root", type=float, default=1e-3)
    sp.add_argument("--out", default=None, help="output JSON path (stdout when omitted)")
    sp.set_defaults(func=_cmd_master_eq)

    sp = sub.add_parser("sparse-cov", formatter_class=fmt,
                        help="hard-thresholded Tyler estimate of a sparse shape matrix")
    sp.add_argument("--input", required=True)
    sp.add_argument("--c1", type=float, required=True, help="threshold constant")
    sp.add_argument("--out", required=True, help="output CSV path (dense matrix)")
    sp.add_argument("--truth", default=None, help="optional CSV with the true shape matrix")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.set_defaults(func=_cmd_sparse_cov)

    sp = sub.add_parser("clime", formatter_class=fmt,
                        help="sparse inverse-shape estimation via column-wise l1 programs")
    sp.add_argument("--input", required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--out", required=True, help="output CSV path (dense matrix)")
    sp.add_argument("--proxy", choices=["tyler", "sample"], default="tyler")
    sp.add_argument("--truth", default=None, help="optional CSV with the true inverse shape")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(func=_cmd_clime)

    sp = sub.add_parser("diagnose", formatter_class=fmt,
                        help="quadratic-form, Stieltjes and eigenvalue diagnostics")
    sp.add_argument("--input", default=None, help="dataset CSV (else synthetic draw)")
    _add_dist_args(sp, with_shape=True)
    sp.add_argument("--p", type=int, default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None, help="required for synthetic draws")
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--out", default=None, help="output JSON path (stdout when omitted)")
    sp.set_defaults(func=_cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RobustScatterError as exc:
        _fail(exc.code, str(exc))
        return 2
    except np.linalg.LinAlgError as exc:
        _fail("linear_algebra", str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
