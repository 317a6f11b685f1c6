"""``rocarc`` command line: fit, divergence, figure-bounds, benchmark, roc.

Exit codes: 0 success, 1 usage or I/O error, 2 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .baselines import BenchmarkConfig, benchmark_imbalanced
from .data import DataError, GaussianSpec, SampleSet, gen_gaussian_pair, load_csv
from .divergence import (
    DEFAULT_RESCALE, arc_length_estimate, estimate_divergence_pipeline, figure_bounds_rows,
    rows_to_csv, tv_bounds,
)
from .estimator import SolverConfig, SolverError, cross_validate, default_cv_grids, fit_atan_ratio
from .linear import model_from_dict
from .rocgeom import empirical_roc, mixture_surface_grid
from .twostep import two_step_fit

log = logging.getLogger("rocarc")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class Manifest:
    """Run manifest embedded in every artifact (or written beside CSV artifacts)."""

    def __init__(self, subcommand: str, args: argparse.Namespace):
        self.subcommand = subcommand
        self.config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
        self.timings: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        log.info("stage %s", name)
        t0 = time.perf_counter()
        yield
        self.timings[name] = round((time.perf_counter() - t0) * 1000.0, 3)

    def to_dict(self, resolved: dict | None = None) -> dict:
        cfg = dict(self.config)
        if resolved:
            cfg["resolved"] = resolved
        return {
            "subcommand": self.subcommand,
            "config_echo": cfg,
            "seed": self.config.get("seed"),
            "versions": {
                "rocarc": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "timings_ms": self.timings,
        }


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _emit_csv(text: str, out: str | None, manifest: dict) -> None:
    _emit(text, out)
    if out:
        write_atomic(str(out) + ".manifest.json", json.dumps(manifest, indent=2) + "\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    return [int(v) for v in _floats(text)]


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("ROCARC_THREADS")
    return int(env) if env else 1


# -- shared flag groups ----------------------------------------------------

def _add_data_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--input", help="CSV file with a header row")
    g.add_argument("--label", default="label", help="label column name (default: label)")
    g.add_argument("--positive-label", help="label value of the positive class (default: the larger)")
    g.add_argument("--standardize", action="store_true", help="z-score features with pooled statistics")
    g.add_argument("--gen", choices=["gauss"], help="generate Gaussian data instead of reading --input")
    g.add_argument("--delta", type=float,
                   help="1-d shortcut: positives N(0,1), negatives N(delta,1)")
    g.add_argument("--mean", help="positive-class mean vector, comma-separated (negatives centred at 0)")
    g.add_argument("--std", default="1", help="std, scalar or comma-separated vector (both classes)")
    g.add_argument("--n", type=int, default=200, help="samples per class (default 200)")
    g.add_argument("--npos", type=int, help="positive sample count (overrides --n)")
    g.add_argument("--nneg", type=int, help="negative sample count (overrides --n)")
    p.add_argument("--seed", type=int, default=0, help="single source of randomness (default 0)")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--lambda", dest="lam", type=float, help="regularization weight (default n_min^-1/4)")
    bw = g.add_mutually_exclusive_group()
    bw.add_argument("--bandwidth", type=float, help="Gaussian kernel bandwidth")
    bw.add_argument("--median", action="store_true", help="median-heuristic bandwidth (default)")
    g.add_argument("--features", choices=["kernel", "linear"], default="kernel")
    g.add_argument("--cv", type=int, metavar="K", help="choose lambda and bandwidth by K-fold CV")
    g.add_argument("--lambda-grid", help="CV lambda grid, comma-separated")
    g.add_argument("--bandwidth-grid", help="CV bandwidth grid, comma-separated")
    g.add_argument("--grad-tol", type=float, default=1e-6)
    g.add_argument("--barrier-floor", type=float, default=1e-8)
    g.add_argument("--max-newton-iters", type=int, default=200)
    p.add_argument("--threads", type=int, help="worker processes (fallback: $ROCARC_THREADS, else 1)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def load_data(args) -> SampleSet:
    if args.input and args.gen:
        raise UsageError("give either --input or --gen, not both")
    if args.input:
        s = load_csv(args.input, args.label, args.positive_label)
    elif args.gen == "gauss":
        n_pos = args.npos if args.npos is not None else args.n
        n_neg = args.nneg if args.nneg is not None else args.n
        if args.mean is not None:
            mean = _floats(args.mean)
            std = _floats(args.std)
            std = std[0] if len(std) == 1 else tuple(std)
            pos, neg = GaussianSpec(tuple(mean), std), GaussianSpec(tuple([0.0] * len(mean)), std)
        else:
            delta = 2.0 if args.delta is None else args.delta
            pos, neg = GaussianSpec((0.0,)), GaussianSpec((delta,))
        s = gen_gaussian_pair(pos, neg, n_pos, n_neg, args.seed)
    else:
        raise UsageError("no data: pass --input FILE or --gen gauss")
    return s.standardized() if args.standardize else s


def solver_config(args, s: SampleSet) -> SolverConfig:
    cfg = SolverConfig(
        lam=args.lam,
        bandwidth=args.bandwidth if args.bandwidth is not None else "median",
        features=args.features,
        grad_tol=args.grad_tol,
        barrier_floor=args.barrier_floor,
        max_newton_iters=args.max_newton_iters,
    )
    if args.cv:
        if args.features != "kernel":
            raise UsageError("--cv tunes the kernel estimator; drop --features linear")
        lams, bws = default_cv_grids(s)
        if args.lambda_grid:
            lams = _floats(args.lambda_grid)
        if args.bandwidth_grid:
            bws = _floats(args.bandwidth_grid)
        cfg = cross_validate(s, lams, bws, args.cv, args.seed, base=cfg)
    return cfg.resolve(s)


# -- subcommands -----------------------------------------------------------

def cmd_fit(args) -> int:
    m = Manifest("fit", args)
    with m.stage("load"):
        s = load_data(args)
    with m.stage("configure"):
        cfg = solver_config(args, s)
    with m.stage("fit"):
        if args.two_step:
            ts = two_step_fit(s, cfg)
            payload = {"model_type": "two_step", "model": ts.to_dict()}
            converged = ts.diagnostics["step1"]["converged"] and ts.diagnostics["step2"]["converged"]
        else:
            model, diag = fit_atan_ratio(s, cfg)
            payload = {"model_type": "atan_ratio", "model": model.to_dict(), "diagnostics": diag.to_dict()}
            converged = diag.converged
    payload["sample"] = s.metadata()
    payload["manifest"] = m.to_dict(cfg.to_dict())
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    if not converged:
        log.error("solver did not converge")
        return EXIT_NONCONVERGED
    return EXIT_OK


def _load_model_file(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("model_type") == "two_step":
        return model_from_dict(d["model"]["step1_model"])
    return model_from_dict(d.get("model", d))


def cmd_divergence(args) -> int:
    m = Manifest("divergence", args)
    with m.stage("load"):
        s = load_data(args)
    if args.model:
        with m.stage("evaluate"):
            model = _load_model_file(args.model)
            arc = arc_length_estimate(model, s)
            lower, upper = tv_bounds(arc)
            report = {
                "arc_length_hat": arc, "roc_divergence_hat": arc - 2 ** 0.5,
                "tv_lower": lower, "tv_upper": upper, "auc_lower_bound": None,
                "diagnostics": None, "config_echo": {"model": args.model},
                "in_range": 2 ** 0.5 <= arc <= 2.0, "holdout": None, "sample": s.metadata(),
            }
        converged = True
    else:
        with m.stage("configure"):
            cfg = solver_config(args, s)
        with m.stage("fit"):
            rep = estimate_divergence_pipeline(s, cfg, holdout=args.holdout, seed=args.seed,
                                               with_auc=args.auc)
        report = rep.to_dict()
        converged = rep.diagnostics.converged
    report["manifest"] = m.to_dict()
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK if converged else EXIT_NONCONVERGED


def cmd_figure_bounds(args) -> int:
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    if not 0 <= args.delta_min < args.delta_max:
        raise UsageError("need 0 <= delta-min < delta-max")
    m = Manifest("figure-bounds", args)
    with m.stage("sweep"):
        deltas = np.linspace(args.delta_min, args.delta_max, args.steps)
        rows = figure_bounds_rows(deltas, args.rescale)
    _emit_csv(rows_to_csv(rows), args.out, m.to_dict())
    return EXIT_OK


def cmd_benchmark(args) -> int:
    m = Manifest("benchmark", args)
    gens = {
        "mean_shift": lambda: BenchmarkConfig.mean_shift(args.dim, args.shift),
        "heteroscedastic": lambda: BenchmarkConfig.heteroscedastic(args.dim),
        "null": lambda: BenchmarkConfig.null(args.dim),
    }
    gen = gens[args.config]()
    with m.stage("benchmark"):
        res = benchmark_imbalanced(gen, _ints(args.npos_grid), args.nneg, args.repeats, args.seed,
                                   n_test=args.n_test, n_jobs=_threads(args))
    manifest = m.to_dict({"generator": gen.to_dict()})
    summary = {"summary": res.summary(), "generator": gen.to_dict(), "manifest": manifest}
    if args.out:
        base = Path(args.out)
        write_atomic(base.with_suffix(".csv"), res.to_csv())
        write_atomic(base.with_suffix(".csv.manifest.json"), json.dumps(manifest, indent=2) + "\n")
        write_atomic(base.with_suffix(".json"), json.dumps(summary, indent=2) + "\n")
    else:
        sys.stdout.write(res.to_csv())
        sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def _read_scores(path):
    s = load_csv(path, "label")
    if s.dim != 1:
        raise DataError("--scores file must have exactly one score column besides 'label'")
    return s.positives[:, 0], s.negatives[:, 0]


def cmd_roc(args) -> int:
    m = Manifest("roc", args)
    with m.stage("scores"):
        if args.scores:
            sp, sn = _read_scores(args.scores)
        else:
            s = load_data(args)
            if args.model:
                model = _load_model_file(args.model)
            else:
                model, _ = fit_atan_ratio(s, SolverConfig(
                    lam=args.lam, bandwidth=args.bandwidth if args.bandwidth else "median"))
            sp, sn = model.decision(s.positives), model.decision(s.negatives)
    with m.stage("curve"):
        if args.surface:
            text = mixture_surface_grid(sp, sn, args.alphas, args.taus).to_csv()
        else:
            text = empirical_roc(sp, sn).to_csv()
    _emit_csv(text, args.out, m.to_dict())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rocarc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rocarc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit the arctangent likelihood ratio")
    _add_data_flags(f)
    _add_solver_flags(f)
    f.add_argument("--two-step", action="store_true", help="run the two-step AUC procedure")
    f.set_defaults(func=cmd_fit)

    d = sub.add_parser("divergence", help="arc length, ROC divergence and TV bounds")
    _add_data_flags(d)
    _add_solver_flags(d)
    d.add_argument("--model", help="evaluate a fitted model JSON instead of fitting")
    d.add_argument("--holdout", type=float, help="evaluate on a held-out fraction F of each class")
    d.add_argument("--auc", action="store_true", help="also report the two-step AUC* lower bound")
    d.set_defaults(func=cmd_divergence)

    b = sub.add_parser("figure-bounds", help="Gaussian divergence / TV-bound sweep as CSV")
    b.add_argument("--delta-min", type=float, default=0.0)
    b.add_argument("--delta-max", type=float, default=5.0)
    b.add_argument("--steps", type=int, default=101)
    b.add_argument("--rescale", type=float, default=DEFAULT_RESCALE,
                   help="factor applied to roc_div_rescaled (default 1/(2-sqrt 2))")
    b.add_argument("--out")
    b.add_argument("-v", "--verbose", action="store_true")
    b.set_defaults(func=cmd_figure_bounds, seed=None)

    k = sub.add_parser("benchmark", help="imbalanced synthetic AUC benchmark")
    k.add_argument("--config", choices=["mean_shift", "heteroscedastic", "null"], default="mean_shift")
    k.add_argument("--dim", type=int, default=5)
    k.add_argument("--shift", type=float, default=0.5, help="per-coordinate mean shift (mean_shift)")
    k.add_argument("--npos-grid", default="24,48,72,96,120")
    k.add_argument("--nneg", type=int, default=1000)
    k.add_argument("--repeats", type=int, default=20)
    k.add_argument("--n-test", type=int, default=10_000)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--threads", type=int)
    k.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json")
    k.add_argument("-v", "--verbose", action="store_true")
    k.set_defaults(func=cmd_benchmark)

    r = sub.add_parser("roc", help="empirical ROC vertices or mixture surface grid")
    _add_data_flags(r)
    r.add_argument("--scores", help="CSV with one score column and a 'label' column")
    r.add_argument("--model", help="model JSON used to score the data")
    r.add_argument("--lambda", dest="lam", type=float)
    r.add_argument("--bandwidth", type=float)
    r.add_argument("--surface", action="store_true")
    r.add_argument("--alphas", type=int, default=6)
    r.add_argument("--taus", type=int, default=50)
    r.add_argument("--out")
    r.add_argument("-v", "--verbose", action="store_true")
    r.set_defaults(func=cmd_roc)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad flags; 2 is reserved for non-convergence
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"rocarc: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (UsageError, DataError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"rocarc: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
