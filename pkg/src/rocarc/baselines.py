"""Linear AUC-maximization and logistic-regression baselines, and the imbalanced benchmark."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from .data import GaussianSpec, SampleSet, gen_gaussian_pair
from .estimator import SolverConfig
from .linear import LinearModel
from .rocgeom import auc_wmw
from .twostep import score, two_step_fit

log = logging.getLogger(__name__)

__all__ = [
    "LinearModel", "FitInfo", "pairwise_objective", "pairwise_objective_decomposed",
    "auc_max_pairwise", "logistic_regression", "benchmark_imbalanced",
]


@dataclass
class FitInfo:
    iterations: int
    grad_norm: float
    converged: bool
    separated: bool = False


def pairwise_objective(v: LinearModel, s: SampleSet) -> float:
    """Brute-force O(n+ n-) mean of L(t(x+), t(x-)) with L(a, b) = -(1 - (a - b))^2."""
    tp = s.positives @ v.weights
    tn = s.negatives @ v.weights
    diff = tp[:, None] - tn[None, :]
    return float(-np.mean((1.0 - diff) ** 2))


def _moments(s: SampleSet):
    mp, mn = s.positives.mean(axis=0), s.negatives.mean(axis=0)
    Sp = np.cov(s.positives, rowvar=False, bias=True).reshape(s.dim, s.dim)
    Sn = np.cov(s.negatives, rowvar=False, bias=True).reshape(s.dim, s.dim)
    return mp, mn, Sp, Sn


def pairwise_objective_decomposed(v: LinearModel, s: SampleSet) -> float:
    """1 + Var+<v,x> + Var-<v,x> + 2<v, mu- - mu+> + <v, mu- - mu+>^2 in O(n d).

    Variances use 1/n normalization, which makes this exactly the negated
    pairwise objective.  The intercept cancels in score differences.
    """
    w = v.weights
    tp = s.positives @ w
    tn = s.negatives @ w
    gap = tn.mean() - tp.mean()
    return float(1.0 + tp.var() + tn.var() + 2.0 * gap + gap * gap)


def auc_max_pairwise(s: SampleSet, grad_tol: float = 1e-6, max_iter: int = 100_000):
    """Maximize the squared-surrogate pairwise AUC objective over linear scores.

    Full-batch gradient ascent with step 1/L on the decomposed form; L is the
    largest eigenvalue of the (constant) Hessian.
    """
    if s.n_pos < 1 or s.n_neg < 1:
        raise ValueError("both classes must be nonempty")
    mp, mn, Sp, Sn = _moments(s)
    gap = mn - mp
    H = 2.0 * (Sp + Sn + np.outer(gap, gap))
    L = float(np.linalg.eigvalsh(H)[-1])
    if L <= 0:
        return LinearModel(np.zeros(s.dim), 0.0), FitInfo(0, 0.0, True)
    w = np.zeros(s.dim)
    for it in range(1, max_iter + 1):
        # gradient of the decomposed (minimized) form
        g = H @ w + 2.0 * gap
        gn = float(np.linalg.norm(g))
        if gn < grad_tol:
            return LinearModel(w, 0.0), FitInfo(it - 1, gn, True)
        w = w - g / L
    log.warning("pairwise AUC maximizer hit the iteration cap (grad norm %.3g)", gn)
    return LinearModel(w, 0.0), FitInfo(max_iter, gn, False)


def logistic_regression(s: SampleSet, grad_tol: float = 1e-6, max_iter: int = 100):
    """Unregularized logistic regression by damped Newton steps.

    Returns ``(model, info)``.  Perfectly separable data drive the weights to
    infinity; the fit then stops at the iteration cap with ``info.separated``.
    """
    if s.n_pos < 1 or s.n_neg < 1:
        raise ValueError("both classes must be nonempty")
    pooled = s.pooled()
    # a constant column duplicates the intercept and carries no ranking
    # information; it is dropped and gets weight zero
    keep = np.ptp(pooled, axis=0) > 0
    X = np.hstack([pooled[:, keep], np.ones((pooled.shape[0], 1))])
    y = np.r_[np.ones(s.n_pos), -np.ones(s.n_neg)]
    n = X.shape[0]
    theta = np.zeros(X.shape[1])

    def loss(th):
        return -float(np.mean(log_expit(y * (X @ th))))

    separated = False
    gn = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        m = y * (X @ theta)
        p = expit(-m)
        g = -(X.T @ (y * p)) / n
        gn = float(np.linalg.norm(g))
        if gn < grad_tol:
            break
        h = p * (1 - p)
        H = (X.T * h) @ X / n
        H[np.diag_indices_from(H)] += 1e-12
        step = -np.linalg.lstsq(H, g, rcond=None)[0]
        f0, t = loss(theta), 1.0
        while loss(theta + t * step) > f0 + 1e-4 * t * float(g @ step) and t > 1e-10:
            t *= 0.5
        theta = theta + t * step
        if np.all(y * (X @ theta) > 0) and loss(theta) < 1e-6:
            separated = True
            break
    if not separated and np.all(y * (X @ theta) > 0):
        separated = gn >= grad_tol
    weights = np.zeros(s.dim)
    weights[keep] = theta[:-1]
    return LinearModel(weights, theta[-1]), FitInfo(it, gn, gn < grad_tol and not separated, separated)


@dataclass(frozen=True)
class BenchmarkConfig:
    """A generator for the imbalanced benchmark: two diagonal Gaussians."""

    name: str
    spec_pos: GaussianSpec
    spec_neg: GaussianSpec

    @classmethod
    def mean_shift(cls, dim: int = 5, shift: float = 0.5) -> "BenchmarkConfig":
        return cls("mean_shift", GaussianSpec(tuple([shift] * dim), 1.0),
                   GaussianSpec(tuple([0.0] * dim), 1.0))

    @classmethod
    def heteroscedastic(cls, dim: int = 5) -> "BenchmarkConfig":
        # both classes are shifted along axes 0 and 1, but positives are spread
        # widely along axis 0 only: the AUC-optimal direction (S+ + S-)^-1 dmu
        # then differs from the majority-class direction S-^-1 dmu
        mean = [1.0, 1.0] + [0.0] * (dim - 2)
        std = [5.0] + [1.0] * (dim - 1)
        return cls("heteroscedastic", GaussianSpec(tuple(mean), tuple(std)),
                   GaussianSpec(tuple([0.0] * dim), 1.0))

    @classmethod
    def null(cls, dim: int = 5) -> "BenchmarkConfig":
        g = GaussianSpec(tuple([0.0] * dim), 1.0)
        return cls("null", g, g)

    def to_dict(self) -> dict:
        return {"name": self.name,
                "pos": {"mean": list(self.spec_pos.mean), "std": self.spec_pos.std},
                "neg": {"mean": list(self.spec_neg.mean), "std": self.spec_neg.std}}


METHODS = ("two_step", "auc_max", "logistic")
TWO_STEP_CONFIG = SolverConfig(lam=0.0, features="linear")


@dataclass
class BenchmarkResult:
    records: list[dict] = field(default_factory=list)

    def summary(self) -> list[dict]:
        out = []
        keys = sorted({(r["method"], r["n_pos"]) for r in self.records},
                      key=lambda k: (METHODS.index(k[0]), k[1]))
        for method, n_pos in keys:
            aucs = np.array([r["auc"] for r in self.records
                             if r["method"] == method and r["n_pos"] == n_pos])
            out.append({
                "method": method,
                "n_pos": n_pos,
                "mean_auc": float(aucs.mean()),
                "stderr": float(aucs.std(ddof=1) / math.sqrt(aucs.size)),
                "repeats": int(aucs.size),
            })
        return out

    def mean_auc(self, method: str, n_pos: int | None = None) -> float:
        vals = [r["auc"] for r in self.records
                if r["method"] == method and (n_pos is None or r["n_pos"] == n_pos)]
        return float(np.mean(vals))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "n_pos", "repeat", "auc"])
        for r in self.records:
            w.writerow([r["method"], r["n_pos"], r["repeat"], repr(r["auc"])])
        return buf.getvalue()


def _run_cell(gen: BenchmarkConfig, n_pos: int, n_neg: int, repeat: int, seed: int,
              test: SampleSet, two_step_cfg: SolverConfig) -> list[dict]:
    cell_seed = np.random.SeedSequence([seed, n_pos, repeat]).generate_state(1)[0]
    train = gen_gaussian_pair(gen.spec_pos, gen.spec_neg, n_pos, n_neg, int(cell_seed))
    out = []
    ts = two_step_fit(train, two_step_cfg)
    out.append(("two_step", auc_wmw(score(ts, test.positives), score(ts, test.negatives))))
    pw, _ = auc_max_pairwise(train)
    out.append(("auc_max", auc_wmw(pw.decision(test.positives), pw.decision(test.negatives))))
    lr, _ = logistic_regression(train)
    out.append(("logistic", auc_wmw(lr.decision(test.positives), lr.decision(test.negatives))))
    return [{"method": m, "n_pos": n_pos, "repeat": repeat, "auc": a} for m, a in out]


def benchmark_imbalanced(gen: BenchmarkConfig, n_pos_grid, n_neg: int, repeats: int, seed: int,
                         n_test: int = 10_000, two_step_cfg: SolverConfig = TWO_STEP_CONFIG,
                         n_jobs: int = 1) -> BenchmarkResult:
    """Test AUC of the two-step score, the pairwise AUC maximizer and logistic regression.

    Every (n_pos, repeat) cell draws its own training set from a seed derived
    from ``(seed, n_pos, repeat)``; all cells share one test set of
    ``n_test`` points per class.
    """
    if repeats < 2:
        raise ValueError("repeats must be at least 2")
    test_seed = int(np.random.SeedSequence([seed, 0xC0FFEE]).generate_state(1)[0])
    test = gen_gaussian_pair(gen.spec_pos, gen.spec_neg, n_test, n_test, test_seed)
    cells = [(int(n_pos), r) for n_pos in n_pos_grid for r in range(repeats)]
    if n_jobs == 1:
        chunks = [_run_cell(gen, n, n_neg, r, seed, test, two_step_cfg) for n, r in cells]
    else:
        from joblib import Parallel, delayed

        chunks = Parallel(n_jobs=n_jobs)(
            delayed(_run_cell)(gen, n, n_neg, r, seed, test, two_step_cfg) for n, r in cells
        )
    return BenchmarkResult([rec for chunk in chunks for rec in chunk])
