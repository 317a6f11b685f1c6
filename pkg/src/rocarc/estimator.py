"""Arctangent likelihood-ratio estimation.

The kernel estimator solves

    min_alpha  -1/n+ sum_i w_i sin v(x_i+) - 1/n- sum_j w_j cos v(x_j-) + lam/2 alpha' K alpha
    s.t.       0 <= v(x_k) <= pi/2 for every training point,

with v = K alpha, using a log-barrier interior point method with damped
Newton inner steps.  The same solver handles an affine score v(x) = <w, x> + b
(``features="linear"``), and :func:`fit_log_ratio` fits the unconstrained
log-ratio parameterization by multi-start local ascent.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import linalg, optimize

from .data import SampleSet, kfold_indices
from .kernel import KernelParams, KernelScoreModel, gram, median_heuristic
from .linear import LinearModel

log = logging.getLogger(__name__)

HALF_PI = math.pi / 2
ACTIVE_TOL = 1e-5


class SolverError(RuntimeError):
    """Raised when the barrier solver cannot start or cannot make progress."""


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters and solver controls.

    ``lam=None`` selects lam = n_min**(-1/4); ``bandwidth="median"`` selects
    the median heuristic on the training sample.  ``rank_tol`` is the relative
    eigenvalue cutoff used when factorizing the Gram matrix.
    """

    lam: float | None = None
    bandwidth: float | str = "median"
    barrier_init: float = 1.0
    barrier_decay: float = 0.5
    grad_tol: float = 1e-6
    barrier_floor: float = 1e-8
    max_newton_iters: int = 200
    eps_margin: float = 1e-6
    features: str = "kernel"
    rank_tol: float = 1e-12

    def __post_init__(self):
        if self.lam is not None and not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median":
                raise ValueError(f"bandwidth must be a positive number or 'median', got {self.bandwidth!r}")
        elif not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        for name in ("barrier_init", "grad_tol", "barrier_floor", "eps_margin", "rank_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.barrier_decay < 1:
            raise ValueError("barrier_decay must lie in (0, 1)")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be at least 1")
        if not self.eps_margin < math.pi / 4:
            raise ValueError("eps_margin must be below pi/4")
        if self.features not in ("kernel", "linear"):
            raise ValueError(f"features must be 'kernel' or 'linear', got {self.features!r}")

    def resolve(self, s: SampleSet) -> "SolverConfig":
        """Fill in data-dependent defaults (lam and median bandwidth)."""
        lam = default_lambda(s) if self.lam is None else self.lam
        bw = self.bandwidth
        if self.features == "kernel" and bw == "median":
            bw = median_heuristic(s)
        return replace(self, lam=float(lam), bandwidth=bw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**d)


@dataclass
class FitDiagnostics:
    final_objective: float
    grad_norm: float
    n_active_constraints: int
    iterations: int
    feasible: bool
    converged: bool = True
    stage_objectives: list[float] = field(default_factory=list)
    rank: int | None = None
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def default_lambda(s: SampleSet) -> float:
    """lam = n_min^(-1/4)."""
    return min(s.n_pos, s.n_neg) ** -0.25


class _Design:
    """Linear map theta -> training scores (Phi) plus a diagonal penalty."""

    def __init__(self, Phi, penalty, theta0, to_model, rank=None):
        self.Phi = Phi
        self.penalty = penalty
        self.theta0 = theta0
        self.to_model = to_model
        self.rank = rank


def _kernel_design(X: np.ndarray, bandwidth: float, rank_tol: float) -> _Design:
    params = KernelParams(float(bandwidth))
    K = gram(X, X, params)
    s, U = linalg.eigh(K)
    keep = s > rank_tol * s[-1]
    s, U = s[keep], U[:, keep]
    root = np.sqrt(s)
    Phi = U * root
    # least-squares version of (K + jitter) alpha0 = pi/4 * 1 in these coordinates
    theta0 = (U.T @ np.full(X.shape[0], math.pi / 4)) / root

    def to_model(theta):
        return KernelScoreModel(X, U @ (theta / root), params)

    return _Design(Phi, np.ones(Phi.shape[1]), theta0, to_model, rank=int(keep.sum()))


def _linear_design(X: np.ndarray) -> _Design:
    n, d = X.shape
    Phi = np.hstack([X, np.ones((n, 1))])
    penalty = np.r_[np.ones(d), 0.0]
    theta0 = np.r_[np.zeros(d), math.pi / 4]

    def to_model(theta):
        return LinearModel(theta[:d], theta[d], (0.0, HALF_PI))

    return _Design(Phi, penalty, theta0, to_model, rank=d + 1)


def _build_design(X: np.ndarray, cfg: SolverConfig) -> _Design:
    if cfg.features == "linear":
        return _linear_design(X)
    return _kernel_design(X, cfg.bandwidth, cfg.rank_tol)


def _row_weights(s: SampleSet, weights):
    if weights is None:
        w_pos, w_neg = np.ones(s.n_pos), np.ones(s.n_neg)
    else:
        w_pos, w_neg = (np.asarray(w, dtype=np.float64).ravel() for w in weights)
        if w_pos.shape[0] != s.n_pos or w_neg.shape[0] != s.n_neg:
            raise ValueError(
                f"weight lengths ({w_pos.shape[0]}, {w_neg.shape[0]}) do not match "
                f"class sizes ({s.n_pos}, {s.n_neg})"
            )
        if not (np.all(np.isfinite(w_pos)) and np.all(np.isfinite(w_neg))):
            raise ValueError("weights must be finite")
        if np.any(w_pos < 0) or np.any(w_neg < 0):
            raise ValueError("weights must be nonnegative")
    a = np.concatenate([w_pos / s.n_pos, w_neg / s.n_neg])
    pos = np.zeros(a.shape[0], dtype=bool)
    pos[: s.n_pos] = True
    return a, pos


def _data_terms(v, a, pos):
    """Data loss and its first two derivatives with respect to each score."""
    sv, cv = np.sin(v), np.cos(v)
    f = -np.sum(a[pos] * sv[pos]) - np.sum(a[~pos] * cv[~pos])
    d1 = np.where(pos, -a * cv, a * sv)
    d2 = np.where(pos, a * sv, a * cv)
    return f, d1, d2


def sample_value(v_pos, v_neg, w_pos=None, w_neg=None) -> float:
    """(1/n+) sum w sin v(x+) + (1/n-) sum w cos v(x-)."""
    v_pos, v_neg = np.asarray(v_pos, dtype=float), np.asarray(v_neg, dtype=float)
    sp, cn = np.sin(v_pos), np.cos(v_neg)
    if w_pos is not None:
        sp = sp * w_pos
    if w_neg is not None:
        cn = cn * w_neg
    return float(sp.mean() + cn.mean())


def _solve(design: _Design, a, pos, lam: float, cfg: SolverConfig):
    Phi, pen = design.Phi, design.penalty
    lo, hi = cfg.eps_margin, HALF_PI - cfg.eps_margin
    theta = design.theta0.copy()
    v = Phi @ theta
    if not (np.all(v > lo) and np.all(v < hi)):
        worst = float(np.max(np.abs(v - math.pi / 4)))
        raise SolverError(
            "Gram factorization failure at feasible initialization "
            f"(max deviation from box center {worst:.3g}); try a larger bandwidth or rank_tol"
        )

    def total(theta, v, mu):
        sl, su = v - lo, hi - v
        if np.any(sl <= 0) or np.any(su <= 0):
            return math.inf
        f, _, _ = _data_terms(v, a, pos)
        return f + 0.5 * lam * np.dot(pen * theta, theta) - mu * (np.log(sl).sum() + np.log(su).sum())

    mu = cfg.barrier_init
    mus = [mu]
    while mu > cfg.barrier_floor:
        mu *= cfg.barrier_decay
        mus.append(mu)

    iterations = 0
    stage_objectives = []
    converged = True
    gnorm = math.inf
    for mu in mus:
        stage_ok = False
        for _ in range(cfg.max_newton_iters):
            sl, su = v - lo, hi - v
            _, d1, d2 = _data_terms(v, a, pos)
            g = Phi.T @ (d1 + mu * (1.0 / su - 1.0 / sl)) + lam * pen * theta
            gnorm = float(np.linalg.norm(g))
            if gnorm <= cfg.grad_tol:
                stage_ok = True
                break
            h = d2 + mu * (1.0 / sl**2 + 1.0 / su**2)
            H = (Phi.T * h) @ Phi
            H[np.diag_indices_from(H)] += lam * pen
            try:
                step = -linalg.cho_solve(linalg.cho_factor(H, check_finite=False), g, check_finite=False)
            except linalg.LinAlgError:
                step = -linalg.lstsq(H, g)[0]
            decrement = -float(g @ step)
            if decrement < 1e-24:
                # Newton decrement at rounding level: the stage is solved as
                # accurately as double precision allows
                stage_ok = True
                break
            dv = Phi @ step
            t = 1.0
            neg, posd = dv < 0, dv > 0
            if np.any(neg):
                t = min(t, 0.99 * float(np.min(sl[neg] / -dv[neg])))
            if np.any(posd):
                t = min(t, 0.99 * float(np.min(su[posd] / dv[posd])))
            F0 = total(theta, v, mu)
            slack = 1e-13 * max(1.0, abs(F0))
            while True:
                cand = theta + t * step
                vc = Phi @ cand
                if total(cand, vc, mu) <= F0 - 1e-4 * t * decrement + slack:
                    break
                t *= 0.5
                if t < 1e-14:
                    break
            theta, v = cand, vc
            iterations += 1
        converged = converged and stage_ok
        f, _, _ = _data_terms(v, a, pos)
        stage_objectives.append(float(f + 0.5 * lam * np.dot(pen * theta, theta)))

    f, _, _ = _data_terms(v, a, pos)
    final = float(f + 0.5 * lam * np.dot(pen * theta, theta))
    n_active = int(np.sum((v - lo < ACTIVE_TOL) | (hi - v < ACTIVE_TOL)))
    feasible = bool(np.all(v >= -1e-9) and np.all(v <= HALF_PI + 1e-9))
    if not converged:
        log.warning("barrier solver stopped before reaching grad_tol (grad norm %.3g)", gnorm)
    diag = FitDiagnostics(
        final_objective=final,
        grad_norm=gnorm,
        n_active_constraints=n_active,
        iterations=iterations,
        feasible=feasible,
        converged=converged,
        stage_objectives=stage_objectives,
        rank=design.rank,
    )
    return theta, diag


def _zero_model(X: np.ndarray, cfg: SolverConfig):
    if cfg.features == "linear":
        return LinearModel(np.zeros(X.shape[1]), 0.0, (0.0, HALF_PI))
    return KernelScoreModel(X, np.zeros(X.shape[0]), KernelParams(float(cfg.bandwidth)))


def fit_atan_ratio(s: SampleSet, cfg: SolverConfig | None = None, weights=None,
                   design: _Design | None = None):
    """Fit the (optionally weighted) arctangent-ratio objective.

    Parameters
    ----------
    s : SampleSet
        Training sample; the support order is positives then negatives.
    cfg : SolverConfig
        Hyperparameters; ``None`` fields are resolved from ``s``.
    weights : (w_pos, w_neg), optional
        Nonnegative per-sample weights.  All-zero weights return the zero
        model, which is the exact minimizer of the pure regularizer.

    Returns
    -------
    model, FitDiagnostics
    """
    if s.n_pos < 1 or s.n_neg < 1:
        raise ValueError("both classes must be nonempty")
    cfg = (cfg or SolverConfig()).resolve(s)
    a, pos = _row_weights(s, weights)
    X = s.pooled()
    if not np.any(a > 0):
        diag = FitDiagnostics(0.0, 0.0, X.shape[0], 0, True, True, [0.0], degenerate=True)
        return _zero_model(X, cfg), diag
    if design is None:
        design = _build_design(X, cfg)
    theta, diag = _solve(design, a, pos, cfg.lam, cfg)
    return design.to_model(theta), diag


def objective_and_gradient(alpha, s: SampleSet, cfg: SolverConfig | None = None, weights=None):
    """Kernel objective (no barrier) and its exact gradient in alpha.

    grad = K g + lam K alpha, where g_i = -(w_i/n+) cos v_i on positive rows
    and g_j = (w_j/n-) sin v_j on negative rows.
    """
    cfg = (cfg or SolverConfig()).resolve(s)
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    n = s.n_pos + s.n_neg
    if alpha.shape[0] != n:
        raise ValueError(f"alpha has {alpha.shape[0]} entries, expected {n}")
    a, pos = _row_weights(s, weights)
    X = s.pooled()
    K = gram(X, X, KernelParams(float(cfg.bandwidth)))
    Ka = K @ alpha
    f, d1, _ = _data_terms(Ka, a, pos)
    obj = f + 0.5 * cfg.lam * float(alpha @ Ka)
    grad = K.T @ d1 + cfg.lam * Ka
    return float(obj), grad


def _stratified_folds(s: SampleSet, k: int, seed: int):
    rng = np.random.default_rng(seed)
    pf = kfold_indices(s.n_pos, k, rng)
    nf = kfold_indices(s.n_neg, k, rng)
    folds = []
    for i in range(k):
        ptr = np.setdiff1d(np.arange(s.n_pos), pf[i])
        ntr = np.setdiff1d(np.arange(s.n_neg), nf[i])
        train = SampleSet(s.positives[ptr], s.negatives[ntr])
        val = SampleSet(s.positives[pf[i]], s.negatives[nf[i]])
        folds.append((train, val))
    return folds


def cv_scores(s: SampleSet, lambda_grid, bandwidth_grid, k_folds: int = 5, seed: int = 0,
              base: SolverConfig | None = None) -> dict:
    """Mean held-out variational value for every (lam, bandwidth) grid cell."""
    lambda_grid, bandwidth_grid = list(lambda_grid), list(bandwidth_grid)
    if not lambda_grid or not bandwidth_grid:
        raise ValueError("lambda_grid and bandwidth_grid must be nonempty")
    if k_folds < 2:
        raise ValueError("k_folds must be at least 2")
    if min(s.n_pos, s.n_neg) < k_folds:
        raise ValueError(f"each class needs at least k_folds={k_folds} samples")
    base = base or SolverConfig()
    folds = _stratified_folds(s, k_folds, seed)
    scores = {}
    for bw in bandwidth_grid:
        per_fold = []
        for train, val in folds:
            cfg_bw = replace(base, bandwidth=bw, lam=0.0).resolve(train)
            design = _build_design(train.pooled(), cfg_bw)
            per_fold.append((train, val, design))
        for lam in lambda_grid:
            vals = []
            for train, val, design in per_fold:
                cfg = replace(base, bandwidth=bw, lam=float(lam))
                model, _ = fit_atan_ratio(train, cfg, design=design)
                vals.append(sample_value(model.decision(val.positives), model.decision(val.negatives)))
            scores[(float(lam), bw)] = float(np.mean(vals))
    return scores


def cross_validate(s: SampleSet, lambda_grid, bandwidth_grid, k_folds: int = 5, seed: int = 0,
                   base: SolverConfig | None = None) -> SolverConfig:
    """Pick (lam, bandwidth) maximizing the mean held-out variational value.

    Ties go to the larger lam, then the larger bandwidth.
    """
    scores = cv_scores(s, lambda_grid, bandwidth_grid, k_folds, seed, base)

    def key(item):
        (lam, bw), score = item
        return score, lam, (bw if not isinstance(bw, str) else -math.inf)

    (lam, bw), _ = max(scores.items(), key=key)
    return replace(base or SolverConfig(), lam=lam, bandwidth=bw)


def default_cv_grids(s: SampleSet) -> tuple[list[float], list[float]]:
    """Grids centred on the n^(-1/4) schedule and the median heuristic."""
    lam0 = default_lambda(s)
    med = median_heuristic(s)
    lams = [lam0 * f for f in (0.001, 0.01, 0.1)]
    bws = [med * f for f in (0.5, 1.0, 2.0)]
    return lams, bws


def _atan_exp(z):
    # atan(exp(z)) without overflow
    return math.pi / 4 + np.arctan(np.tanh(0.5 * z))


def fit_log_ratio(s: SampleSet, cfg: SolverConfig | None = None, n_restarts: int = 8,
                  init_scale: float = 0.1, seed: int = 0):
    """Fit log p+/p- ~ <v, x> + v0 by maximizing the unconstrained sine/cosine objective.

    The objective is non-convex, so L-BFGS is started from ``n_restarts``
    points drawn from N(0, init_scale^2) and the best local optimum is kept.
    """
    if s.n_pos < 1 or s.n_neg < 1:
        raise ValueError("both classes must be nonempty")
    Xp = np.hstack([s.positives, np.ones((s.n_pos, 1))])
    Xn = np.hstack([s.negatives, np.ones((s.n_neg, 1))])
    tol = (cfg or SolverConfig()).grad_tol

    def negobj(theta):
        vp, vn = _atan_exp(Xp @ theta), _atan_exp(Xn @ theta)
        sp, cp = np.sin(vp), np.cos(vp)
        sn, cn = np.sin(vn), np.cos(vn)
        val = sp.mean() + cn.mean()
        grad = Xp.T @ (sp * cp**2) / s.n_pos - Xn.T @ (cn * sn**2) / s.n_neg
        return -val, -grad

    rng = np.random.default_rng(seed)
    best, n_ok = None, 0
    for _ in range(n_restarts):
        x0 = init_scale * rng.standard_normal(Xp.shape[1])
        res = optimize.minimize(negobj, x0, jac=True, method="L-BFGS-B",
                                options={"gtol": tol, "maxiter": 2000})
        gn = float(np.linalg.norm(res.jac))
        ok = res.success or gn <= 10 * tol
        n_ok += ok
        if ok and (best is None or res.fun < best[0].fun):
            best = (res, gn)
    if best is None:
        raise SolverError("log-ratio fit failed to converge from every start")
    res, gn = best
    d = s.dim
    model = LinearModel(res.x[:d], res.x[d])
    diag = FitDiagnostics(float(-res.fun), gn, 0, int(res.nit), True, True, [float(-res.fun)])
    return model, diag
