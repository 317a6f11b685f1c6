"""Arc-length and ROC-divergence estimates, total-variation bounds, Gaussian oracles."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import ndtr, xlogy

from .data import GaussianSpec, SampleSet, split
from .estimator import FitDiagnostics, SolverConfig, fit_atan_ratio, sample_value

SQRT2 = math.sqrt(2.0)
DEFAULT_RESCALE = 1.0 / (2.0 - SQRT2)
SIMPSON_INTERVALS = 100_000
FIGURE_COLUMNS = (
    "delta", "tv", "js", "w1", "roc_div", "roc_div_rescaled",
    "prop2_lower", "prop2_upper", "pinsker_ub", "bh_ub", "lecam_ub",
)


class ArcRangeWarning(UserWarning):
    """An arc length outside [sqrt(2), 2], which no pair of distributions can produce."""


@dataclass
class DivergenceReport:
    arc_length_hat: float
    roc_divergence_hat: float
    tv_lower: float
    tv_upper: float
    auc_lower_bound: float | None = None
    diagnostics: FitDiagnostics | None = None
    config_echo: dict = field(default_factory=dict)
    in_range: bool = True
    holdout: float | None = None
    sample: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["diagnostics"] = None if self.diagnostics is None else self.diagnostics.to_dict()
        return d


def arc_length_estimate(model, eval_set: SampleSet) -> float:
    """Plug-in arc length: mean sin v(x+) + mean cos v(x-) with clipped scores."""
    if eval_set.n_pos < 1 or eval_set.n_neg < 1:
        raise ValueError("both classes of eval_set must be nonempty")
    if eval_set.dim != model.dim:
        raise ValueError(f"dimension mismatch: model has {model.dim}, data has {eval_set.dim}")
    return sample_value(model.decision(eval_set.positives, clip=True),
                        model.decision(eval_set.negatives, clip=True))


def _gauss_pdf(x, mu, sd):
    z = (x - mu) / sd
    return np.exp(-0.5 * z * z) / (sd * math.sqrt(2 * math.pi))


def _grid_1d(p_pos: GaussianSpec, p_neg: GaussianSpec, intervals: int):
    if p_pos.dim != 1 or p_neg.dim != 1:
        raise ValueError("quadrature oracle supports 1-d Gaussians only")
    if intervals % 2:
        raise ValueError("Simpson's rule needs an even number of intervals")
    mp, mn = p_pos.mean[0], p_neg.mean[0]
    sp, sn = float(p_pos.std_vector()[0]), float(p_neg.std_vector()[0])
    span = 10.0 * max(sp, sn)
    x = np.linspace(min(mp, mn) - span, max(mp, mn) + span, intervals + 1)
    return x, _gauss_pdf(x, mp, sp), _gauss_pdf(x, mn, sn)


def arc_length_quadrature(p_pos: GaussianSpec, p_neg: GaussianSpec,
                          intervals: int = SIMPSON_INTERVALS) -> float:
    """Integral of sqrt(p+(x)^2 + p-(x)^2) by composite Simpson on mu +/- 10 sd."""
    x, fp, fn = _grid_1d(p_pos, p_neg, intervals)
    return float(integrate.simpson(np.hypot(fp, fn), x=x))


def js_divergence_quadrature(p_pos: GaussianSpec, p_neg: GaussianSpec,
                             intervals: int = SIMPSON_INTERVALS) -> float:
    """Jensen-Shannon divergence (natural log) by composite Simpson."""
    x, fp, fn = _grid_1d(p_pos, p_neg, intervals)
    m = 0.5 * (fp + fn)
    # xlogy(0, 0) = 0 takes care of underflowed tails
    integrand = 0.5 * (xlogy(fp, fp) - xlogy(fp, m)) + 0.5 * (xlogy(fn, fn) - xlogy(fn, m))
    return float(max(integrate.simpson(integrand, x=x), 0.0))


def _lower_objective(a, arc):
    # 2*sqrt(1-a^2) rewritten as 2 - 2a^2/(1+sqrt(1-a^2)) to avoid cancellation
    a = np.asarray(a, dtype=float)
    num = (arc - 2.0) + 2.0 * a * a / (1.0 + np.sqrt(1.0 - a * a))
    return (2.0 / math.pi) * (num / a + np.arccos(a) - np.arcsin(a))


def tv_lower_bound(arc_length: float, grid_points: int = 10_000) -> float:
    """max over a in (0, 1] of (2/pi)[(arc - 2 sqrt(1-a^2))/a + arccos a - arcsin a]."""
    if math.isnan(arc_length):
        raise ValueError("arc_length is NaN")
    a = np.linspace(1.0 / grid_points, 1.0, grid_points)
    vals = _lower_objective(a, arc_length)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = a[max(k - 1, 0)], a[min(k + 1, grid_points - 1)]
    if k == 0:
        lo = 0.0
    res = optimize.minimize_scalar(lambda t: -float(_lower_objective(t, arc_length)),
                                   bracket=None, bounds=(max(lo, 1e-300), hi), method="bounded",
                                   options={"xatol": 1e-12})
    best = max(best, -float(res.fun))
    if arc_length >= 2.0:
        # a -> 0+ limit: (arc - 2)/a diverges to +inf if arc > 2, else the
        # bracket tends to (2/pi)(pi/2) = 1
        best = max(best, 1.0) if arc_length == 2.0 else math.inf
    return best


def tv_bounds(arc_length: float) -> tuple[float, float]:
    """Lower and upper total-variation bounds implied by the optimal-ROC arc length."""
    if math.isnan(arc_length):
        raise ValueError("arc_length is NaN")
    if not (SQRT2 - 1e-12 <= arc_length <= 2.0 + 1e-12):
        warnings.warn(f"arc length {arc_length:.6g} outside [sqrt(2), 2]", ArcRangeWarning, stacklevel=2)
    return tv_lower_bound(arc_length), arc_length - 1.0


@dataclass(frozen=True)
class GaussianDivergences:
    delta: float
    tv: float
    js: float
    w1: float
    kl: float
    pinsker_ub: float
    bh_ub: float
    roc_div: float
    arc: float

    def to_dict(self) -> dict:
        return asdict(self)


def gaussian_divergences(delta: float) -> GaussianDivergences:
    """Closed forms and quadratures for N(0, 1) against N(delta, 1)."""
    if not delta >= 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    p, q = GaussianSpec((0.0,)), GaussianSpec((float(delta),))
    kl = delta * delta / 2
    arc = arc_length_quadrature(p, q)
    return GaussianDivergences(
        delta=float(delta),
        tv=float(2 * ndtr(delta / 2) - 1),
        js=js_divergence_quadrature(p, q) if delta > 0 else 0.0,
        w1=float(delta),
        kl=kl,
        pinsker_ub=math.sqrt(kl / 2),
        bh_ub=math.sqrt(-math.expm1(-kl)),
        roc_div=arc - SQRT2 if delta > 0 else 0.0,
        arc=arc,
    )


def figure_bounds_rows(deltas, rescale: float = DEFAULT_RESCALE) -> list[dict]:
    """One row per delta with divergences and TV bounds; ``lecam_ub`` is left blank."""
    rows = []
    for d in deltas:
        g = gaussian_divergences(float(d))
        lower, upper = tv_bounds(g.arc)
        rows.append({
            "delta": g.delta, "tv": g.tv, "js": g.js, "w1": g.w1,
            "roc_div": g.roc_div, "roc_div_rescaled": g.roc_div * rescale,
            "prop2_lower": lower, "prop2_upper": upper,
            "pinsker_ub": g.pinsker_ub, "bh_ub": g.bh_ub, "lecam_ub": "",
        })
    return rows


def rows_to_csv(rows, columns=FIGURE_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def estimate_divergence_pipeline(s: SampleSet, cfg: SolverConfig | None = None,
                                 holdout: float | None = None, seed: int = 0,
                                 with_auc: bool = False) -> DivergenceReport:
    """Fit the arctangent ratio and report arc length, divergence and TV bounds.

    With ``holdout`` the model is fit on a stratified ``1 - holdout`` share and
    the arc length is evaluated on the rest; otherwise on the training sample.
    ``with_auc`` also runs the two-step procedure for the AUC lower bound.
    """
    cfg = cfg or SolverConfig()
    if holdout is not None:
        train, evalset = split(s, 1.0 - holdout, seed)
    else:
        train = evalset = s
    resolved = cfg.resolve(train)
    model, diag = fit_atan_ratio(train, resolved)
    arc = arc_length_estimate(model, evalset)
    in_range = SQRT2 - 1e-12 <= arc <= 2.0 + 1e-12
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ArcRangeWarning)
        lower, upper = tv_bounds(arc)
    auc = None
    if with_auc:
        from .twostep import two_step_fit

        auc = two_step_fit(train, resolved).auc_star_hat
    return DivergenceReport(
        arc_length_hat=arc,
        roc_divergence_hat=arc - SQRT2,
        tv_lower=lower,
        tv_upper=upper,
        auc_lower_bound=auc,
        diagnostics=diag,
        config_echo=resolved.to_dict(),
        in_range=in_range,
        holdout=holdout,
        sample=s.metadata(),
    )
