"""Empirical CDFs, ROC curves, AUC statistics and ROC-space geometry."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np


def _vector(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


@dataclass(frozen=True, eq=False)
class Ecdf:
    """Right-continuous empirical CDF: F(t) = #{values <= t} / n."""

    sorted_values: np.ndarray

    @classmethod
    def from_scores(cls, scores) -> "Ecdf":
        v = np.sort(_vector(scores, "scores"))
        v.setflags(write=False)
        return cls(v)

    @property
    def n(self) -> int:
        return self.sorted_values.shape[0]

    def __call__(self, t):
        counts = np.searchsorted(self.sorted_values, t, side="right")
        return counts / self.n

    def to_list(self) -> list[float]:
        return self.sorted_values.tolist()


def ecdf(scores) -> Ecdf:
    return Ecdf.from_scores(scores)


@dataclass(frozen=True, eq=False)
class RocCurve:
    """ROC vertices sorted by fpr ascending, from (0, 0) to (1, 1).

    ``thresholds[k]`` is the score threshold tau giving vertex k, with
    fpr = P(score_neg > tau) and tpr = P(score_pos > tau).
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        if not (self.fpr.shape == self.tpr.shape == self.thresholds.shape):
            raise ValueError("fpr, tpr and thresholds must have equal length")

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.fpr, self.tpr])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(self.thresholds, self.fpr, self.tpr):
            w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "fpr": self.fpr.tolist(),
            "tpr": self.tpr.tolist(),
            "thresholds": [float(t) if np.isfinite(t) else str(t) for t in self.thresholds],
        }


def empirical_roc(scores_pos, scores_neg) -> RocCurve:
    """Sweep thresholds over the pooled unique scores plus -inf and +inf."""
    sp = np.sort(_vector(scores_pos, "scores_pos"))
    sn = np.sort(_vector(scores_neg, "scores_neg"))
    taus = np.concatenate([[-np.inf], np.unique(np.concatenate([sp, sn])), [np.inf]])
    tpr = 1.0 - np.searchsorted(sp, taus, side="right") / sp.size
    fpr = 1.0 - np.searchsorted(sn, taus, side="right") / sn.size
    # thresholds ascend, rates descend; store in fpr-ascending order
    return RocCurve(fpr[::-1].copy(), tpr[::-1].copy(), taus[::-1].copy())


def auc_wmw(scores_pos, scores_neg, ties: str = "geq") -> float:
    """Wilcoxon-Mann-Whitney AUC in O(n log n).

    ``ties="geq"`` counts 1(s+ >= s-) (a tied pair scores 1), ``"strict"``
    counts 1(s+ > s-), and ``"half"`` gives tied pairs 1/2.
    """
    sp = _vector(scores_pos, "scores_pos")
    sn = np.sort(_vector(scores_neg, "scores_neg"))
    le = np.searchsorted(sn, sp, side="right").sum()
    lt = np.searchsorted(sn, sp, side="left").sum()
    if ties == "geq":
        wins = le
    elif ties == "strict":
        wins = lt
    elif ties == "half":
        wins = 0.5 * (le + lt)
    else:
        raise ValueError(f"unknown tie convention {ties!r}")
    return float(wins) / (sp.size * sn.size)


def auc_wmw_strict(scores_pos, scores_neg) -> float:
    return auc_wmw(scores_pos, scores_neg, ties="strict")


def polyline_arc_length(c: RocCurve) -> float:
    """Sum of segment lengths between consecutive vertices."""
    return float(np.hypot(np.diff(c.fpr), np.diff(c.tpr)).sum())


@dataclass(frozen=True, eq=False)
class SurfaceGrid:
    """Mixture ROC coordinates; arrays have shape (n_alpha, n_tau)."""

    alphas: np.ndarray
    taus: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    def rows(self):
        for i, a in enumerate(self.alphas):
            for j, t in enumerate(self.taus):
                yield float(a), float(t), float(self.fpr[i, j]), float(self.tpr[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "tau", "fpr", "tpr"])
        for row in self.rows():
            w.writerow([repr(v) for v in row])
        return buf.getvalue()


def mixture_surface_grid(scores_pos, scores_neg, n_alpha: int, n_tau: int) -> SurfaceGrid:
    """ROC coordinates of alpha-mixtures of the two score distributions.

    For alpha in [0, 0.5] the mixture CDFs are
    F-(tau, alpha) = (1 - alpha) F-(tau) + alpha F+(tau) and
    F+(tau, alpha) = alpha F-(tau) + (1 - alpha) F+(tau); the point is
    (1 - F-(tau, alpha), 1 - F+(tau, alpha)).  tau runs over pooled
    empirical quantiles.
    """
    if n_alpha < 2 or n_tau < 2:
        raise ValueError("n_alpha and n_tau must both be at least 2")
    fp, fn = ecdf(scores_pos), ecdf(scores_neg)
    pooled = np.concatenate([fp.sorted_values, fn.sorted_values])
    taus = np.quantile(pooled, np.linspace(0.0, 1.0, n_tau))
    alphas = np.linspace(0.0, 0.5, n_alpha)
    Fp, Fn = fp(taus), fn(taus)
    A = alphas[:, None]
    mix_neg = (1 - A) * Fn + A * Fp
    mix_pos = A * Fn + (1 - A) * Fp
    return SurfaceGrid(alphas, taus, 1.0 - mix_neg, 1.0 - mix_pos)
