"""Two-step approximate lower bound of the maximal AUC.

Step 1 fits the arctangent ratio t(x) and builds the ECDFs of t on each class.
Step 2 refits the same objective with per-sample weights
w(t(x)) = sin(t(x) + pi/4) |F+(t(x)) - F-(t(x))|.  The optimal weighted value
A gives AUC* = sqrt(2) A / 2 + 1/2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import SampleSet
from .estimator import SolverConfig, fit_atan_ratio, sample_value
from .linear import model_from_dict
from .rocgeom import Ecdf, ecdf

HALF_PI = math.pi / 2


def auc_from_A(A: float) -> float:
    return math.sqrt(2.0) * A / 2.0 + 0.5


def weight_fn(tau, ecdf_pos: Ecdf, ecdf_neg: Ecdf):
    """sin(tau + pi/4) |F+(tau) - F-(tau)| with tau clipped into [0, pi/2]."""
    t = np.clip(np.asarray(tau, dtype=np.float64), 0.0, HALF_PI)
    w = np.sin(t + math.pi / 4) * np.abs(ecdf_pos(t) - ecdf_neg(t))
    return float(w) if w.ndim == 0 else w


@dataclass
class TwoStepModel:
    step1_model: object
    ecdf_pos: Ecdf
    ecdf_neg: Ecdf
    step2_model: object
    A_hat: float
    auc_star_hat: float
    degenerate: bool = False
    diagnostics: dict = field(default_factory=dict)

    def weights_for(self, s: SampleSet):
        """Step-2 weights of every sample in ``s`` from step-1 scores."""
        tp = self.step1_model.decision(s.positives)
        tn = self.step1_model.decision(s.negatives)
        return weight_fn(tp, self.ecdf_pos, self.ecdf_neg), weight_fn(tn, self.ecdf_pos, self.ecdf_neg)

    def A_on(self, s: SampleSet) -> float:
        """Weighted objective of the step-2 model on another sample (held-out A)."""
        wp, wn = self.weights_for(s)
        return sample_value(self.step2_model.decision(s.positives),
                            self.step2_model.decision(s.negatives), wp, wn)

    def to_dict(self) -> dict:
        return {
            "step1_model": self.step1_model.to_dict(),
            "step2_model": self.step2_model.to_dict(),
            "ecdf_pos": self.ecdf_pos.to_list(),
            "ecdf_neg": self.ecdf_neg.to_list(),
            "A_hat": self.A_hat,
            "auc_star_hat": self.auc_star_hat,
            "degenerate": self.degenerate,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TwoStepModel":
        return cls(
            step1_model=model_from_dict(d["step1_model"]),
            ecdf_pos=ecdf(d["ecdf_pos"]),
            ecdf_neg=ecdf(d["ecdf_neg"]),
            step2_model=model_from_dict(d["step2_model"]),
            A_hat=float(d["A_hat"]),
            auc_star_hat=float(d["auc_star_hat"]),
            degenerate=bool(d.get("degenerate", False)),
            diagnostics=d.get("diagnostics", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def two_step_fit(s: SampleSet, cfg: SolverConfig | None = None) -> TwoStepModel:
    """Run both fits with the same configuration."""
    cfg = (cfg or SolverConfig()).resolve(s)
    step1, diag1 = fit_atan_ratio(s, cfg)
    tp = step1.decision(s.positives)
    tn = step1.decision(s.negatives)
    Fp, Fn = ecdf(tp), ecdf(tn)
    wp, wn = weight_fn(tp, Fp, Fn), weight_fn(tn, Fp, Fn)
    wp, wn = np.atleast_1d(wp), np.atleast_1d(wn)
    step2, diag2 = fit_atan_ratio(s, cfg, weights=(wp, wn))
    degenerate = not (np.any(wp > 0) or np.any(wn > 0))
    if degenerate:
        A = 0.0
    else:
        A = sample_value(step2.decision(s.positives), step2.decision(s.negatives), wp, wn)
    return TwoStepModel(
        step1_model=step1,
        ecdf_pos=Fp,
        ecdf_neg=Fn,
        step2_model=step2,
        A_hat=A,
        auc_star_hat=auc_from_A(A),
        degenerate=degenerate,
        diagnostics={"step1": diag1.to_dict(), "step2": diag2.to_dict(), "config": cfg.to_dict()},
    )


def score(model: TwoStepModel, x) -> float | np.ndarray:
    """Clipped step-2 score; a single vector gives a float, a matrix gives one score per row."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim <= 1:
        x = x.reshape(1, -1)
        if x.shape[1] != model.step2_model.dim:
            raise ValueError(f"dimension mismatch: model has {model.step2_model.dim}, input has {x.shape[1]}")
        return float(model.step2_model.decision(x)[0])
    return model.step2_model.decision(x)
