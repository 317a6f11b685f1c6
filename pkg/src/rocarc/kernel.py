"""Gaussian kernel Gram matrices, kernel score models and bandwidth heuristics."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .data import SampleSet

MEDIAN_SUBSAMPLE = 2000


@dataclass(frozen=True)
class KernelParams:
    bandwidth: float

    def __post_init__(self):
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")


def _as_rows(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    return A


def gaussian_kernel(A: np.ndarray, B: np.ndarray, bandwidth: float) -> np.ndarray:
    """k(a, b) = exp(-|a - b|^2 / (2 bandwidth^2)) for all row pairs."""
    sq = cdist(A, B, "sqeuclidean")
    return np.exp(-sq / (2.0 * bandwidth * bandwidth))


def gram(A, B, params: KernelParams) -> np.ndarray:
    """Gram matrix with entry (i, j) = k(A[i], B[j])."""
    A, B = _as_rows(A), _as_rows(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return gaussian_kernel(A, B, params.bandwidth)


@dataclass(frozen=True, eq=False)
class KernelScoreModel:
    """Score function v(x) = sum_i alpha_i k(s_i, x) over stored support points."""

    support_points: np.ndarray
    alpha: np.ndarray
    params: KernelParams
    clip_range: tuple[float, float] = (0.0, math.pi / 2)

    def __post_init__(self):
        S = _as_rows(self.support_points).copy()
        a = np.asarray(self.alpha, dtype=np.float64).ravel().copy()
        if S.shape[0] != a.shape[0]:
            raise ValueError(f"{a.shape[0]} coefficients for {S.shape[0]} support points")
        lo, hi = (float(c) for c in self.clip_range)
        if not lo <= hi:
            raise ValueError("clip_range must satisfy lo <= hi")
        S.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "support_points", S)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "clip_range", (lo, hi))

    @property
    def dim(self) -> int:
        return self.support_points.shape[1]

    def decision(self, X, clip: bool = True) -> np.ndarray:
        """Vectorized evaluation on the rows of ``X``."""
        X = _as_rows(X)
        if X.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: model has {self.dim}, input has {X.shape[1]}")
        v = gram(X, self.support_points, self.params) @ self.alpha
        if clip:
            v = np.clip(v, *self.clip_range)
        return v

    def rkhs_norm_sq(self) -> float:
        K = gram(self.support_points, self.support_points, self.params)
        return float(self.alpha @ K @ self.alpha)

    def to_dict(self) -> dict:
        return {
            "kind": "kernel",
            "bandwidth": float(self.params.bandwidth),
            "support_points": self.support_points.tolist(),
            "alpha": self.alpha.tolist(),
            "clip_range": list(self.clip_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelScoreModel":
        return cls(
            support_points=np.asarray(d["support_points"], dtype=np.float64),
            alpha=np.asarray(d["alpha"], dtype=np.float64),
            params=KernelParams(float(d["bandwidth"])),
            clip_range=tuple(d.get("clip_range", (0.0, math.pi / 2))),
        )

    def to_json(self) -> str:
        # json emits repr() floats, which round-trip doubles exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "KernelScoreModel":
        return cls.from_dict(json.loads(text))


def evaluate(model: KernelScoreModel, x, clip: bool = True) -> float:
    """Score of a single point ``x``; clamped into ``model.clip_range`` when ``clip``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != model.dim:
        raise ValueError(f"dimension mismatch: model has {model.dim}, input has {x.shape[0]}")
    return float(model.decision(x.reshape(1, -1), clip=clip)[0])


def median_heuristic(s: SampleSet | np.ndarray, seed: int = 0) -> float:
    """Median pairwise Euclidean distance of the pooled samples.

    Pools larger than ``MEDIAN_SUBSAMPLE`` points are subsampled with a fixed
    seed first.
    """
    X = s.pooled() if isinstance(s, SampleSet) else _as_rows(s)
    if X.shape[0] < 2:
        raise ValueError("median heuristic needs at least 2 points")
    if X.shape[0] > MEDIAN_SUBSAMPLE:
        idx = np.random.default_rng(seed).choice(X.shape[0], MEDIAN_SUBSAMPLE, replace=False)
        X = X[np.sort(idx)]
    med = float(np.median(pdist(X)))
    if med <= 0:
        raise ValueError("median pairwise distance is 0 (points coincide); pass an explicit bandwidth")
    return med
