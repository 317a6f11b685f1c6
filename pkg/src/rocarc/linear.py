"""Affine score models t(x) = <w, x> + b."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    intercept: float = 0.0
    clip_range: tuple[float, float] | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel().copy()
        if not (np.all(np.isfinite(w)) and np.isfinite(self.intercept)):
            raise ValueError("linear model coefficients must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))
        if self.clip_range is not None:
            object.__setattr__(self, "clip_range", tuple(float(c) for c in self.clip_range))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def decision(self, X, clip: bool = True) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if self.dim == 1 else X.reshape(1, -1)
        if X.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: model has {self.dim}, input has {X.shape[1]}")
        v = X @ self.weights + self.intercept
        if clip and self.clip_range is not None:
            v = np.clip(v, *self.clip_range)
        return v

    def scaled(self, c: float) -> "LinearModel":
        return LinearModel(self.weights * c, self.intercept * c, self.clip_range)

    def to_dict(self) -> dict:
        return {
            "kind": "linear",
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "clip_range": None if self.clip_range is None else list(self.clip_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        cr = d.get("clip_range")
        return cls(np.asarray(d["weights"], dtype=float), float(d["intercept"]),
                   None if cr is None else tuple(cr))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def model_from_dict(d: dict):
    """Rebuild a kernel or linear score model from its JSON dictionary."""
    if d.get("kind", "kernel") == "linear":
        return LinearModel.from_dict(d)
    from .kernel import KernelScoreModel

    return KernelScoreModel.from_dict(d)
