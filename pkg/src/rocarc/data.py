"""Two-sample datasets: CSV ingestion, Gaussian generation and stratified splits.

Random draws use numpy's ``default_rng`` (PCG64 bit generator seeded through
``SeedSequence``), so a given seed reproduces the same samples on every build
that ships the same numpy major version.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Positive and negative feature vectors, stored as ``(n, dim)`` arrays."""

    positives: np.ndarray
    negatives: np.ndarray
    feature_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        pos = np.asarray(self.positives, dtype=np.float64)
        neg = np.asarray(self.negatives, dtype=np.float64)
        if pos.ndim == 1:
            pos = pos.reshape(-1, 1)
        if neg.ndim == 1:
            neg = neg.reshape(-1, 1)
        if pos.ndim != 2 or neg.ndim != 2:
            raise DataError("positives and negatives must be 2-d arrays")
        if pos.shape[1] != neg.shape[1]:
            raise DataError(
                f"dimension mismatch: positives have {pos.shape[1]} columns, "
                f"negatives have {neg.shape[1]}"
            )
        if pos.shape[1] < 1:
            raise DataError("feature dimension must be positive")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
            raise DataError("all coordinates must be finite")
        if self.feature_names is not None and len(self.feature_names) != pos.shape[1]:
            raise DataError("feature_names length does not match dimension")
        object.__setattr__(self, "positives", _freeze(pos))
        object.__setattr__(self, "negatives", _freeze(neg))

    @property
    def dim(self) -> int:
        return self.positives.shape[1]

    @property
    def n_pos(self) -> int:
        return self.positives.shape[0]

    @property
    def n_neg(self) -> int:
        return self.negatives.shape[0]

    def pooled(self) -> np.ndarray:
        """Positives followed by negatives, the support order used by the estimators."""
        return np.vstack([self.positives, self.negatives])

    def labels(self) -> np.ndarray:
        """+1 / -1 labels aligned with :meth:`pooled`."""
        return np.concatenate([np.ones(self.n_pos), -np.ones(self.n_neg)])

    def metadata(self) -> dict:
        return {"dim": self.dim, "n_pos": self.n_pos, "n_neg": self.n_neg}

    def standardized(self) -> "SampleSet":
        """Z-score every coordinate with pooled mean and standard deviation."""
        pooled = self.pooled()
        mu = pooled.mean(axis=0)
        sd = pooled.std(axis=0)
        sd[sd == 0] = 1.0
        return SampleSet((self.positives - mu) / sd, (self.negatives - mu) / sd, self.feature_names)

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (
            self.positives.shape == other.positives.shape
            and self.negatives.shape == other.negatives.shape
            and bool(np.array_equal(self.positives, other.positives))
            and bool(np.array_equal(self.negatives, other.negatives))
        )

    __hash__ = None


@dataclass(frozen=True)
class GaussianSpec:
    """Gaussian with isotropic (scalar) or diagonal (per-coordinate) std."""

    mean: tuple[float, ...]
    std: float | tuple[float, ...] = 1.0

    def __post_init__(self):
        mean = tuple(float(m) for m in np.atleast_1d(self.mean))
        std = np.atleast_1d(np.asarray(self.std, dtype=float))
        if std.size not in (1, len(mean)):
            raise DataError("std must be a scalar or have one entry per coordinate")
        if not np.all(std > 0) or not np.all(np.isfinite(std)):
            raise DataError("std must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", float(std[0]) if std.size == 1 else tuple(float(s) for s in std))

    @property
    def dim(self) -> int:
        return len(self.mean)

    def std_vector(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.std, dtype=float), (self.dim,)).copy()


def gen_gaussian_pair(spec_pos: GaussianSpec, spec_neg: GaussianSpec,
                      n_pos: int, n_neg: int, seed: int) -> SampleSet:
    """Draw ``n_pos`` positives and ``n_neg`` negatives from two Gaussians.

    Positives are drawn first from a single PCG64 stream, then negatives.
    """
    if n_pos < 1 or n_neg < 1:
        raise DataError(f"sample counts must be positive, got n_pos={n_pos}, n_neg={n_neg}")
    if spec_pos.dim != spec_neg.dim:
        raise DataError("Gaussian specs have different dimensions")
    rng = np.random.default_rng(seed)
    d = spec_pos.dim
    pos = np.asarray(spec_pos.mean) + spec_pos.std_vector() * rng.standard_normal((n_pos, d))
    neg = np.asarray(spec_neg.mean) + spec_neg.std_vector() * rng.standard_normal((n_neg, d))
    return SampleSet(pos, neg)


def split(s: SampleSet, train_fraction: float, seed: int) -> tuple[SampleSet, SampleSet]:
    """Stratified train/test split; each class is shuffled and cut independently."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    parts = []
    for name, block in (("positive", s.positives), ("negative", s.negatives)):
        n = block.shape[0]
        n_train = int(round(train_fraction * n))
        n_train = min(max(n_train, 1), n - 1)
        if n < 2:
            raise DataError(f"{name} class has {n} sample(s); need at least 2 to split")
        perm = rng.permutation(n)
        parts.append((block[perm[:n_train]], block[perm[n_train:]]))
    (ptr, pte), (ntr, nte) = parts
    return SampleSet(ptr, ntr, s.feature_names), SampleSet(pte, nte, s.feature_names)


def kfold_indices(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    perm = rng.permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def _sort_labels(values):
    try:
        return sorted(values, key=float)
    except ValueError:
        return sorted(values)


def load_csv(path, label_column: str, positive_label: str | None = None) -> SampleSet:
    """Read a two-class CSV with a header row.

    The two observed label values are sorted (numerically when possible) and
    the larger one becomes the positive class unless ``positive_label`` is
    given. Feature columns keep their file order.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header {header}")
        li = header.index(label_column)
        names = tuple(h for j, h in enumerate(header) if j != li)
        labels, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(row)} fields, header has {len(header)}"
                )
            feats = []
            for j, cell in enumerate(row):
                if j == li:
                    continue
                try:
                    val = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at row {lineno}, column {header[j]!r}"
                    ) from None
                if not math.isfinite(val):
                    raise DataError(f"{path}: non-finite value at row {lineno}, column {header[j]!r}")
                feats.append(val)
            labels.append(row[li].strip())
            rows.append(feats)
    distinct = _sort_labels(set(labels))
    if len(distinct) > 2:
        raise DataError(f"{path}: more than two label values: {distinct}")
    if len(distinct) < 2:
        raise DataError(f"{path}: need two label values, found {distinct}")
    if positive_label is None:
        pos_value = distinct[-1]
    else:
        matches = [v for v in distinct if v == positive_label or _num_eq(v, positive_label)]
        if not matches:
            raise DataError(f"{path}: positive label {positive_label!r} not among {distinct}")
        pos_value = matches[0]
    X = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(names))
    mask = np.array([lab == pos_value for lab in labels])
    for name, count in (("positive", mask.sum()), ("negative", (~mask).sum())):
        if count < 2:
            raise DataError(f"{path}: {name} class has {count} row(s); need at least 2")
    return SampleSet(X[mask], X[~mask], names)


def _num_eq(a: str, b: str) -> bool:
    try:
        return float(a) == float(b)
    except ValueError:
        return False


def write_csv(s: SampleSet, path, label_column: str = "label") -> None:
    """Write ``s`` with labels 1 (positive) and -1 (negative); floats use repr."""
    names = s.feature_names or tuple(f"x{j}" for j in range(s.dim))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, label_column])
        for row in s.positives:
            w.writerow([repr(float(v)) for v in row] + ["1"])
        for row in s.negatives:
            w.writerow([repr(float(v)) for v in row] + ["-1"])
