"""Regression datasets on the torus ``[0, 2 pi)^d``."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetError
from .model import ModelSpec, evaluate_batch, model_hash, random_parameters
from .seeding import derive_seed, rng_for

TWO_PI = 2.0 * np.pi
# rescaled features occupy [0, 2 pi (1 - FEATURE_MARGIN)] so the extreme
# samples of a column do not wrap onto each other on the circle
FEATURE_MARGIN = 0.05
DEFAULT_VAL_FRACTION = 0.2


def split_indices(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 <= val_fraction < 1.0:
        raise ValueError("val_fraction must lie in [0, 1)")
    perm = rng_for(seed, "split").permutation(n)
    n_val = int(round(val_fraction * n))
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


@dataclass
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    split_seed: int
    val_fraction: float = DEFAULT_VAL_FRACTION
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        self.train_idx = np.asarray(self.train_idx, dtype=int)
        self.val_idx = np.asarray(self.val_idx, dtype=int)
        if self.inputs.ndim != 2 or self.inputs.shape[0] != self.labels.size:
            raise DatasetError("inputs must be (n, d) with one label per row")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.labels))):
            raise DatasetError("inputs and labels must be finite")
        if self.inputs.size and (self.inputs.min() < 0 or self.inputs.max() >= TWO_PI):
            raise DatasetError("features must lie in [0, 2 pi)")
        if np.intersect1d(self.train_idx, self.val_idx).size:
            raise DatasetError("train and validation splits overlap")

    @property
    def n_samples(self) -> int:
        return self.labels.size

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    @property
    def train_inputs(self) -> np.ndarray:
        return self.inputs[self.train_idx]

    @property
    def train_labels(self) -> np.ndarray:
        return self.labels[self.train_idx]

    @property
    def val_inputs(self) -> np.ndarray:
        return self.inputs[self.val_idx]

    @property
    def val_labels(self) -> np.ndarray:
        return self.labels[self.val_idx]

    def resplit(self, seed: int, val_fraction: float | None = None) -> "Dataset":
        vf = self.val_fraction if val_fraction is None else val_fraction
        tr, va = split_indices(self.n_samples, vf, seed)
        return Dataset(self.inputs, self.labels, tr, va, seed, vf, dict(self.meta))

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.inputs, labels, self.train_idx, self.val_idx,
                       self.split_seed, self.val_fraction, dict(self.meta))


def rescale_features(raw: np.ndarray, margin: float = FEATURE_MARGIN) -> np.ndarray:
    """Column-wise min-max map onto ``[0, 2 pi (1 - margin)]``.

    A constant column maps to zeros and triggers a warning.
    """
    raw = np.asarray(raw, dtype=float)
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    span = hi - lo
    const = span == 0
    if np.any(const):
        warnings.warn(f"constant feature column(s) {np.flatnonzero(const).tolist()} mapped to 0",
                      stacklevel=2)
    scale = np.where(const, 0.0, TWO_PI * (1.0 - margin) / np.where(const, 1.0, span))
    return (raw - lo) * scale


def synthetic_regression(
    n_samples: int = 300,
    d: int = 2,
    noise_std: float = 0.1,
    seed: int = 0,
    val_fraction: float = DEFAULT_VAL_FRACTION,
) -> Dataset:
    """Linear labels of standard-normal latent features plus Gaussian noise.

    Features are rescaled onto the torus after the labels are formed, so the
    labels are affine in the returned inputs when ``noise_std == 0``.
    """
    if n_samples < 2:
        raise DatasetError("need at least two samples")
    rng = rng_for(seed, "synthetic")
    latent = rng.standard_normal((n_samples, d))
    weights = rng.standard_normal(d)
    labels = latent @ weights + noise_std * rng.standard_normal(n_samples)
    split_seed = derive_seed(seed, "split")
    tr, va = split_indices(n_samples, val_fraction, split_seed)
    meta = {"kind": "synthetic", "n_samples": n_samples, "d": d, "noise_std": noise_std,
            "seed": seed, "weights": weights.tolist()}
    return Dataset(rescale_features(latent), labels, tr, va, split_seed, val_fraction, meta)


def random_pqc_dataset(
    seed: int = 0,
    n_samples: int = 3500,
    d: int = 4,
    L: int = 2,
    B: int = 2,
    val_fraction: float = DEFAULT_VAL_FRACTION,
) -> Dataset:
    """Labels are outputs of a randomly initialised re-uploading model."""
    spec = ModelSpec(d, L, B)
    theta = random_parameters(spec, derive_seed(seed, "generator"))
    inputs = rng_for(seed, "pqc-inputs").uniform(0.0, TWO_PI, (n_samples, d))
    labels = evaluate_batch(spec, theta, inputs)
    split_seed = derive_seed(seed, "split")
    tr, va = split_indices(n_samples, val_fraction, split_seed)
    meta = {"kind": "random_pqc", "n_samples": n_samples, "generator": spec.to_json(),
            "generator_hash": model_hash(spec, theta), "seed": seed}
    return Dataset(inputs, labels, tr, va, split_seed, val_fraction, meta)


@dataclass(frozen=True)
class LabelMap:
    """Affine map from raw label range ``[lo, hi]`` onto ``[t0, t1]``."""

    lo: float
    hi: float
    t0: float
    t1: float

    def forward(self, y):
        if self.hi == self.lo:
            return np.full_like(np.asarray(y, dtype=float), self.t0)
        return self.t0 + (np.asarray(y, dtype=float) - self.lo) * (self.t1 - self.t0) / (self.hi - self.lo)

    def inverse(self, z):
        if self.t1 == self.t0:
            return np.full_like(np.asarray(z, dtype=float), self.lo)
        return self.lo + (np.asarray(z, dtype=float) - self.t0) * (self.hi - self.lo) / (self.t1 - self.t0)


def load_csv_dataset(
    path,
    label_column: str | int,
    target_range: tuple[float, float] | None = None,
    seed: int = 0,
    val_fraction: float = DEFAULT_VAL_FRACTION,
) -> Dataset:
    """Load a numeric CSV with a header row.

    Every column except ``label_column`` is a feature. Features are min-max
    rescaled onto the torus; labels are mapped affinely onto
    ``target_range`` (kept as-is when ``None``). The label map is stored in
    ``meta["label_map"]`` for inversion.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if isinstance(label_column, int):
        if not 0 <= label_column < len(header):
            raise DatasetError(f"{path}: label column index {label_column} out of range")
        li = label_column
    elif label_column in header:
        li = header.index(label_column)
    else:
        raise DatasetError(f"{path}: missing label column {label_column!r}")
    data = []
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        vals = []
        for c, cell in enumerate(row):
            try:
                vals.append(float(cell))
            except ValueError:
                raise DatasetError(
                    f"{path}: row {r}, column {header[c]!r}: non-numeric value {cell!r}"
                ) from None
        data.append(vals)
    if len(data) < 2:
        raise DatasetError(f"{path}: need at least two data rows")
    arr = np.array(data)
    raw_labels = arr[:, li]
    features = np.delete(arr, li, axis=1)
    if target_range is None:
        lmap = LabelMap(0.0, 1.0, 0.0, 1.0)
    else:
        lmap = LabelMap(float(raw_labels.min()), float(raw_labels.max()), *map(float, target_range))
    split_seed = derive_seed(seed, "split")
    tr, va = split_indices(len(arr), val_fraction, split_seed)
    meta = {"kind": "csv", "path": str(path), "label_column": header[li],
            "feature_columns": [h for i, h in enumerate(header) if i != li],
            "label_map": {"lo": lmap.lo, "hi": lmap.hi, "t0": lmap.t0, "t1": lmap.t1}}
    return Dataset(rescale_features(features), lmap.forward(raw_labels), tr, va,
                   split_seed, val_fraction, meta)


def label_map(ds: Dataset) -> LabelMap:
    m = ds.meta.get("label_map", {"lo": 0.0, "hi": 1.0, "t0": 0.0, "t1": 1.0})
    return LabelMap(m["lo"], m["hi"], m["t0"], m["t1"])
