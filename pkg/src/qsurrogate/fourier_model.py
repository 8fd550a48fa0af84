"""Real cosine/sine form of the Fourier surrogate as a learning model.

Parameters are stored as ``[a_0, a_w for w in W+, b_w for w in W+]`` where
``W+`` is the half-spectrum of frequencies whose first nonzero component is
positive, in canonical order. The model is

    a_0 + sum_{w in W+} a_w cos(w . x) + b_w sin(w . x)

and corresponds to complex coefficients ``c_0 = a_0``,
``c_w = (a_w + i b_w) / 2`` and ``c_{-w} = conj(c_w)`` under the
``exp(-i w . x)`` convention.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectrum import FrequencySet
from .surrogation import FORMAT_NAME, FourierSurrogate

RANK_RTOL = 1e-10


@dataclass
class RealFourierModel:
    freq: FrequencySet
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        h = len(self.freq.positive_half())
        if self.a.shape != (h + 1,) or self.b.shape != (h,):
            raise ValueError(f"expected {h + 1} cosine and {h} sine coefficients")

    @classmethod
    def zeros(cls, freq: FrequencySet) -> "RealFourierModel":
        h = len(freq.positive_half())
        return cls(freq, np.zeros(h + 1), np.zeros(h))

    @classmethod
    def from_params(cls, freq: FrequencySet, params) -> "RealFourierModel":
        params = np.asarray(params, dtype=float)
        h = len(freq.positive_half())
        if params.shape != (2 * h + 1,):
            raise ValueError(f"expected {2 * h + 1} parameters, got {params.shape}")
        return cls(freq, params[: h + 1].copy(), params[h + 1 :].copy())

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    @property
    def n_params(self) -> int:
        return self.a.size + self.b.size

    @property
    def d(self) -> int:
        return self.freq.d

    def __call__(self, X) -> np.ndarray:
        return design_matrix(X, self.freq) @ self.params

    def to_complex(self, provenance: dict | None = None) -> FourierSurrogate:
        pos = self.freq.positive_half()
        neg = self.freq.negation_permutation()[pos]
        c = np.zeros(self.freq.T, dtype=complex)
        c[self.freq.index_of((0,) * self.d)] = self.a[0]
        c[pos] = (self.a[1:] + 1j * self.b) / 2
        c[neg] = c[pos].conj()
        return FourierSurrogate(self.freq, c, dict(provenance or {}))

    @classmethod
    def from_complex(cls, s: FourierSurrogate) -> "RealFourierModel":
        """Real form of ``s``; any anti-Hermitian part is dropped."""
        freq = s.freq
        pos = freq.positive_half()
        neg = freq.negation_permutation()
        c = 0.5 * (s.coeffs + s.coeffs[neg].conj())
        a0 = c[freq.index_of((0,) * freq.d)].real
        return cls(freq, np.concatenate([[a0], 2 * c[pos].real]), 2 * c[pos].imag)

    def to_json(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "schema_version": 1,
            "real": True,
            **self.freq.to_json(),
            "coefficients": [float(v) for v in self.params],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RealFourierModel":
        if data.get("format") != FORMAT_NAME or not data.get("real", False):
            raise ValueError("not a real Fourier model document")
        return cls.from_params(FrequencySet.from_json(data), data["coefficients"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "RealFourierModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def design_matrix(X, freq: FrequencySet) -> np.ndarray:
    """Rows ``[1, cos(w . x) ..., sin(w . x) ...]`` over the half-spectrum."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != freq.d:
        raise ValueError(f"inputs must have {freq.d} features, got shape {X.shape}")
    W = freq.frequencies()[freq.positive_half()]
    phase = X @ W.T
    return np.hstack([np.ones((X.shape[0], 1)), np.cos(phase), np.sin(phase)])


def evaluate(m: RealFourierModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (m.d,):
        raise ValueError(f"x must have shape ({m.d},), got {x.shape}")
    return float(m(x[None, :])[0])


def coefficient_gradient(m: RealFourierModel, x, target: float) -> np.ndarray:
    """Gradient of ``(m(x) - target)**2`` with respect to ``m.params``."""
    row = design_matrix(x, m.freq)[0]
    return 2.0 * (row @ m.params - target) * row


@dataclass(frozen=True)
class FitReport:
    residual: float
    condition_number: float
    rank: int
    singular_values: np.ndarray

    def to_json(self) -> dict:
        return {
            "residual": self.residual,
            "condition_number": self.condition_number,
            "rank": self.rank,
        }


def linear_best_fit(X, y, freq: FrequencySet) -> tuple[RealFourierModel, FitReport]:
    """Minimum-norm least-squares fit through a truncated SVD of the design matrix.

    Singular values below ``1e-10 * sigma_max`` are treated as zero. The
    reported residual is the mean squared training error.
    """
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("cannot fit an empty dataset")
    Phi = design_matrix(X, freq)
    if Phi.shape[0] != y.size:
        raise ValueError("inputs and labels differ in length")
    U, S, Vt = np.linalg.svd(Phi, full_matrices=False)
    rank = int(np.sum(S > RANK_RTOL * S[0])) if S[0] > 0 else 0
    w = Vt[:rank].T @ ((U[:, :rank].T @ y) / S[:rank])
    resid = float(np.mean((Phi @ w - y) ** 2))
    cond = float(S[0] / S[-1]) if S[-1] > 0 else math.inf
    return RealFourierModel.from_params(freq, w), FitReport(resid, cond, rank, S)


def complex_feature(x, freq: FrequencySet) -> np.ndarray:
    """Column ``(exp(-i w . x))_w`` of the transposed complex design matrix."""
    return np.exp(-1j * (freq.frequencies() @ np.asarray(x, dtype=float)))


def condition_lower_bound(x_i, x_j, freq: FrequencySet) -> float:
    """``||a_i + a_j|| / ||a_i - a_j||`` for the complex feature columns of two points.

    Lower-bounds the condition number of any square design matrix holding
    both points. Returns ``math.inf`` when the two columns coincide.

    With ``delta = x_i - x_j`` the entries satisfy
    ``|a_i + a_j| = 2|cos(w . delta / 2)|`` and
    ``|a_i - a_j| = 2|sin(w . delta / 2)|``; using these avoids the
    cancellation of subtracting two nearly equal columns.
    """
    delta = np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float)
    half = freq.frequencies() @ delta / 2.0
    den = math.sqrt(float(np.sum(np.sin(half) ** 2)))
    if den == 0.0:
        return math.inf
    return math.sqrt(float(np.sum(np.cos(half) ** 2))) / den
