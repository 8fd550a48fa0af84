"""Grid-based Fourier surrogation with (epsilon, delta) shot budgets.

The model is sampled on the product grid of :func:`spectrum.build_grid`. On
that grid the complex design matrix ``A[j, w] = exp(-i w . x_j)`` satisfies
``A^H A = T I``, so the least-squares solution is ``A^H y / T``, evaluated
here with an inverse FFT.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ResourceError
from .model import ModelSpec, estimate_batch, evaluate_batch, model_hash
from .seeding import rng_for
from .spectrum import DEFAULT_GRID_CAP, FrequencySet, build_grid, frequency_set

FORMAT_NAME = "fourier-surrogate"

# amplitudes held at once when evaluating a surrogate on many points
_EVAL_CHUNK = 1 << 22


def required_shots(epsilon: float, delta: float, T: int, m_norm: float) -> int:
    """Shots per grid point, ``ceil(2 m^2 / eps^2 * (ln(1/delta) + T ln 2))``."""
    _check_budget_args(epsilon, delta, T, m_norm)
    return math.ceil(2.0 * m_norm**2 / epsilon**2 * (math.log(1.0 / delta) + T * math.log(2.0)))


def certified_epsilon(N: int, delta: float, T: int, m_norm: float) -> float:
    """Smallest epsilon certified by ``N`` shots per point (inverse of the budget)."""
    if N < 1:
        raise ValueError("N must be positive")
    _check_budget_args(1.0, delta, T, m_norm)
    return m_norm * math.sqrt(2.0 * (math.log(1.0 / delta) + T * math.log(2.0)) / N)


def _check_budget_args(epsilon, delta, T, m_norm):
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    if not m_norm > 0:
        raise ValueError(f"operator norm must be > 0, got {m_norm}")


@dataclass(frozen=True)
class SurrogationBudget:
    epsilon: float
    delta: float
    T: int
    m_norm: float
    N: int

    def __post_init__(self):
        _check_budget_args(self.epsilon, self.delta, self.T, self.m_norm)
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")

    @property
    def N_total(self) -> int:
        return self.T * self.N

    @property
    def required_N(self) -> int:
        return required_shots(self.epsilon, self.delta, self.T, self.m_norm)

    @property
    def certified(self) -> bool:
        return self.N >= self.required_N

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "T": self.T,
            "m_norm": self.m_norm,
            "N": self.N,
            "N_total": self.N_total,
            "certified": self.certified,
        }


def shot_budget(epsilon: float, delta: float, T: int, m_norm: float) -> SurrogationBudget:
    N = required_shots(epsilon, delta, T, m_norm)
    return SurrogationBudget(epsilon, delta, int(T), m_norm, N)


def inference_budget(epsilon: float, delta: float, T: int, m_norm: float) -> int:
    """Total shots to estimate ``T`` outputs to sup-accuracy epsilon (union + Hoeffding)."""
    _check_budget_args(epsilon, delta, T, m_norm)
    return math.ceil(2.0 * T * m_norm**2 / epsilon**2 * math.log(2.0 * T / delta))


@dataclass
class FourierSurrogate:
    """``g(x) = sum_w c_w exp(-i w . x)`` with ``c`` in canonical order."""

    freq: FrequencySet
    coeffs: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.freq.T,):
            raise ValueError(f"expected {self.freq.T} coefficients, got {self.coeffs.shape}")

    @property
    def d(self) -> int:
        return self.freq.d

    def evaluate_complex(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.d:
            raise ValueError(f"inputs must have {self.d} features, got shape {X.shape}")
        sizes = self.freq.sizes
        C = self.coeffs.reshape(sizes)
        omegas = [np.arange(-w, w + 1) for w in self.freq.per_feature_max]
        out = np.empty(X.shape[0], dtype=complex)
        step = max(1, _EVAL_CHUNK // max(1, self.freq.T // sizes[0]))
        for s in range(0, X.shape[0], step):
            xs = X[s : s + step]
            R = np.tensordot(np.exp(-1j * np.outer(xs[:, 0], omegas[0])), C, axes=(1, 0))
            for i in range(1, self.d):
                E = np.exp(-1j * np.outer(xs[:, i], omegas[i]))
                R = np.einsum("nt,nt...->n...", E, R)
            out[s : s + step] = R
        return out

    def __call__(self, X) -> np.ndarray:
        return self.evaluate_complex(X).real

    def hermitian_defect(self) -> float:
        """``max |c_{-w} - conj(c_w)|``."""
        neg = self.freq.negation_permutation()
        return float(np.max(np.abs(self.coeffs[neg] - self.coeffs.conj())))

    def to_json(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "schema_version": 1,
            "real": False,
            **self.freq.to_json(),
            "provenance": self.provenance,
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "FourierSurrogate":
        if data.get("format") != FORMAT_NAME or data.get("real", False):
            raise ValueError("not a complex Fourier surrogate document")
        freq = FrequencySet.from_json(data)
        c = np.array(data["coefficients"], dtype=float).reshape(-1, 2)
        return cls(freq, c[:, 0] + 1j * c[:, 1], dict(data.get("provenance", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "FourierSurrogate":
        return cls.from_json(json.loads(Path(path).read_text()))


def evaluate_surrogate(s: FourierSurrogate, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (s.d,):
        raise ValueError(f"x must have shape ({s.d},), got {x.shape}")
    return float(s(x[None, :])[0])


def coefficients_from_grid(values: np.ndarray, freq: FrequencySet) -> np.ndarray:
    """``A^H y / T`` for values sampled on ``build_grid(freq)``."""
    Y = np.asarray(values, dtype=float).reshape(freq.sizes)
    # ifftn gives (1/T) sum_j y_j exp(+2 pi i k j / T_i) at k = w mod T_i;
    # fftshift reorders k to w = -w_max .. w_max for odd T_i
    return np.fft.fftshift(np.fft.ifftn(Y)).ravel()


def hermitian_symmetrize(coeffs: np.ndarray, freq: FrequencySet) -> np.ndarray:
    neg = freq.negation_permutation()
    return 0.5 * (coeffs + coeffs[neg].conj())


def surrogate_exact(spec: ModelSpec, theta, cap: int = DEFAULT_GRID_CAP) -> FourierSurrogate:
    freq = frequency_set(spec)
    grid = build_grid(freq, cap)
    y = evaluate_batch(spec, theta, grid.points)
    prov = {
        "mode": "exact",
        "shots_per_point": 0,
        "epsilon": None,
        "delta": None,
        "model_hash": model_hash(spec, theta),
    }
    return FourierSurrogate(freq, coefficients_from_grid(y, freq), prov)


def surrogate_with_shots(
    spec: ModelSpec,
    theta,
    budget: SurrogationBudget,
    seed: int,
    cap: int = DEFAULT_GRID_CAP,
) -> FourierSurrogate:
    """Surrogate from shot estimates on the grid, Hermitian-symmetrized.

    Grid point ``j`` uses the shot stream keyed by ``(seed, j)``. The
    provenance records whether ``budget.N`` meets the required shot count
    for the budget's (epsilon, delta).
    """
    freq = frequency_set(spec)
    if budget.T != freq.T:
        raise ValueError(f"budget is for T={budget.T}, model grid has T={freq.T}")
    if budget.m_norm < spec.m_norm:
        raise ValueError("budget operator norm is smaller than the observable's")
    grid = build_grid(freq, cap)
    y_hat = estimate_batch(spec, theta, grid.points, budget.N, seed)
    coeffs = hermitian_symmetrize(coefficients_from_grid(y_hat, freq), freq)
    prov = {
        "mode": "shots",
        "shots_per_point": budget.N,
        "epsilon": budget.epsilon,
        "delta": budget.delta,
        "model_hash": model_hash(spec, theta),
        "certified": budget.certified,
        "seed": int(seed),
    }
    return FourierSurrogate(freq, coeffs, prov)


def default_probe_resolution(d: int) -> int | None:
    if d <= 2:
        return 256
    if d == 3:
        return 32
    return None


@dataclass
class ProbeSet:
    """Probe points with cached reference outputs for sup-error estimation.

    The maximum over a finite probe set is a lower bound on the true
    supremum.
    """

    points: np.ndarray
    reference: np.ndarray

    @classmethod
    def build(cls, f: Callable, d: int, probe_points_per_dim: int | None = None, seed: int = 0) -> "ProbeSet":
        pts = probe_points(d, probe_points_per_dim, seed)
        return cls(pts, np.asarray(f(pts), dtype=float))

    def max_deviation(self, g: Callable) -> float:
        return float(np.max(np.abs(self.reference - np.asarray(g(self.points)))))


def probe_points(d: int, probe_points_per_dim: int | None = None, seed: int = 0) -> np.ndarray:
    """Dense equispaced grid (half-step offset) plus as many uniform random points.

    Without an explicit resolution: 256 points per dimension for ``d <= 2``,
    32 for ``d = 3`` and 10**4 random points instead of a grid for ``d >= 4``.
    """
    per_dim = probe_points_per_dim if probe_points_per_dim is not None else default_probe_resolution(d)
    rng = rng_for(seed, "probe", d)
    if per_dim is None:
        dense = rng.uniform(0.0, 2 * np.pi, (10**4, d))
    else:
        if per_dim**d > 10**7:
            raise ResourceError(f"probe grid of {per_dim}^{d} points is too large")
        axis = 2 * np.pi * (np.arange(per_dim) + 0.5) / per_dim
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        dense = np.stack([m.ravel() for m in mesh], axis=1)
    rand = rng.uniform(0.0, 2 * np.pi, dense.shape)
    return np.concatenate([dense, rand])


def sup_error_estimate(
    f: Callable,
    g: Callable,
    probe_points_per_dim: int | None = None,
    seed: int = 0,
    d: int | None = None,
) -> float:
    """Estimate ``sup_x |f(x) - g(x)|`` over :func:`probe_points`.

    ``f`` and ``g`` map an ``(n, d)`` array to ``n`` outputs. ``d`` is taken
    from whichever argument exposes it when not given.
    """
    if f is g:
        return 0.0
    if d is None:
        d = getattr(g, "d", None) or getattr(getattr(f, "spec", None), "d", None) or getattr(f, "d", None)
        if d is None:
            raise ValueError("cannot infer input dimension; pass d=")
    return ProbeSet.build(f, d, probe_points_per_dim, seed).max_deviation(g)
