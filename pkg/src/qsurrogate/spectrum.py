"""Accessible frequency lattice and the matching reconstruction grid.

Frequencies are enumerated lexicographically with feature 0 most
significant and each coordinate running ``-w_max(i) .. +w_max(i)``. The
coefficient vectors in :mod:`qsurrogate.surrogation` and
:mod:`qsurrogate.fourier_model` use exactly this order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ResourceError
from .model import ModelSpec

DEFAULT_GRID_CAP = 10**6

# RX(x) = exp(-i x X/2): generator eigenvalues are +-1/2
RX_GENERATOR_EIGENVALUES = (Fraction(-1, 2), Fraction(1, 2))


@dataclass(frozen=True)
class FrequencySet:
    per_feature_max: tuple[int, ...]

    def __post_init__(self):
        pfm = tuple(int(w) for w in self.per_feature_max)
        if not pfm or any(w < 0 for w in pfm):
            raise ValueError("per_feature_max needs d >= 1 non-negative entries")
        object.__setattr__(self, "per_feature_max", pfm)

    @property
    def d(self) -> int:
        return len(self.per_feature_max)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(2 * w + 1 for w in self.per_feature_max)

    @property
    def T(self) -> int:
        return int(np.prod(self.sizes))

    def __len__(self) -> int:
        return self.T

    def __iter__(self):
        return itertools.product(*(range(-w, w + 1) for w in self.per_feature_max))

    def __contains__(self, omega) -> bool:
        omega = tuple(omega)
        return len(omega) == self.d and all(
            abs(int(o)) <= w for o, w in zip(omega, self.per_feature_max)
        )

    def frequencies(self) -> np.ndarray:
        """All frequency vectors in canonical order, shape ``(T, d)``."""
        axes = [np.arange(-w, w + 1) for w in self.per_feature_max]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def index_of(self, omega) -> int:
        idx = 0
        for o, w in zip(omega, self.per_feature_max):
            idx = idx * (2 * w + 1) + (int(o) + w)
        return idx

    def negation_permutation(self) -> np.ndarray:
        """``perm[j]`` is the canonical index of ``-omega_j``."""
        # reversing every axis of the coefficient tensor maps omega -> -omega
        return np.arange(self.T).reshape(self.sizes)[(slice(None, None, -1),) * self.d].ravel()

    def positive_half(self) -> np.ndarray:
        """Canonical indices of frequencies whose first nonzero entry is positive."""
        freqs = self.frequencies()
        nz = freqs != 0
        first = np.argmax(nz, axis=1)
        lead = freqs[np.arange(len(freqs)), first]
        return np.flatnonzero(nz.any(axis=1) & (lead > 0))

    def to_json(self) -> dict:
        return {"d": self.d, "per_feature_max": list(self.per_feature_max)}

    @classmethod
    def from_json(cls, data: dict) -> "FrequencySet":
        pfm = tuple(data["per_feature_max"])
        if "d" in data and int(data["d"]) != len(pfm):
            raise ValueError("d does not match per_feature_max length")
        return cls(pfm)


def eigenvalue_sum_differences(eigenvalues, repeats: int) -> set:
    """All differences of sums of ``repeats`` generator eigenvalues."""
    sums = {Fraction(0)}
    for _ in range(repeats):
        sums = {s + e for s in sums for e in eigenvalues}
    return {a - b for a in sums for b in sums}


def frequency_set(spec: ModelSpec) -> FrequencySet:
    """Per-feature maximal frequency from the encoding generators.

    Each feature is encoded once per layer by ``RX``; the accessible
    frequencies are the differences of sums of ``L`` generator eigenvalues.
    """
    diffs = eigenvalue_sum_differences(RX_GENERATOR_EIGENVALUES, spec.L)
    if any(f.denominator != 1 for f in diffs):
        raise ValueError("encoding generator has non-integer eigenvalue differences")
    w = int(max(diffs))
    return FrequencySet((w,) * spec.d)


@dataclass(frozen=True)
class ReconstructionGrid:
    """Product of per-feature equispaced grids ``2 pi j / T_i``.

    Points are ordered row-major with feature 0 varying slowest.
    """

    sizes: tuple[int, ...]
    points: np.ndarray

    def __len__(self) -> int:
        return self.points.shape[0]


def build_grid(freq: FrequencySet, cap: int = DEFAULT_GRID_CAP) -> ReconstructionGrid:
    if freq.T > cap:
        raise ResourceError(f"grid size T={freq.T} exceeds cap {cap}")
    axes = [2 * np.pi * np.arange(t) / t for t in freq.sizes]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return ReconstructionGrid(freq.sizes, pts)
