import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsurrogate.errors import ResourceError
from qsurrogate.model import ModelSpec, evaluate_batch, random_parameters
from qsurrogate.spectrum import FrequencySet, build_grid, eigenvalue_sum_differences, frequency_set


def brute_force_frequencies(L):
    # every sign pattern of L eigenvalues +-1/2 on the bra and on the ket side
    sums = {sum(s) / 2 for s in itertools.product((-1, 1), repeat=L)}
    return sorted({a - b for a in sums for b in sums})


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_enumeration_matches_brute_force(L):
    assert sorted(float(f) for f in eigenvalue_sum_differences((-0.5, 0.5), L)) == brute_force_frequencies(L)
    assert frequency_set(ModelSpec(1, L, 1)).per_feature_max == (L,)


def test_examples():
    f = frequency_set(ModelSpec(1, 2, 1))
    assert [w[0] for w in f] == [-2, -1, 0, 1, 2] and f.T == 5
    f = frequency_set(ModelSpec(2, 2, 3))
    assert f.per_feature_max == (2, 2) and f.T == 25
    f = frequency_set(ModelSpec(1, 1, 1))
    assert [w[0] for w in f] == [-1, 0, 1] and f.T == 3


@given(st.lists(st.integers(0, 4), min_size=1, max_size=4))
def test_lattice_invariants(pfm):
    f = FrequencySet(tuple(pfm))
    freqs = f.frequencies()
    assert all(t % 2 == 1 for t in f.sizes)
    assert len(freqs) == f.T == len(list(f)) == len(f)
    assert [tuple(w) for w in freqs] == list(f)
    assert all(tuple(-w) in f for w in freqs)
    perm = f.negation_permutation()
    np.testing.assert_array_equal(freqs[perm], -freqs)
    for j in (0, f.T // 2, f.T - 1):
        assert f.index_of(freqs[j]) == j
    half = f.positive_half()
    assert 1 + 2 * len(half) == f.T
    assert len(set(half) & set(perm[half])) == 0


def test_canonical_order_feature0_slowest():
    freqs = FrequencySet((1, 1)).frequencies()
    assert freqs[:4].tolist() == [[-1, -1], [-1, 0], [-1, 1], [0, -1]]


def test_json_roundtrip():
    f = FrequencySet((2, 3))
    assert FrequencySet.from_json(f.to_json()) == f
    with pytest.raises(ValueError):
        FrequencySet.from_json({"d": 3, "per_feature_max": [1, 1]})


def test_grid_examples():
    g = build_grid(FrequencySet((1,)))
    np.testing.assert_allclose(g.points[:, 0], [0, 2 * np.pi / 3, 4 * np.pi / 3])
    g = build_grid(FrequencySet((1, 1)))
    assert len(g) == 9
    np.testing.assert_array_equal(g.points[0], [0, 0])
    np.testing.assert_allclose(g.points[-1], [4 * np.pi / 3, 4 * np.pi / 3])
    np.testing.assert_allclose(g.points[1], [0, 2 * np.pi / 3])
    g = build_grid(FrequencySet((0,)))
    np.testing.assert_array_equal(g.points, [[0.0]])


def test_grid_size_agreement_and_spacing():
    f = FrequencySet((1, 2, 0))
    g = build_grid(f)
    assert len(g) == f.T
    for i, t in enumerate(f.sizes):
        k = g.points[:, i] * t / (2 * np.pi)
        np.testing.assert_allclose(k, np.round(k), atol=1e-12)


def test_grid_cap():
    with pytest.raises(ResourceError, match="T=125"):
        build_grid(FrequencySet((2, 2, 2)), cap=100)


@pytest.mark.parametrize("d,L,B", [(1, 1, 1), (1, 3, 2), (2, 2, 2), (2, 3, 1)])
def test_model_is_band_limited(d, L, B):
    spec = ModelSpec(d, L, B)
    theta = random_parameters(spec, 17)
    freq = frequency_set(spec)
    fine = [2 * t for t in freq.sizes]
    axes = [2 * np.pi * np.arange(n) / n for n in fine]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    vals = evaluate_batch(spec, theta, pts).reshape(fine)
    # e^{-i w x} convention: coefficients are the inverse DFT of the samples
    coeffs = np.fft.ifftn(vals)
    inside = np.ones(fine, dtype=bool)
    for axis, (n, w) in enumerate(zip(fine, freq.per_feature_max)):
        k = np.fft.fftfreq(n, 1.0 / n)
        mask = np.abs(k) <= w
        shape = [1] * d
        shape[axis] = n
        inside &= mask.reshape(shape)
    assert np.sum(np.abs(coeffs[~inside])) < 1e-9
    assert np.sum(np.abs(coeffs[inside])) > 1e-3
