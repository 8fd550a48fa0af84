"""Shared test utilities."""
import numpy as np

from qsurrogate.spectrum import FrequencySet, build_grid


def odd_factorizations(T, max_len=6):
    """Ordered factorizations of odd ``T`` into factors >= 3 (T=1 gives the empty one)."""
    if T == 1:
        return [()]
    out = []
    for f in range(3, T + 1, 2):
        if T % f == 0:
            out += [(f,) + rest for rest in odd_factorizations(T // f, max_len - 1) if len(rest) < max_len]
    return out


def frequency_sets_with_T(T):
    sets = [FrequencySet(tuple((t - 1) // 2 for t in fac)) for fac in odd_factorizations(T)]
    # also one variant with a degenerate constant feature in front
    sets.append(FrequencySet((0,) + sets[0].per_feature_max))
    return sets


def vandermonde(freq):
    """Explicit A_{j,w} = exp(-i w . x_j) on the reconstruction grid."""
    pts = build_grid(freq).points
    return np.exp(-1j * pts @ freq.frequencies().T)
