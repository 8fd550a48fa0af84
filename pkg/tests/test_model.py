import numpy as np
import pytest

from oracles import dense_circuit_value
from qsurrogate.model import (
    ModelSpec,
    QuantumModel,
    estimate_batch,
    estimate_with_shots,
    evaluate_batch,
    evaluate_exact,
    gradient_parameter_shift,
    mse_and_grad,
    random_parameters,
    value_and_grad,
)
from qsurrogate.statevector import Observable

FD_STEP = 1e-5


def central_difference(spec, theta, x, step=FD_STEP):
    g = np.empty(spec.n_params)
    for k in range(spec.n_params):
        e = np.zeros(spec.n_params)
        e[k] = step
        g[k] = (evaluate_exact(spec, theta + e, x) - evaluate_exact(spec, theta - e, x)) / (2 * step)
    return g


def random_instance(rng, d_max=3, L_max=3, B_max=2):
    spec = ModelSpec(int(rng.integers(1, d_max + 1)), int(rng.integers(1, L_max + 1)),
                     int(rng.integers(1, B_max + 1)))
    theta = rng.uniform(0, 2 * np.pi, spec.n_params)
    x = rng.uniform(0, 2 * np.pi, spec.d)
    return spec, theta, x


def test_param_count():
    assert ModelSpec(4, 2, 2).n_params == 72
    assert ModelSpec(1, 1, 1).n_params == 6
    assert random_parameters(ModelSpec(4, 2, 2), 0).shape == (72,)


@pytest.mark.parametrize("bad", [dict(d=0, L=1, B=1), dict(d=1, L=0, B=1), dict(d=1, L=1, B=0)])
def test_invalid_spec(bad):
    with pytest.raises(ValueError):
        ModelSpec(**bad)


def test_observable_width_must_match():
    with pytest.raises(ValueError):
        ModelSpec(2, 1, 1, observable=Observable.z(3))


def test_cosine_examples():
    spec = ModelSpec(1, 1, 1)
    theta = np.zeros(spec.n_params)
    assert evaluate_exact(spec, theta, [0.0]) == pytest.approx(1.0, abs=1e-15)
    assert evaluate_exact(spec, theta, [np.pi]) == pytest.approx(-1.0, abs=1e-15)
    xs = np.linspace(0, 2 * np.pi, 17)[:, None]
    np.testing.assert_allclose(evaluate_batch(spec, theta, xs), np.cos(xs[:, 0]), atol=1e-14)


def test_dimension_mismatch():
    spec = ModelSpec(2, 1, 1)
    with pytest.raises(ValueError):
        evaluate_exact(spec, np.zeros(spec.n_params), [0.0])
    with pytest.raises(ValueError):
        evaluate_exact(spec, np.zeros(5), [0.0, 0.0])


def test_matches_dense_circuit_oracle():
    rng = np.random.default_rng(7)
    for _ in range(40):
        spec, theta, x = random_instance(rng)
        assert abs(evaluate_exact(spec, theta, x) - dense_circuit_value(spec.d, spec.L, spec.B, theta, x)) < 1e-12


def test_matches_dense_oracle_multi_term_observable():
    obs = Observable(((0.5, "XZ"), (-0.3, "YY"), (0.2, "IZ")))
    spec = ModelSpec(2, 2, 2, observable=obs)
    rng = np.random.default_rng(3)
    for _ in range(10):
        theta = rng.uniform(0, 2 * np.pi, spec.n_params)
        x = rng.uniform(0, 2 * np.pi, 2)
        assert abs(evaluate_exact(spec, theta, x) - dense_circuit_value(2, 2, 2, theta, x, obs)) < 1e-12


def test_periodic_and_bounded():
    rng = np.random.default_rng(11)
    for _ in range(30):
        spec, theta, x = random_instance(rng)
        f0 = evaluate_exact(spec, theta, x)
        assert abs(f0) <= spec.m_norm + 1e-12
        for i in range(spec.d):
            e = np.zeros(spec.d)
            e[i] = 2 * np.pi
            assert abs(evaluate_exact(spec, theta, x + e) - f0) < 1e-12
            assert abs(evaluate_exact(spec, theta, x - 3 * e) - f0) < 1e-12


def test_batch_matches_pointwise():
    spec = ModelSpec(3, 2, 2)
    theta = random_parameters(spec, 5)
    X = np.random.default_rng(0).uniform(0, 2 * np.pi, (20, 3))
    batch = QuantumModel(spec, theta)(X)
    np.testing.assert_allclose(batch, [evaluate_exact(spec, theta, x) for x in X], atol=1e-14)


def test_random_parameters_determinism():
    spec = ModelSpec(2, 2, 2)
    a, b = random_parameters(spec, 42), random_parameters(spec, 42)
    np.testing.assert_array_equal(a, b)
    assert np.any(a != random_parameters(spec, 43))
    assert a.min() >= 0 and a.max() < 2 * np.pi


def test_shots_on_eigenstate():
    spec = ModelSpec(1, 1, 1)
    assert estimate_with_shots(spec, np.zeros(6), [0.0], 1000, seed=1) == 1.0


def test_shots_zero_rejected():
    spec = ModelSpec(1, 1, 1)
    with pytest.raises(ValueError):
        estimate_with_shots(spec, np.zeros(6), [0.0], 0, seed=1)


def test_shots_large_count_near_zero():
    spec = ModelSpec(1, 1, 1)
    assert abs(estimate_with_shots(spec, np.zeros(6), [np.pi / 2], 10**6, seed=3)) < 0.005


def test_shots_deterministic_and_batch_independent():
    spec = ModelSpec(2, 2, 1)
    theta = random_parameters(spec, 0)
    X = np.random.default_rng(1).uniform(0, 2 * np.pi, (8, 2))
    full = estimate_batch(spec, theta, X, 50, seed=9)
    np.testing.assert_array_equal(full, estimate_batch(spec, theta, X, 50, seed=9))
    split = np.concatenate([estimate_batch(spec, theta, X[:3], 50, seed=9),
                            estimate_batch(spec, theta, X[3:], 50, seed=9, offset=3)])
    np.testing.assert_array_equal(full, split)
    assert estimate_with_shots(spec, theta, X[5], 50, seed=9, call_index=5) == full[5]


@pytest.mark.parametrize("obs", [None, Observable(((0.7, "ZX"), (-0.3, "YI")))])
def test_shots_unbiased(obs):
    spec = ModelSpec(2, 1, 1, observable=obs)
    theta = random_parameters(spec, 4)
    x = np.array([0.3, 1.7])
    reps, shots = 10_000, 100
    est = estimate_batch(spec, theta, np.tile(x, (reps, 1)), shots, seed=123)
    exact = evaluate_exact(spec, theta, x)
    se = est.std(ddof=1) / np.sqrt(reps)
    assert abs(est.mean() - exact) < 4 * se
    assert np.all(np.abs(est) <= spec.m_norm + 1e-12)


def test_parameter_shift_vs_finite_differences_50_instances():
    rng = np.random.default_rng(2025)
    worst = 0.0
    for _ in range(50):
        spec, theta, x = random_instance(rng)
        g = gradient_parameter_shift(spec, theta, x)
        worst = max(worst, np.max(np.abs(g - central_difference(spec, theta, x))))
    assert worst < 1e-6


def test_parameter_shift_cosine_model():
    spec = ModelSpec(1, 1, 1)
    theta = np.zeros(6)
    g = gradient_parameter_shift(spec, theta, [0.0])
    np.testing.assert_allclose(g, central_difference(spec, theta, [0.0]), atol=1e-9)
    # at x=0 every RX angle enters as cos(sum of angles); derivative -sin(0) = 0
    np.testing.assert_allclose(g, 0.0, atol=1e-12)
    g = gradient_parameter_shift(spec, theta, [0.4])
    # RX angle of the last block shifts the argument of cos(x + alpha)
    assert g[3] == pytest.approx(-np.sin(0.4), abs=1e-12)


def test_gradient_zero_for_commuting_parameter():
    # with the first-applied RX angle at zero, the first RZ acts on |0>
    rng = np.random.default_rng(5)
    for d in (1, 2, 3):
        spec = ModelSpec(d, 2, 2)
        theta = rng.uniform(0, 2 * np.pi, spec.n_params)
        theta[2] = 0.0
        x = rng.uniform(0, 2 * np.pi, d)
        assert abs(gradient_parameter_shift(spec, theta, x)[1]) < 1e-10


def test_batched_shift_gradient_shape():
    spec = ModelSpec(2, 1, 1)
    theta = random_parameters(spec, 0)
    X = np.random.default_rng(0).uniform(0, 6, (4, 2))
    G = gradient_parameter_shift(spec, theta, X)
    assert G.shape == (4, spec.n_params)
    np.testing.assert_allclose(G[2], gradient_parameter_shift(spec, theta, X[2]), atol=1e-14)


def test_adjoint_matches_parameter_shift():
    rng = np.random.default_rng(8)
    for _ in range(10):
        spec, theta, _ = random_instance(rng)
        X = rng.uniform(0, 2 * np.pi, (6, spec.d))
        w = rng.normal(size=6)
        vals, g = value_and_grad(spec, theta, X, w)
        np.testing.assert_allclose(vals, evaluate_batch(spec, theta, X), atol=1e-13)
        np.testing.assert_allclose(g, w @ gradient_parameter_shift(spec, theta, X), atol=1e-12)


def test_mse_and_grad():
    spec = ModelSpec(2, 2, 1)
    rng = np.random.default_rng(1)
    theta = random_parameters(spec, 1)
    X = rng.uniform(0, 2 * np.pi, (10, 2))
    y = rng.normal(size=10)
    loss, g = mse_and_grad(spec, theta, X, y)
    assert loss == pytest.approx(np.mean((evaluate_batch(spec, theta, X) - y) ** 2), rel=1e-14)
    fd = np.empty_like(g)
    for k in range(spec.n_params):
        e = np.zeros_like(theta)
        e[k] = FD_STEP
        fd[k] = (mse_and_grad(spec, theta + e, X, y)[0] - mse_and_grad(spec, theta - e, X, y)[0]) / (2 * FD_STEP)
    np.testing.assert_allclose(g, fd, atol=1e-8)


def test_spec_json_roundtrip():
    spec = ModelSpec(2, 3, 1, observable=Observable(((0.5, "ZZ"), (0.5, "XI"))), seed=9)
    data = spec.to_json()
    assert data["schema_version"] == 1
    assert ModelSpec.from_json(data) == spec
    assert ModelSpec.from_json({"d": 1, "L": 2, "B": 1}).observable == Observable.z(1)
