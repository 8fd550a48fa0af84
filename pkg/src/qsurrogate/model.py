"""Data re-uploading model built from strongly entangling blocks.

The circuit on ``n = d`` qubits is ``W(L) S(x) ... W(1) S(x) W(0)`` applied to
``|0...0>``, where ``S(x)`` applies ``RX(x_i)`` to qubit ``i`` and every
trainable block ``W(j)`` consists of ``B`` block layers. Block layer ``b``
(1-based) applies ``Rot`` to each qubit and then ``CNOT(i, (i + r_b) mod n)``
for ``i = 0..n-1`` with range ``r_b = ((b - 1) mod (n - 1)) + 1``. For
``b < n`` this is simply ``r_b = b``; the wrap keeps control and target
distinct when ``B >= n``. A single qubit has no entanglers.

Parameters are indexed ``(layer, block_layer, qubit, angle)`` in row-major
order, with angle 0/1/2 being alpha/beta/gamma of
``Rot(alpha, beta, gamma) = RX(alpha) RZ(beta) RX(gamma)``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import statevector as sv
from .errors import ResourceError
from .seeding import derive_seed, rng_for
from .statevector import Observable

# Upper bound on complex amplitudes held at once during batched simulation.
_CHUNK_AMPLITUDES = 1 << 22


@dataclass(frozen=True)
class ModelSpec:
    d: int
    L: int
    B: int
    observable: Observable | None = None
    seed: int = 0
    _tape: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("d", "L", "B"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.d > sv.MAX_QUBITS:
            raise ResourceError(f"d={self.d} exceeds the simulator cap of {sv.MAX_QUBITS} qubits")
        if self.observable is None:
            object.__setattr__(self, "observable", Observable.z(self.d, 0))
        elif self.observable.n_qubits != self.d:
            raise ValueError("observable width must equal d")
        object.__setattr__(self, "_tape", tuple(_build_tape(self.d, self.L, self.B)))

    @property
    def n_qubits(self) -> int:
        return self.d

    @property
    def n_params(self) -> int:
        return (self.L + 1) * self.B * self.d * 3

    @property
    def m_norm(self) -> float:
        return self.observable.operator_norm

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "d": self.d,
            "L": self.L,
            "B": self.B,
            "observable": self.observable.to_json(),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModelSpec":
        obs = data.get("observable")
        return cls(
            d=int(data["d"]),
            L=int(data["L"]),
            B=int(data["B"]),
            observable=None if obs is None else Observable.from_json(obs),
            seed=int(data.get("seed", 0)),
        )


def _build_tape(d: int, L: int, B: int) -> list[tuple]:
    tape: list[tuple] = []
    k = 0

    def block():
        nonlocal k
        for b in range(1, B + 1):
            for q in range(d):
                # Rot(a, b, g) = RX(a) RZ(b) RX(g): gamma acts first
                tape.append(("rot", "X", q, k + 2))
                tape.append(("rot", "Z", q, k + 1))
                tape.append(("rot", "X", q, k))
                k += 3
            if d > 1:
                r = (b - 1) % (d - 1) + 1
                for q in range(d):
                    tape.append(("cnot", q, (q + r) % d))

    block()
    for _ in range(L):
        for q in range(d):
            tape.append(("enc", q, q))
        block()
    return tape


def _as_inputs(spec: ModelSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != spec.d:
        raise ValueError(f"inputs must have {spec.d} features, got shape {X.shape}")
    return X


def _as_theta(spec: ModelSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != spec.n_params:
        raise ValueError(f"expected {spec.n_params} parameters, got {theta.shape[-1]}")
    return theta


def simulate(spec: ModelSpec, thetas: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Final states for every ``(theta_k, x_i)`` pair.

    ``thetas`` has shape ``(K, P)`` and ``X`` shape ``(n, d)``; row
    ``k * n + i`` of the returned ``(K * n, 2**d)`` array is
    ``U(x_i, theta_k)|0>``.
    """
    K, n = thetas.shape[0], X.shape[0]
    nq = spec.d
    amps = np.zeros((K * n, 1 << nq), dtype=complex)
    amps[:, 0] = 1.0
    for op in spec._tape:
        if op[0] == "rot":
            _, axis, q, k = op
            angle = thetas[0, k] if K == 1 else np.repeat(thetas[:, k], n)
            sv.apply_rotation(amps, nq, q, axis, angle)
        elif op[0] == "enc":
            _, q, i = op
            angle = X[:, i] if K == 1 else np.tile(X[:, i], K)
            sv.apply_rotation(amps, nq, q, "X", angle)
        else:
            sv.apply_cnot(amps, nq, op[1], op[2])
    return amps


def _chunks(n_rows: int, rows_per_point: int, nq: int):
    step = max(1, _CHUNK_AMPLITUDES // ((1 << nq) * rows_per_point))
    for start in range(0, n_rows, step):
        yield slice(start, min(start + step, n_rows))


def evaluate_batch(spec: ModelSpec, theta, X) -> np.ndarray:
    """``f_theta(x)`` for each row of ``X``."""
    theta = _as_theta(spec, theta)[None, :]
    X = _as_inputs(spec, X)
    out = np.empty(X.shape[0])
    for sl in _chunks(X.shape[0], 1, spec.d):
        amps = simulate(spec, theta, X[sl])
        out[sl] = sv.expectation_batch(amps, spec.d, spec.observable)
    return out


def evaluate_exact(spec: ModelSpec, theta, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.d,):
        raise ValueError(f"x must have shape ({spec.d},), got {x.shape}")
    return float(evaluate_batch(spec, theta, x[None, :])[0])


def _shot_means(term_exps: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    # each single shot of a Pauli word gives +1 with probability (1 + <P>)/2
    p = np.clip((1.0 + term_exps) / 2.0, 0.0, 1.0)
    k = rng.binomial(shots, p)
    return (2.0 * k - shots) / shots


def estimate_batch(spec: ModelSpec, theta, X, shots: int, seed: int, offset: int = 0) -> np.ndarray:
    """Shot-noise estimates, one independent stream per row.

    Row ``i`` draws from the stream keyed by ``(seed, offset + i)``, so the
    result for a point does not depend on how rows are batched. Multi-term
    observables sample every term independently with ``shots`` shots and
    combine the sample means linearly; the estimator variance is the
    coefficient-weighted sum of the per-term variances.
    """
    if int(shots) != shots or shots < 1:
        raise ValueError("shots must be a positive integer")
    shots = int(shots)
    theta = _as_theta(spec, theta)
    X = _as_inputs(spec, X)
    amps = simulate(spec, theta[None, :], X)
    exps = sv.pauli_expectations(amps, spec.d, spec.observable)
    coefs = spec.observable.coefficients
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        rng = np.random.default_rng(derive_seed(seed, "shots", offset + i))
        out[i] = _shot_means(exps[i], shots, rng) @ coefs
    return out


def estimate_with_shots(spec: ModelSpec, theta, x, shots: int, seed: int, call_index: int = 0) -> float:
    """Sample mean of ``shots`` single-shot measurements of the observable."""
    x = np.asarray(x, dtype=float)
    return float(estimate_batch(spec, theta, x[None, :], shots, seed, offset=call_index)[0])


def gradient_parameter_shift(spec: ModelSpec, theta, x) -> np.ndarray:
    """Two-term shift-rule gradient ``(f(t + pi/2) - f(t - pi/2)) / 2``.

    ``x`` may be a single point (returns shape ``(P,)``) or a batch of points
    (returns ``(n, P)``).
    """
    theta = _as_theta(spec, theta)
    single = np.asarray(x).ndim == 1
    X = _as_inputs(spec, x)
    P = spec.n_params
    shifts = np.concatenate([np.eye(P), -np.eye(P)]) * (np.pi / 2)
    thetas = theta[None, :] + shifts
    grads = np.empty((X.shape[0], P))
    for sl in _chunks(X.shape[0], 2 * P, spec.d):
        amps = simulate(spec, thetas, X[sl])
        vals = sv.expectation_batch(amps, spec.d, spec.observable)
        vals = vals.reshape(2 * P, -1)
        grads[sl] = ((vals[:P] - vals[P:]) / 2.0).T
    return grads[0] if single else grads


def value_and_grad(spec: ModelSpec, theta, X, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """Outputs ``f(x_i)`` and the gradient of ``sum_i w_i f(x_i)``.

    Reverse-mode (adjoint) sweep over the statevector: one forward pass plus
    one backward pass, independent of the number of parameters. ``weights``
    may be an array, ``None`` (all ones) or a callable
    ``weights(values, rows)`` receiving the outputs of a chunk of rows
    before its backward pass, which lets a loss gradient be taken in one
    sweep.
    """
    theta = _as_theta(spec, theta)
    X = _as_inputs(spec, X)
    if weights is None:
        weights = np.ones(X.shape[0])
    nq = spec.d
    values = np.empty(X.shape[0])
    grad = np.zeros(spec.n_params)
    for sl in _chunks(X.shape[0], 3, nq):
        xs = X[sl]
        psi = simulate(spec, theta[None, :], xs)
        values[sl] = sv.expectation_batch(psi, nq, spec.observable)
        lam = np.zeros_like(psi)
        for coef, word in spec.observable.terms:
            lam += coef * sv.apply_pauli_word(psi, nq, word)
        w = weights(values[sl], sl) if callable(weights) else np.asarray(weights, dtype=float)[sl]
        lam *= w[:, None]
        for op in reversed(spec._tape):
            if op[0] == "rot":
                _, axis, q, k = op
                p_psi = sv.apply_pauli(psi, nq, q, axis)
                grad[k] += np.vdot(lam, p_psi).imag
                sv.apply_rotation(psi, nq, q, axis, -theta[k])
                sv.apply_rotation(lam, nq, q, axis, -theta[k])
            elif op[0] == "enc":
                _, q, i = op
                sv.apply_rotation(psi, nq, q, "X", -xs[:, i])
                sv.apply_rotation(lam, nq, q, "X", -xs[:, i])
            else:
                sv.apply_cnot(psi, nq, op[1], op[2])
                sv.apply_cnot(lam, nq, op[1], op[2])
    return values, grad


def mse_and_grad(spec: ModelSpec, theta, X, y) -> tuple[float, np.ndarray]:
    """Mean squared error over ``(X, y)`` and its gradient in ``theta``."""
    y = np.asarray(y, dtype=float)
    n = y.size
    values, grad = value_and_grad(spec, theta, X, lambda v, sl: 2.0 * (v - y[sl]) / n)
    return float(np.mean((values - y) ** 2)), grad


def random_parameters(spec: ModelSpec, seed: int) -> np.ndarray:
    """I.i.d. uniform angles on ``[0, 2 pi)``."""
    return rng_for(seed, "theta").uniform(0.0, 2 * np.pi, spec.n_params)


def model_hash(spec: ModelSpec, theta) -> str:
    h = hashlib.sha256(json.dumps(spec.to_json(), sort_keys=True).encode())
    h.update(np.ascontiguousarray(theta, dtype="<f8").tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class QuantumModel:
    """A re-uploading model together with its current parameters."""

    spec: ModelSpec
    theta: np.ndarray

    @cached_property
    def _theta(self) -> np.ndarray:
        return _as_theta(self.spec, self.theta)

    def __call__(self, X) -> np.ndarray:
        return evaluate_batch(self.spec, self._theta, X)
