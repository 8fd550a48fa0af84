"""Minimal exact statevector simulator.

Conventions
-----------
* Qubit 0 is the most significant bit of the basis index, so ``|10>`` on two
  qubits is index 2.
* ``RX(phi) = exp(-i phi X / 2)``, ``RZ(phi) = exp(-i phi Z / 2)``.
* ``Rot(a, b, g)`` is the operator product ``RX(a) @ RZ(b) @ RX(g)``; acting
  on a state, ``RX(g)`` is applied first.

The kernels work on amplitude arrays of shape ``(M, 2**n)`` (a batch of ``M``
states) and mutate them in place through strided reshapes. No dense
``2**n x 2**n`` operator is ever built here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError

MAX_QUBITS = 24

_PAULI_LETTERS = frozenset("IXYZ")


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise IndexError(f"qubit index {q} out of range for {n} qubits")


def _view(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    # (batch, high bits, target bit, low bits)
    return amps.reshape(amps.shape[0], 1 << q, 2, 1 << (n - q - 1))


def _angle_column(angles, m: int) -> np.ndarray:
    a = np.asarray(angles, dtype=float)
    if a.ndim == 0:
        return np.full((m, 1, 1), float(a))
    return a.reshape(m, 1, 1)


def apply_rotation(amps: np.ndarray, n: int, qubit: int, pauli: str, angles) -> np.ndarray:
    """Apply ``exp(-i angle P / 2)`` on ``qubit`` to every state in the batch.

    ``angles`` is a scalar or an array with one angle per batch row.
    """
    v = _view(amps, n, qubit)
    half = _angle_column(angles, amps.shape[0]) / 2.0
    if pauli == "Z":
        v[:, :, 0, :] *= np.exp(-1j * half)
        v[:, :, 1, :] *= np.exp(1j * half)
        return amps
    c, s = np.cos(half), np.sin(half)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :].copy()
    if pauli == "X":
        v[:, :, 0, :] = c * a0 - 1j * s * a1
        v[:, :, 1, :] = c * a1 - 1j * s * a0
    elif pauli == "Y":
        v[:, :, 0, :] = c * a0 - s * a1
        v[:, :, 1, :] = c * a1 + s * a0
    else:
        raise ValueError(f"unknown rotation axis {pauli!r}")
    return amps


def apply_cnot(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    """Flip ``target`` wherever ``control`` is 1, in place."""
    if control == target:
        raise IndexError("CNOT control and target must differ")
    v = amps.reshape((amps.shape[0],) + (2,) * n)
    i10 = [slice(None)] * (n + 1)
    i11 = [slice(None)] * (n + 1)
    i10[control + 1] = i11[control + 1] = 1
    i10[target + 1], i11[target + 1] = 0, 1
    i10, i11 = tuple(i10), tuple(i11)
    tmp = v[i10].copy()
    v[i10] = v[i11]
    v[i11] = tmp
    return amps


def apply_pauli(amps: np.ndarray, n: int, qubit: int, letter: str) -> np.ndarray:
    """Return ``P_qubit |psi>`` as a new array."""
    if letter == "I":
        return amps.copy()
    out = np.empty_like(amps)
    v, w = _view(amps, n, qubit), _view(out, n, qubit)
    if letter == "X":
        w[:, :, 0, :] = v[:, :, 1, :]
        w[:, :, 1, :] = v[:, :, 0, :]
    elif letter == "Y":
        w[:, :, 0, :] = -1j * v[:, :, 1, :]
        w[:, :, 1, :] = 1j * v[:, :, 0, :]
    elif letter == "Z":
        w[:, :, 0, :] = v[:, :, 0, :]
        w[:, :, 1, :] = -v[:, :, 1, :]
    else:
        raise ValueError(f"unknown Pauli letter {letter!r}")
    return out


def apply_pauli_word(amps: np.ndarray, n: int, word: str) -> np.ndarray:
    out = amps
    for q, letter in enumerate(word):
        if letter != "I":
            out = apply_pauli(out, n, q, letter)
    return out if out is not amps else amps.copy()


@dataclass(frozen=True)
class Observable:
    """Real linear combination of Pauli words.

    ``terms`` holds ``(coefficient, word)`` pairs where ``word[q]`` is the
    Pauli letter acting on qubit ``q``. Duplicate words are merged on
    construction so ``operator_norm`` (sum of absolute coefficients) is a
    valid upper bound on the spectral norm.
    """

    terms: tuple[tuple[float, str], ...]
    n_qubits: int = field(init=False)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("observable needs at least one term")
        merged: dict[str, float] = {}
        widths = set()
        for coef, word in self.terms:
            word = str(word).upper()
            if not word or not set(word) <= _PAULI_LETTERS:
                raise ValueError(f"invalid Pauli word {word!r}")
            widths.add(len(word))
            merged[word] = merged.get(word, 0.0) + float(coef)
        if len(widths) != 1:
            raise ValueError("all Pauli words must act on the same number of qubits")
        object.__setattr__(self, "terms", tuple((c, w) for w, c in merged.items()))
        object.__setattr__(self, "n_qubits", widths.pop())

    @classmethod
    def z(cls, n_qubits: int, qubit: int = 0) -> "Observable":
        _check_qubit(qubit, n_qubits)
        word = "".join("Z" if q == qubit else "I" for q in range(n_qubits))
        return cls(((1.0, word),))

    @property
    def operator_norm(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def words(self) -> list[str]:
        return [w for _, w in self.terms]

    def to_json(self) -> list:
        return [[c, w] for c, w in self.terms]

    @classmethod
    def from_json(cls, data) -> "Observable":
        return cls(tuple((float(c), str(w)) for c, w in data))


def pauli_expectations(amps: np.ndarray, n: int, obs: Observable) -> np.ndarray:
    """Per-term expectations ``<psi|P_k|psi>``, shape ``(M, n_terms)``."""
    if obs.n_qubits != n:
        raise ValueError(f"observable acts on {obs.n_qubits} qubits, state has {n}")
    out = np.empty((amps.shape[0], len(obs.terms)))
    probs = None
    for k, word in enumerate(obs.words):
        if set(word) <= {"I", "Z"}:
            if probs is None:
                probs = np.abs(amps) ** 2
            out[:, k] = probs @ _z_signs(word)
        else:
            pw = apply_pauli_word(amps, n, word)
            out[:, k] = np.einsum("mi,mi->m", amps.conj(), pw).real
    return out


def _z_signs(word: str) -> np.ndarray:
    n = len(word)
    idx = np.arange(1 << n)
    signs = np.ones(1 << n)
    for q, letter in enumerate(word):
        if letter == "Z":
            bit = (idx >> (n - 1 - q)) & 1
            signs *= 1 - 2 * bit
    return signs


def expectation_batch(amps: np.ndarray, n: int, obs: Observable) -> np.ndarray:
    return pauli_expectations(amps, n, obs) @ obs.coefficients


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class Gate:
    """A gate from the simulator's small gate set.

    ``kind`` is one of ``"RX"``, ``"RZ"``, ``"ROT"`` (three angles) or
    ``"CNOT"`` (``targets = (control, target)``).
    """

    kind: str
    targets: tuple[int, ...]
    angles: tuple[float, ...] = ()

    @classmethod
    def rx(cls, qubit: int, phi: float) -> "Gate":
        return cls("RX", (qubit,), (float(phi),))

    @classmethod
    def rz(cls, qubit: int, phi: float) -> "Gate":
        return cls("RZ", (qubit,), (float(phi),))

    @classmethod
    def rot(cls, qubit: int, alpha: float, beta: float, gamma: float) -> "Gate":
        return cls("ROT", (qubit,), (float(alpha), float(beta), float(gamma)))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls("CNOT", (control, target))

    def matrix(self) -> np.ndarray:
        """Local unitary (2x2, or 4x4 for CNOT with the control as high bit)."""
        if self.kind == "CNOT":
            m = np.eye(4, dtype=complex)
            m[[2, 3]] = m[[3, 2]]
            return m
        if self.kind == "RX":
            return _rx(self.angles[0])
        if self.kind == "RZ":
            return _rz(self.angles[0])
        if self.kind == "ROT":
            a, b, g = self.angles
            return _rx(a) @ _rz(b) @ _rx(g)
        raise ValueError(f"unknown gate kind {self.kind!r}")


def _rx(phi: float) -> np.ndarray:
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _rz(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def init_zero_state(n_qubits: int) -> StateVector:
    if n_qubits < 0:
        raise ValueError("n_qubits must be non-negative")
    if n_qubits > MAX_QUBITS:
        raise ResourceError(f"{n_qubits} qubits exceeds the simulator cap of {MAX_QUBITS}")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.n_qubits
    if len(set(gate.targets)) != len(gate.targets):
        raise IndexError(f"repeated target in {gate.targets}")
    for q in gate.targets:
        _check_qubit(q, n)
    amps = state.amplitudes.copy()[None, :]
    if gate.kind == "RX":
        apply_rotation(amps, n, gate.targets[0], "X", gate.angles[0])
    elif gate.kind == "RZ":
        apply_rotation(amps, n, gate.targets[0], "Z", gate.angles[0])
    elif gate.kind == "ROT":
        a, b, g = gate.angles
        q = gate.targets[0]
        apply_rotation(amps, n, q, "X", g)
        apply_rotation(amps, n, q, "Z", b)
        apply_rotation(amps, n, q, "X", a)
    elif gate.kind == "CNOT":
        apply_cnot(amps, n, *gate.targets)
    else:
        raise ValueError(f"unknown gate kind {gate.kind!r}")
    return StateVector(n, amps[0])


def expectation(state: StateVector, obs: Observable) -> float:
    """Return ``<psi|M|psi>`` (imaginary residue discarded)."""
    return float(expectation_batch(state.amplitudes[None, :], state.n_qubits, obs)[0])
