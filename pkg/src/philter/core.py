"""Dense state-vector simulator.

Qubit ordering is MSB-first: qubit 0 is the most significant bit of the flat
amplitude index, so a register read off qubits ``0..m-1`` is the integer whose
binary expansion is the bitstring left to right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from philter.errors import CapacityError

MAX_QUBITS = 26
NORM_ATOL = 1e-10

SQRT_HALF = 1.0 / np.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def phase(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)])


@dataclass(frozen=True)
class Unitary:
    """A ``d x d`` unitary with ``d`` a power of two."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"unitary must be square, got shape {u.shape}")
        d = u.shape[0]
        if d < 1 or d & (d - 1):
            raise ValueError(f"unitary dimension {d} is not a power of two")
        if not np.allclose(u @ u.conj().T, np.eye(d), atol=1e-10, rtol=0):
            raise ValueError("matrix is not unitary within 1e-10")
        object.__setattr__(self, "matrix", u)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def dagger(self) -> "Unitary":
        return Unitary(self.matrix.conj().T)


def _as_matrix(u) -> np.ndarray:
    if isinstance(u, Unitary):
        return u.matrix
    return Unitary(u).matrix


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        if self.num_qubits > MAX_QUBITS:
            raise CapacityError(
                f"{self.num_qubits} qubits exceeds simulator capacity of {MAX_QUBITS}"
            )
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 1 << self.num_qubits:
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes, got {self.amplitudes.size}"
            )

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        if num_qubits > MAX_QUBITS:
            raise CapacityError(
                f"{num_qubits} qubits exceeds simulator capacity of {MAX_QUBITS}"
            )
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        state = cls.zero(num_qubits)
        state.amplitudes[0] = 0.0
        state.amplitudes[index] = 1.0
        return state

    @classmethod
    def from_bitstring(cls, bits: str) -> "StateVector":
        return cls.basis(len(bits), int(bits, 2) if bits else 0)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self) -> np.ndarray:
        """View of the amplitudes with one axis per qubit."""
        return self.amplitudes.reshape((2,) * self.num_qubits)


@dataclass(frozen=True)
class RegisterLayout:
    """Energy register first, then the state register, then the optional ancilla."""

    m: int
    n: int
    ancilla: int = 0

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError("register sizes must be non-negative")
        if self.ancilla not in (0, 1):
            raise ValueError("ancilla count must be 0 or 1")

    @property
    def total(self) -> int:
        return self.m + self.n + self.ancilla

    @property
    def energy_qubits(self) -> list[int]:
        return list(range(self.m))

    @property
    def state_qubits(self) -> list[int]:
        return list(range(self.m, self.m + self.n))

    @property
    def ancilla_qubit(self) -> int:
        if not self.ancilla:
            raise ValueError("layout has no ancilla")
        return self.m + self.n


def _check_targets(num_qubits: int, targets: Sequence[int]) -> list[int]:
    targets = [int(q) for q in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate qubits in {targets}")
    for q in targets:
        if not 0 <= q < num_qubits:
            raise ValueError(f"qubit {q} out of range for {num_qubits}-qubit state")
    return targets


def _apply_matrix(psi: np.ndarray, u: np.ndarray, axes: list[int]) -> np.ndarray:
    """Apply ``u`` to the given axes of a rank-N tensor, returning a new tensor."""
    k = len(axes)
    front = list(range(k))
    moved = np.moveaxis(psi, axes, front)
    shape = moved.shape
    out = (u @ moved.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(out, front, axes)


def apply_unitary(state: StateVector, u, targets: Sequence[int]) -> StateVector:
    """Apply ``u`` to ``targets`` (``targets[0]`` is the most significant)."""
    mat = _as_matrix(u)
    targets = _check_targets(state.num_qubits, targets)
    if mat.shape[0] != 1 << len(targets):
        raise ValueError(
            f"unitary of dimension {mat.shape[0]} does not match {len(targets)} targets"
        )
    if not targets:
        return state.copy()
    out = _apply_matrix(state.tensor(), mat, targets)
    return StateVector(state.num_qubits, np.ascontiguousarray(out).reshape(-1))


def apply_controlled_unitary(
    state: StateVector, control: int, u, targets: Sequence[int]
) -> StateVector:
    """Apply ``u`` to ``targets`` only where ``control`` is 1."""
    mat = _as_matrix(u)
    targets = _check_targets(state.num_qubits, targets)
    _check_targets(state.num_qubits, [control])
    if control in targets:
        raise ValueError(f"control qubit {control} overlaps targets {targets}")
    if mat.shape[0] != 1 << len(targets):
        raise ValueError(
            f"unitary of dimension {mat.shape[0]} does not match {len(targets)} targets"
        )
    amps = state.amplitudes.copy()
    psi = amps.reshape((2,) * state.num_qubits)
    index = [slice(None)] * state.num_qubits
    index[control] = 1
    index = tuple(index)
    # axes of the control=1 slice lose the control axis
    sub_axes = [q - (q > control) for q in targets]
    psi[index] = _apply_matrix(psi[index], mat, sub_axes)
    return StateVector(state.num_qubits, amps)


def _register_transform(state: StateVector, qubits: Sequence[int], inverse: bool) -> StateVector:
    qubits = _check_targets(state.num_qubits, qubits)
    k = len(qubits)
    if k == 0:
        return state.copy()
    front = list(range(k))
    moved = np.moveaxis(state.tensor(), qubits, front)
    shape = moved.shape
    flat = moved.reshape(1 << k, -1)
    # inverse QFT: |x> -> 2^{-k/2} sum_y exp(-2 pi i x y / 2^k) |y>, which is numpy's forward FFT
    if inverse:
        flat = np.fft.fft(flat, axis=0, norm="ortho")
    else:
        flat = np.fft.ifft(flat, axis=0, norm="ortho")
    out = np.moveaxis(flat.reshape(shape), front, qubits)
    return StateVector(state.num_qubits, np.ascontiguousarray(out).reshape(-1))


def inverse_qft(state: StateVector, qubits: Sequence[int]) -> StateVector:
    """Inverse quantum Fourier transform on ``qubits`` (``qubits[0]`` most significant).

    A register holding ``sum_k exp(2 pi i y k / 2^m) |k>`` is mapped to ``|y>``.
    """
    return _register_transform(state, qubits, inverse=True)


def qft(state: StateVector, qubits: Sequence[int]) -> StateVector:
    return _register_transform(state, qubits, inverse=False)


def _marginal(state: StateVector, qubits: list[int]) -> np.ndarray:
    probs = state.probabilities().reshape((2,) * state.num_qubits)
    others = tuple(q for q in range(state.num_qubits) if q not in qubits)
    marg = probs.sum(axis=others) if others else probs
    # sum() keeps the remaining axes in ascending qubit order; reorder to the requested order
    order = sorted(qubits)
    marg = np.transpose(marg, [order.index(q) for q in qubits]) if qubits else marg
    return np.asarray(marg).reshape(-1)


def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Distribution over the integer read from ``qubits`` (MSB first)."""
    return _marginal(state, _check_targets(state.num_qubits, qubits))


def probability_of(state: StateVector, qubits: Sequence[int], prefix: str) -> float:
    """Probability that the listed qubits read out starting with ``prefix``."""
    qubits = _check_targets(state.num_qubits, qubits)
    if len(prefix) > len(qubits):
        raise ValueError(f"prefix {prefix!r} longer than {len(qubits)} qubits")
    if not prefix:
        return float(state.probabilities().sum())
    marg = _marginal(state, qubits[: len(prefix)])
    return float(marg[int(prefix, 2)])


def measure(
    state: StateVector, qubits: Sequence[int], rng: np.random.Generator
) -> tuple[str, StateVector]:
    """Sample the listed qubits and return the bitstring and the collapsed state."""
    qubits = _check_targets(state.num_qubits, qubits)
    k = len(qubits)
    if k == 0:
        return "", state.copy()
    marg = _marginal(state, qubits)
    total = marg.sum()
    outcome = int(rng.choice(marg.size, p=marg / total))
    bits = format(outcome, f"0{k}b")
    return bits, collapse(state, qubits, bits)


def collapse(state: StateVector, qubits: Sequence[int], bits: str) -> StateVector:
    """Project onto ``qubits == bits`` and renormalise."""
    qubits = _check_targets(state.num_qubits, qubits)
    if len(bits) != len(qubits):
        raise ValueError("bitstring length does not match qubit count")
    psi = state.tensor()
    out = np.zeros_like(psi)
    index = [slice(None)] * state.num_qubits
    for q, b in zip(qubits, bits):
        index[q] = int(b)
    index = tuple(index)
    out[index] = psi[index]
    norm = np.linalg.norm(out)
    if norm == 0:
        raise ValueError(f"outcome {bits} has zero probability")
    return StateVector(state.num_qubits, (out / norm).reshape(-1))


def tensor_product(*states: StateVector) -> StateVector:
    amps = np.ones(1, dtype=complex)
    n = 0
    for s in states:
        amps = np.kron(amps, s.amplitudes)
        n += s.num_qubits
    return StateVector(n, amps)


def apply_to_each(state: StateVector, gate, qubits: Iterable[int]) -> StateVector:
    for q in qubits:
        state = apply_unitary(state, gate, [q])
    return state
