"""Quantum phase estimation: circuit simulation, closed-form output model and IQPE."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from philter.core import (
    MAX_QUBITS,
    H,
    RegisterLayout,
    StateVector,
    X,
    apply_controlled_unitary,
    apply_to_each,
    apply_unitary,
    inverse_qft,
    measure,
    rz,
)
from philter.errors import CapacityError
from philter.spectral import AnsatzSpec, SpectralModel, evolution_power, prepare_ansatz

DELTA_ZERO = 1e-12


def _check_capacity(total: int) -> None:
    if total > MAX_QUBITS:
        raise CapacityError(f"{total} qubits exceeds simulator capacity of {MAX_QUBITS}")


def run_qpe(model: SpectralModel, ansatz: AnsatzSpec, m: int) -> StateVector:
    """Gate-by-gate ``QPE(H) O |0>`` on an ``m``-qubit energy register.

    Energy qubit ``q`` controls ``U^(2^(m-1-q))``; powers come from the
    eigendecomposition, never from repeated products.
    """
    if m < 1:
        raise ValueError("energy register needs at least one qubit")
    layout = RegisterLayout(m, model.num_qubits)
    _check_capacity(layout.total)
    state = prepare_ansatz(ansatz, layout)
    state = apply_to_each(state, H, layout.energy_qubits)
    for q in layout.energy_qubits:
        u = evolution_power(model, 1 << (m - 1 - q))
        state = apply_controlled_unitary(state, q, u, layout.state_qubits)
    return inverse_qft(state, layout.energy_qubits)


def walsh_hadamard(arr: np.ndarray, block: int = 4) -> np.ndarray:
    """``H^{(x)m}`` along axis -2 of ``arr`` (length ``2^m``), returning a new array."""
    size, width = arr.shape[-2], arr.shape[-1]
    m = size.bit_length() - 1
    lead = arr.shape[:-2]
    out = arr.reshape(-1, size, width)
    batch = out.shape[0]
    done = 0
    while done < m:
        b = min(block, m - done)
        hb = _hadamard_block(b)
        lo = 1 << done
        hi = size >> (done + b)
        view = out.reshape(batch * hi, 1 << b, lo * width)
        out = np.matmul(hb, view)
        done += b
    return out.reshape(lead + (size, width))


_HADAMARD_CACHE: dict[int, np.ndarray] = {}


def _hadamard_block(b: int) -> np.ndarray:
    if b not in _HADAMARD_CACHE:
        h = np.ones((1, 1))
        for _ in range(b):
            h = np.block([[h, h], [h, -h]])
        _HADAMARD_CACHE[b] = h / 2 ** (b / 2)
    return _HADAMARD_CACHE[b]


class QpeCircuit:
    """Vectorised ``A = QPE(H) O`` and its inverse on arrays of shape ``(..., 2^m, 2^n)``.

    The controlled-evolution ladder is applied in the eigenbasis as the phase
    table ``exp(2 pi i frac(phi_j x))``, which equals the product of the
    controlled ``U^(2^k)`` gates. ``applications`` counts forward and inverse
    calls.
    """

    def __init__(self, model: SpectralModel, ansatz: AnsatzSpec, m: int):
        if m < 1:
            raise ValueError("energy register needs at least one qubit")
        self.model = model
        self.ansatz = ansatz
        self.m = m
        self.layout = RegisterLayout(m, model.num_qubits)
        _check_capacity(self.layout.total)
        self.size = 1 << m
        self.dim = model.dim
        self.prep = ansatz.unitary(self.dim)
        self.vecs = model.eigen.eigenvectors
        # O followed by the change to the eigenbasis; both act on the state register only
        # and so commute with the Walsh-Hadamard layer on the energy register
        self._into_eigen = self.prep.T @ self.vecs.conj()
        self._out_of_eigen = self.vecs.T @ self.prep.conj()
        x = np.arange(self.size, dtype=float)
        turns = np.mod(np.outer(x, model.phases), 1.0)
        self.ladder = np.exp(2j * math.pi * turns)
        self.applications = 0

    def forward_array(self, arr: np.ndarray) -> np.ndarray:
        self.applications += 1
        out = (walsh_hadamard(arr) @ self._into_eigen) * self.ladder
        return np.fft.fft(out @ self.vecs.T, axis=-2, norm="ortho")

    def inverse_array(self, arr: np.ndarray) -> np.ndarray:
        self.applications += 1
        out = np.fft.ifft(arr, axis=-2, norm="ortho")
        out = (out @ self.vecs.conj()) * self.ladder.conj()
        return walsh_hadamard(out @ self._out_of_eigen)

    def _shape(self) -> tuple[int, int]:
        return (self.size, self.dim)

    def forward(self, state: StateVector) -> StateVector:
        out = self.forward_array(state.amplitudes.reshape(self._shape()))
        return StateVector(state.num_qubits, out.reshape(-1))

    def inverse(self, state: StateVector) -> StateVector:
        out = self.inverse_array(state.amplitudes.reshape(self._shape()))
        return StateVector(state.num_qubits, out.reshape(-1))

    def zero_array(self) -> np.ndarray:
        arr = np.zeros(self._shape(), dtype=complex)
        arr[0, 0] = 1.0
        return arr

    def prepared_array(self) -> np.ndarray:
        """``A|0>`` (counts as one application)."""
        return self.forward_array(self.zero_array())


def qpe_amplitude(e_tilde: int, delta: float, x: int, m: int) -> float:
    """Probability of reading ``x`` for the eigenphase ``(e_tilde + delta) / 2^m``."""
    size = 1 << m
    if not (0 <= e_tilde < size and 0 <= x < size):
        raise ValueError("register values must lie in [0, 2^m)")
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    return float(_eps2(np.array([e_tilde - x + delta], dtype=float), m)[0])


def _eps2(offsets: np.ndarray, m: int) -> np.ndarray:
    """``sin^2(pi 2^m D) / (2^2m sin^2(pi D))`` for ``D = offsets / 2^m``."""
    size = float(1 << m)
    d = offsets / size
    out = np.ones_like(d)
    nz = np.abs(d) >= DELTA_ZERO
    dn = d[nz]
    out[nz] = np.sin(math.pi * size * dn) ** 2 / (size**2 * np.sin(math.pi * dn) ** 2)
    return out


def best_m_bit(phase: float, m: int) -> tuple[int, float]:
    """Floor-convention ``m``-bit approximation: ``phase * 2^m = e_tilde + delta``."""
    if not 0 <= phase < 1:
        raise ValueError(f"phase {phase} outside [0, 1)")
    scaled = phase * (1 << m)
    e_tilde = int(math.floor(scaled))
    return e_tilde, scaled - e_tilde


def qpe_distribution_for_phase(phase: float, m: int) -> np.ndarray:
    """Closed-form outcome distribution over all ``2^m`` register values."""
    e_tilde, delta = best_m_bit(phase, m)
    x = np.arange(1 << m, dtype=float)
    return _eps2(e_tilde - x + delta, m)


def qpe_error_bound(overlap_probability: float, c: int) -> float:
    """Lower bound on the mass within distance ``c`` of the eigenvalue."""
    if c < 1:
        raise ValueError("c must be a positive integer")
    if c == 1:
        return overlap_probability * 8.0 / math.pi**2
    return overlap_probability * (1.0 - 1.0 / (2.0 * (c - 1)))


@dataclass(frozen=True)
class QpeOutputModel:
    """Closed-form description of ``QPE(H) O|0>`` for one ansatz."""

    overlap_probabilities: np.ndarray
    e_tilde: np.ndarray
    deltas: np.ndarray
    m: int

    @classmethod
    def build(cls, model: SpectralModel, ansatz: AnsatzSpec, m: int) -> "QpeOutputModel":
        a = model.eigen.overlaps(ansatz.vector(model.dim))
        pairs = [best_m_bit(float(p), m) for p in model.phases]
        return cls(
            np.abs(a) ** 2,
            np.array([e for e, _ in pairs], dtype=int),
            np.array([d for _, d in pairs], dtype=float),
            m,
        )

    def eigenstate_distribution(self, j: int) -> np.ndarray:
        x = np.arange(1 << self.m, dtype=float)
        return _eps2(self.e_tilde[j] - x + self.deltas[j], self.m)

    def distribution(self) -> np.ndarray:
        out = np.zeros(1 << self.m)
        for j, w in enumerate(self.overlap_probabilities):
            if w > 0:
                out += w * self.eigenstate_distribution(j)
        return out


def closed_form_distribution(model: SpectralModel, ansatz: AnsatzSpec, m: int) -> np.ndarray:
    return QpeOutputModel.build(model, ansatz, m).distribution()


def iqpe_feedback_angle(measured_tail: str) -> float:
    """``-2 pi (0.0 b_1 b_2 ...)_2`` for the already measured lower bits."""
    frac = sum(int(b) / 2 ** (i + 2) for i, b in enumerate(measured_tail))
    return -2.0 * math.pi * frac


def run_iqpe_bit(
    model: SpectralModel,
    state: StateVector,
    layout: RegisterLayout,
    p: int,
    measured_tail: str,
    m: int,
    rng: np.random.Generator,
) -> tuple[int, StateVector]:
    """Extract bit ``p`` (1 = most significant) of an ``m``-bit phase with one ancilla.

    ``measured_tail`` holds bits ``p+1 .. m`` in that order. The ancilla is
    returned to ``|0>`` after the measurement.
    """
    if not layout.ancilla:
        raise ValueError("IQPE needs a layout with one ancilla qubit")
    if not 1 <= p <= m:
        raise ValueError(f"bit index {p} outside 1..{m}")
    if len(measured_tail) != m - p:
        raise ValueError(f"expected {m - p} tail bits, got {len(measured_tail)}")
    anc = layout.ancilla_qubit
    state = apply_unitary(state, H, [anc])
    state = apply_controlled_unitary(state, anc, evolution_power(model, 1 << (p - 1)), layout.state_qubits)
    state = apply_unitary(state, rz(iqpe_feedback_angle(measured_tail)), [anc])
    state = apply_unitary(state, H, [anc])
    bit, state = measure(state, [anc], rng)
    if bit == "1":
        state = apply_unitary(state, X, [anc])
    return int(bit), state


def iqpe(
    model: SpectralModel,
    state: StateVector,
    layout: RegisterLayout,
    m: int,
    rng: np.random.Generator,
    lowest_bit: int = 1,
) -> tuple[str, StateVector]:
    """Measure bits ``m`` down to ``lowest_bit``; return them most significant first."""
    tail = ""
    for p in range(m, lowest_bit - 1, -1):
        bit, state = run_iqpe_bit(model, state, layout, p, tail, m, rng)
        tail = str(bit) + tail
    return tail, state


def qpe_outcome_mass_within(
    distribution: np.ndarray, phase: float, c: int
) -> float:
    """Mass of outcomes ``x`` with circular distance ``|phase 2^m - x| <= c``."""
    size = distribution.size
    x = np.arange(size)
    diff = np.abs(phase * size - x)
    dist = np.minimum(diff, size - diff)
    return float(distribution[dist <= c + 1e-12].sum())


def eigenstate_layout_state(vector: np.ndarray, layout: RegisterLayout) -> StateVector:
    """State register holding ``vector`` with every other qubit in ``|0>``."""
    spec = AnsatzSpec.from_vector(vector)
    return prepare_ansatz(spec, layout)


__all__ = [
    "QpeCircuit",
    "QpeOutputModel",
    "best_m_bit",
    "closed_form_distribution",
    "iqpe",
    "iqpe_feedback_angle",
    "qpe_amplitude",
    "qpe_distribution_for_phase",
    "qpe_error_bound",
    "qpe_outcome_mass_within",
    "run_iqpe_bit",
    "run_qpe",
    "walsh_hadamard",
]
