"""Hamiltonian ingestion, energy/phase scaling, exact evolution and ansatz preparation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from philter.core import RegisterLayout, StateVector, Unitary, ry
from philter.errors import NotHermitianError, SpectrumRangeError

TWO_PI = 2.0 * math.pi
MAX_DIAG_DIM = 1 << 12

# H2 / STO-3G singlet subspace at 0.7348 Angstrom, basis {|HF>, |doubly excited>}
H2_GS_VECTOR = (-0.9938, 0.1115)
H2_ES_VECTOR = (0.1115, 0.9938)
H2_QUOTED_ENERGIES = (-1.8574, -0.22441)
H2_GS_BITS = "01001011101011100010"
H2_ES_BITS = "00001001001001101111"
H2_PAPER_ANGLES = {"quarter": 0.824, "half": 1.347}


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def overlaps(self, vector: np.ndarray) -> np.ndarray:
        """Amplitudes ``<E_j|vector>``."""
        return self.eigenvectors.conj().T @ vector


def _fix_phases(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size:
            c = col[nz[0]]
            vecs[:, j] = col * (abs(c) / c)
    return vecs


def _diagonalize_matrix(h: np.ndarray) -> EigenDecomposition:
    if h.shape[0] > MAX_DIAG_DIM:
        raise ValueError(f"dimension {h.shape[0]} exceeds dense diagonalisation limit {MAX_DIAG_DIM}")
    if np.max(np.abs(h - h.conj().T)) >= 1e-10:
        raise NotHermitianError("matrix is not Hermitian within 1e-10")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return EigenDecomposition(w, _fix_phases(v))


@dataclass(frozen=True)
class SpectralModel:
    """Hermitian ``matrix`` with the scaling ``H' = scale * (H + shift)``.

    The scaled spectrum must lie in ``(-2 pi, 0]`` so that ``exp(-i H')``
    has distinct eigenphases ``phi = -E'/(2 pi)`` in ``[0, 1)``.
    """

    matrix: np.ndarray
    scale: float = 1.0
    shift: float = 0.0
    eigen: EigenDecomposition = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h = np.asarray(self.matrix, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got {h.shape}")
        d = h.shape[0]
        if d & (d - 1):
            raise ValueError(f"dimension {d} is not a power of two")
        object.__setattr__(self, "matrix", h)
        eig = _diagonalize_matrix(h)
        object.__setattr__(self, "eigen", eig)
        scaled = self.scale * (eig.eigenvalues + self.shift)
        if np.any(scaled > 1e-12) or np.any(scaled <= -TWO_PI):
            raise SpectrumRangeError(_range_message(eig.eigenvalues, self.scale, self.shift))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @property
    def scaled_energies(self) -> np.ndarray:
        return np.minimum(self.scale * (self.eigen.eigenvalues + self.shift), 0.0)

    @property
    def phases(self) -> np.ndarray:
        """Eigenphases of ``exp(-i H')`` as fractions of a turn."""
        return np.mod(-self.scaled_energies / TWO_PI, 1.0)


def _range_message(energies, scale, shift) -> str:
    lo, hi = float(np.min(energies)) + shift, float(np.max(energies)) + shift
    msg = (
        f"scaled spectrum scale*(E+shift) must lie in (-2pi, 0]; "
        f"got E+shift in [{lo:.6g}, {hi:.6g}] with scale={scale:.6g}. "
    )
    if hi <= 0 and lo < 0:
        msg += f"Admissible scale range: (0, {TWO_PI / -lo:.6g})."
    elif lo >= 0 and hi > 0:
        msg += f"Admissible scale range: ({-TWO_PI / hi:.6g}, 0)."
    else:
        msg += "Spectrum straddles zero; adjust shift so that E+shift has a single sign."
    return msg


def diagonalize(model: SpectralModel) -> EigenDecomposition:
    """Eigenvalues ascending (energy units) with phase-fixed orthonormal eigenvectors."""
    return model.eigen


def evolution_unitary(model: SpectralModel, t: float) -> Unitary:
    """``exp(-i H' t)`` built from the eigendecomposition."""
    v = model.eigen.eigenvectors
    d = np.exp(-1j * model.scaled_energies * t)
    return Unitary((v * d) @ v.conj().T)


def evolution_power(model: SpectralModel, power: int) -> np.ndarray:
    """``U(1)^power`` with each eigenphase reduced mod one before exponentiating."""
    v = model.eigen.eigenvectors
    turns = np.mod(model.phases * float(power), 1.0)
    return (v * np.exp(2j * math.pi * turns)) @ v.conj().T


def phase_map(model: SpectralModel, energy: float) -> float:
    scaled = model.scale * (energy + model.shift)
    if scaled > 1e-12 or scaled <= -TWO_PI:
        raise SpectrumRangeError(
            f"energy {energy} maps to scaled value {scaled}, outside (-2pi, 0]"
        )
    return float(np.mod(-min(scaled, 0.0) / TWO_PI, 1.0))


def decode_energy(model: SpectralModel, y: int, m: int) -> float:
    """Energy represented by the ``m``-bit register value ``y``."""
    return -TWO_PI * (y / 2**m) / model.scale - model.shift + 0.0


def encode_energy(model: SpectralModel, energy: float, m: int) -> int:
    """Nearest ``m``-bit register value for ``energy``."""
    return int(round(phase_map(model, energy) * 2**m)) % (1 << m)


def model_from_spectrum(
    energies: Sequence[float], vectors: np.ndarray, scale: float = 1.0, shift: float = 0.0
) -> SpectralModel:
    """Build ``V diag(E) V^dagger`` from columns of ``vectors``."""
    v = np.asarray(vectors, dtype=complex)
    h = (v * np.asarray(energies, dtype=float)) @ v.conj().T
    return SpectralModel(0.5 * (h + h.conj().T), scale, shift)


def model_from_phases(phases: Sequence[float], vectors: np.ndarray | None = None) -> SpectralModel:
    """Model whose eigenphases are exactly ``phases`` (unit scale, zero shift)."""
    phases = np.asarray(phases, dtype=float)
    if vectors is None:
        vectors = np.eye(len(phases))
    return model_from_spectrum(-TWO_PI * phases, vectors)


def _h2_eigenvectors() -> np.ndarray:
    gs = np.array(H2_GS_VECTOR, dtype=float)
    es = np.array(H2_ES_VECTOR, dtype=float)
    gs /= np.linalg.norm(gs)
    es = es - (gs @ es) * gs
    es /= np.linalg.norm(es)
    return np.column_stack([gs, es])


def h2_energies(calibrated: bool = True) -> tuple[float, float]:
    """Ground and excited electronic energies (Hartree, no nuclear repulsion).

    ``calibrated`` places the eigenvalues exactly on the published 20-bit
    register values; otherwise the four/five-digit quoted values are used.
    """
    if not calibrated:
        return H2_QUOTED_ENERGIES
    return tuple(-TWO_PI * int(bits, 2) / 2**20 for bits in (H2_GS_BITS, H2_ES_BITS))


def h2_model(calibrated: bool = True) -> SpectralModel:
    return model_from_spectrum(h2_energies(calibrated), _h2_eigenvectors())


def h2_truncated_model(m: int) -> SpectralModel:
    """H2 with both eigenphases cut to the leading ``m`` published bits (exact at ``m``)."""
    phases = [int(bits[:m], 2) / 2**m for bits in (H2_GS_BITS, H2_ES_BITS)]
    return model_from_spectrum(-TWO_PI * np.array(phases), _h2_eigenvectors())


@dataclass(frozen=True)
class AnsatzSpec:
    """State-register preparation: an explicit vector, a basis index or ``Ry(theta)|0>``."""

    kind: str
    value: object

    def __post_init__(self):
        if self.kind not in ("vector", "basis", "ry"):
            raise ValueError(f"unknown ansatz kind {self.kind!r}")
        if self.kind == "vector":
            vec = np.asarray(self.value, dtype=complex).reshape(-1)
            if abs(np.linalg.norm(vec) - 1.0) > 1e-8:
                raise ValueError(f"ansatz vector norm {np.linalg.norm(vec):.3g} is not 1 within 1e-8")
            object.__setattr__(self, "value", vec / np.linalg.norm(vec))

    @classmethod
    def basis(cls, index: int) -> "AnsatzSpec":
        return cls("basis", int(index))

    @classmethod
    def rotation(cls, theta: float) -> "AnsatzSpec":
        return cls("ry", float(theta))

    @classmethod
    def from_vector(cls, vector) -> "AnsatzSpec":
        return cls("vector", vector)

    def vector(self, dim: int) -> np.ndarray:
        if self.kind == "vector":
            if self.value.size != dim:
                raise ValueError(f"ansatz has dimension {self.value.size}, model has {dim}")
            return self.value.copy()
        if self.kind == "basis":
            if not 0 <= self.value < dim:
                raise ValueError(f"basis index {self.value} out of range for dimension {dim}")
            out = np.zeros(dim, dtype=complex)
            out[self.value] = 1.0
            return out
        if dim != 2:
            raise ValueError("rotation ansatz requires a single-qubit state register")
        return ry(self.value)[:, 0].copy()

    def unitary(self, dim: int) -> np.ndarray:
        """A unitary ``O`` with ``O|0> = vector``."""
        if self.kind == "ry":
            self.vector(dim)
            return ry(self.value)
        if self.kind == "basis":
            perm = np.eye(dim, dtype=complex)
            perm[:, [0, self.value]] = perm[:, [self.value, 0]]
            return perm
        v = self.vector(dim)
        alpha = v[0] / abs(v[0]) if abs(v[0]) > 1e-15 else 1.0
        u = v / alpha
        w = -u
        w[0] += 1.0
        ww = np.vdot(w, w).real
        if ww < 1e-24:
            return alpha * np.eye(dim, dtype=complex)
        house = np.eye(dim, dtype=complex) - 2.0 * np.outer(w, w.conj()) / ww
        return alpha * house

    def to_json(self) -> dict:
        if self.kind == "vector":
            return {"vector": [[float(z.real), float(z.imag)] for z in self.value]}
        if self.kind == "basis":
            return {"basis": self.value}
        return {"ry_theta": self.value}


def hf_ansatz() -> AnsatzSpec:
    return AnsatzSpec.basis(0)


def eigen_overlap_ansatz(model: SpectralModel, probabilities: Sequence[float]) -> AnsatzSpec:
    """Real superposition ``sum_j sqrt(p_j) |E_j>`` with ``p`` in ascending-energy order."""
    p = np.asarray(probabilities, dtype=float)
    if p.size != model.dim or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("need one non-negative probability per eigenstate summing to 1")
    return AnsatzSpec.from_vector(model.eigen.eigenvectors @ np.sqrt(p))


def ry_angle_for_overlap(model: SpectralModel, target: int, probability: float) -> float:
    """Smallest ``theta >= 0`` with ``|<E_target|Ry(theta)|0>|^2 = probability`` (real 2x2 models)."""
    vec = model.eigen.eigenvectors[:, target]
    if model.dim != 2 or np.max(np.abs(vec.imag)) > 1e-12:
        raise ValueError("closed-form angle needs a real two-level model")
    a, b = vec.real
    # a cos(x) + b sin(x) = cos(x - psi) for a unit vector (a, b)
    psi = math.atan2(b, a)
    c = math.acos(math.sqrt(probability))
    return 2.0 * min((psi - c) % math.pi, (psi + c) % math.pi)


def prepare_ansatz(spec: AnsatzSpec, layout: RegisterLayout) -> StateVector:
    """Energy register and ancilla in ``|0>``, state register holding the ansatz."""
    dim = 1 << layout.n
    vec = spec.vector(dim)
    amps = np.zeros(1 << layout.total, dtype=complex)
    # energy register is the most significant block; ancilla (if any) the least
    amps[: dim << layout.ancilla : 1 << layout.ancilla] = vec
    return StateVector(layout.total, amps)


def _complex_entries(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def load_hamiltonian(path) -> SpectralModel:
    """Read ``{"dim", "matrix": [[[re, im], ...], ...], "scale", "shift"}``."""
    data = json.loads(Path(path).read_text())
    try:
        dim = int(data["dim"])
        matrix = _complex_entries(data["matrix"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed Hamiltonian file {path}: {exc}") from exc
    if matrix.shape != (dim, dim):
        raise ValueError(f"matrix shape {matrix.shape} does not match dim={dim}")
    return SpectralModel(matrix, float(data.get("scale", 1.0)), float(data.get("shift", 0.0)))


def hamiltonian_to_json(model: SpectralModel) -> dict:
    return {
        "dim": model.dim,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in model.matrix],
        "scale": model.scale,
        "shift": model.shift,
    }


def ansatz_from_json(data: dict) -> AnsatzSpec:
    if "vector" in data:
        return AnsatzSpec.from_vector([complex(re, im) for re, im in data["vector"]])
    if "basis" in data:
        return AnsatzSpec.basis(int(data["basis"]))
    if "ry_theta" in data:
        return AnsatzSpec.rotation(float(data["ry_theta"]))
    raise ValueError("ansatz file needs one of 'vector', 'basis', 'ry_theta'")


def load_ansatz(path) -> AnsatzSpec:
    return ansatz_from_json(json.loads(Path(path).read_text()))


def parse_ansatz(text: str) -> AnsatzSpec:
    """``ry:THETA``, ``basis:K``, ``hf`` or a path to an ansatz JSON file."""
    if text == "hf":
        return hf_ansatz()
    kind, _, arg = text.partition(":")
    if kind == "ry" and arg:
        return AnsatzSpec.rotation(float(arg))
    if kind == "basis" and arg:
        return AnsatzSpec.basis(int(arg))
    return load_ansatz(text)
