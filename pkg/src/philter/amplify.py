"""Interval oracle, zero-state reflection, the Grover iterate and amplification formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from philter.core import RegisterLayout, StateVector
from philter.qpe import QpeCircuit, QpeOutputModel
from philter.spectral import AnsatzSpec, SpectralModel

INVERSE_CHECK_ATOL = 1e-10


@dataclass(frozen=True)
class EnergyWindow:
    """Dyadic phase window selected by the register prefix ``F``.

    The acceptance interval widens the window by ``2^-gamma`` on each side and
    is clamped to ``[0, 1)``; windows never wrap around phase zero.
    """

    F: str
    gamma: float = 1.0

    def __post_init__(self):
        if not self.F or set(self.F) - {"0", "1"}:
            raise ValueError(f"window prefix must be a non-empty bitstring, got {self.F!r}")
        if self.gamma < 1:
            raise ValueError("gamma must be at least 1")

    @property
    def f(self) -> int:
        return len(self.F)

    @property
    def value(self) -> int:
        return int(self.F, 2)

    @property
    def interval(self) -> tuple[float, float]:
        width = 2.0**-self.f
        return self.value * width, (self.value + 1) * width

    @property
    def acceptance_interval(self) -> tuple[float, float]:
        lo, hi = self.interval
        pad = 2.0**-self.gamma
        return max(0.0, lo - pad), min(1.0, hi + pad)

    def contains_phase(self, phi: float) -> bool:
        lo, hi = self.interval
        return lo <= phi < hi

    def accepts_phase(self, phi: float) -> bool:
        lo, hi = self.acceptance_interval
        return lo <= phi < hi

    def check_register(self, m: int) -> None:
        if self.f > m:
            raise ValueError(f"window prefix of length {self.f} exceeds energy register size {m}")

    def in_window(self, y: int, m: int) -> bool:
        """Whether the ``m``-bit register value ``y`` starts with ``F``."""
        self.check_register(m)
        return (y >> (m - self.f)) == self.value

    def in_acceptance(self, y: int, m: int) -> bool:
        return self.accepts_phase(y / 2**m)

    def mask(self, m: int) -> np.ndarray:
        """Boolean mask over the ``2^m`` register values carrying the prefix."""
        self.check_register(m)
        return (np.arange(1 << m) >> (m - self.f)) == self.value

    def energy_interval(self, model: SpectralModel) -> tuple[float, float]:
        """Energy range ``(low, high]`` covered by the window under ``model``'s scaling."""
        lo, hi = self.interval
        e_hi = -2 * math.pi * lo / model.scale - model.shift
        e_lo = -2 * math.pi * hi / model.scale - model.shift
        return min(e_lo, e_hi), max(e_lo, e_hi)


@dataclass(frozen=True)
class AmplificationDiagnostics:
    b: float
    theta: float
    k: int
    wanted: float
    unwanted: float

    @property
    def margin(self) -> float:
        return self.wanted - self.unwanted

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "theta": self.theta,
            "k": self.k,
            "wanted": self.wanted,
            "unwanted": self.unwanted,
            "margin": self.margin,
        }


def _energy_axis_view(state: StateVector, layout: RegisterLayout) -> np.ndarray:
    if layout.total != state.num_qubits:
        raise ValueError(f"layout has {layout.total} qubits, state has {state.num_qubits}")
    return state.amplitudes.reshape(1 << layout.m, -1)


def s_f(state: StateVector, layout: RegisterLayout, window: EnergyWindow) -> StateVector:
    """Negate every amplitude whose energy-register prefix equals ``F``."""
    window.check_register(layout.m)
    amps = _energy_axis_view(state, layout).copy()
    amps[window.mask(layout.m)] *= -1
    return StateVector(state.num_qubits, amps.reshape(-1))


def s_f_gate_cost(f: int) -> tuple[int, int]:
    """Work qubits and Toffoli gates of the multi-controlled sign flip on ``f`` bits."""
    if f < 1:
        raise ValueError("prefix length must be at least 1")
    return f - 1, 2 * (f - 1)


def s_0(state: StateVector, layout: RegisterLayout) -> StateVector:
    """Negate the all-zero state of the energy and state registers (any ancilla is untouched)."""
    if layout.total != state.num_qubits:
        raise ValueError(f"layout has {layout.total} qubits, state has {state.num_qubits}")
    amps = state.amplitudes.copy()
    amps[: 1 << layout.ancilla] *= -1
    return StateVector(state.num_qubits, amps)


@dataclass
class CircuitPair:
    """A state-preparation circuit ``A`` together with its inverse."""

    forward: Callable[[StateVector], StateVector]
    inverse: Callable[[StateVector], StateVector]
    verified: bool = field(default=False, compare=False)

    @classmethod
    def from_matrix(cls, u: np.ndarray) -> "CircuitPair":
        u = np.asarray(u, dtype=complex)
        ud = u.conj().T

        def fwd(s):
            return StateVector(s.num_qubits, u @ s.amplitudes)

        def inv(s):
            return StateVector(s.num_qubits, ud @ s.amplitudes)

        return cls(fwd, inv)

    @classmethod
    def from_qpe(cls, circuit: QpeCircuit) -> "CircuitPair":
        return cls(circuit.forward, circuit.inverse)

    def verify(self, num_qubits: int) -> None:
        if self.verified:
            return
        rng = np.random.default_rng(0)
        probe = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
        probe = StateVector(num_qubits, probe / np.linalg.norm(probe))
        back = self.inverse(self.forward(probe))
        err = float(np.max(np.abs(back.amplitudes - probe.amplitudes)))
        if err > INVERSE_CHECK_ATOL:
            raise ValueError(f"circuit pair is not an inverse pair (deviation {err:.3g})")
        self.verified = True


def grover_iterate(
    state: StateVector, pair: CircuitPair, layout: RegisterLayout, window: EnergyWindow
) -> StateVector:
    """``Q = -A S_0 A^-1 S_F`` applied to ``state``."""
    pair.verify(state.num_qubits)
    out = s_f(state, layout, window)
    out = pair.inverse(out)
    out = s_0(out, layout)
    out = pair.forward(out)
    return StateVector(out.num_qubits, -out.amplitudes)


def _theta(b: float) -> float:
    return math.asin(math.sqrt(min(max(b, 0.0), 1.0)))


def optimal_iterations(b: float) -> int:
    """``floor(pi / (4 arcsin sqrt(b)))``, or 0 when ``b > 1/2``."""
    if not 0 < b <= 1:
        raise ValueError(f"success probability must lie in (0, 1], got {b}")
    if b > 0.5:
        return 0
    return int(math.floor(math.pi / (4.0 * _theta(b)) + 1e-12))


def amplified_probability(b: float, k: int) -> float:
    if not 0 <= b <= 1:
        raise ValueError(f"probability {b} outside [0, 1]")
    if k < 0:
        raise ValueError("iteration count must be non-negative")
    return math.sin((2 * k + 1) * _theta(b)) ** 2


def success_lower_bound(b: float) -> float:
    if not 0 < b <= 1:
        raise ValueError(f"success probability must lie in (0, 1], got {b}")
    return max(1.0 - b, b)


def stabilizer_qubits(b: float, gamma: float, f: int) -> int:
    """Extra energy qubits ``ceil(log2(2/b) + gamma - f)`` beyond the prefix."""
    if not 0 < b <= 1:
        raise ValueError(f"success probability must lie in (0, 1], got {b}")
    if gamma < 1 or f < 1:
        raise ValueError("need gamma >= 1 and f >= 1")
    return int(math.ceil(math.log2(2.0 / b) + gamma - f - 1e-12))


def success_condition(
    model: SpectralModel, ansatz: AnsatzSpec, window: EnergyWindow, m: int
) -> tuple[bool, AmplificationDiagnostics]:
    """Compare the prefix mass coming from in-window eigenstates with the rest.

    Masses come from the closed-form QPE output model; the verdict is
    ``wanted > unwanted`` and the margin is left in the diagnostics.
    """
    window.check_register(m)
    out = QpeOutputModel.build(model, ansatz, m)
    mask = window.mask(m)
    wanted = unwanted = 0.0
    for j, (w, phi) in enumerate(zip(out.overlap_probabilities, model.phases)):
        if w <= 0:
            continue
        mass = float(w * out.eigenstate_distribution(j)[mask].sum())
        if window.contains_phase(float(phi)):
            wanted += mass
        else:
            unwanted += mass
    b = wanted + unwanted
    k = optimal_iterations(b) if b > 0 else 0
    diag = AmplificationDiagnostics(b, _theta(b), k, wanted, unwanted)
    return wanted > unwanted, diag


class Amplifier:
    """Amplitude amplification of ``A = QPE(H) O`` toward the prefix ``F``.

    Works on arrays of shape ``(2^m, 2^n)``. States after successive
    iterations are produced incrementally; with ``cache`` enabled the last
    state and the energy marginal of every visited ``k`` are kept so sweeps
    over ``k`` cost one iterate per step.
    """

    def __init__(
        self,
        model: SpectralModel,
        ansatz: AnsatzSpec,
        window: EnergyWindow,
        m: int,
        cache: bool = True,
    ):
        window.check_register(m)
        self.circuit = QpeCircuit(model, ansatz, m)
        self.window = window
        self.m = m
        self.mask = window.mask(m)
        self.cache = cache
        self._last: tuple[int, np.ndarray] | None = None
        self._marginals: dict[int, np.ndarray] = {}

    @property
    def model(self) -> SpectralModel:
        return self.circuit.model

    @property
    def layout(self) -> RegisterLayout:
        return self.circuit.layout

    @property
    def applications(self) -> int:
        return self.circuit.applications

    def q_array(self, arr: np.ndarray) -> np.ndarray:
        """One Grover iterate on ``arr`` of shape ``(..., 2^m, 2^n)``."""
        out = arr.copy()
        out[..., self.mask, :] *= -1
        out = self.circuit.inverse_array(out)
        out[..., 0, 0] *= -1
        out = self.circuit.forward_array(out)
        return -out

    def state_array(self, k: int) -> np.ndarray:
        """``Q^k A |0>`` as a ``(2^m, 2^n)`` array."""
        if k < 0:
            raise ValueError("iteration count must be non-negative")
        if self.cache and self._last is not None and self._last[0] <= k:
            start, arr = self._last
        else:
            start, arr = 0, self.circuit.prepared_array()
            self._remember(0, arr)
        for j in range(start, k):
            arr = self.q_array(arr)
            self._remember(j + 1, arr)
        return arr

    def _remember(self, k: int, arr: np.ndarray) -> None:
        if self.cache:
            self._last = (k, arr)
            self._marginals[k] = (np.abs(arr) ** 2).sum(axis=1)

    def energy_marginal(self, k: int) -> np.ndarray:
        if self.cache and k in self._marginals:
            return self._marginals[k]
        return (np.abs(self.state_array(k)) ** 2).sum(axis=1)

    def good_probability(self, k: int) -> float:
        return float(self.energy_marginal(k)[self.mask].sum())

    def initial_probability(self) -> float:
        return self.good_probability(0)

    def sample(self, k: int, rng: np.random.Generator) -> int:
        """Measure the energy register of ``Q^k A|0>`` and return the integer read."""
        marg = self.energy_marginal(k)
        return int(rng.choice(marg.size, p=marg / marg.sum()))

    def collapsed_state_register(self, k: int, y: int) -> np.ndarray:
        """State register after reading ``y`` from the energy register of ``Q^k A|0>``."""
        row = self.state_array(k)[y]
        norm = np.linalg.norm(row)
        if norm == 0:
            raise ValueError(f"register value {y} has zero probability")
        return row / norm


def required_register_size(
    b_at: Callable[[int], float], gamma: float, f: int, cap: int
) -> int:
    """Smallest fixed point of ``a = f + s(b(a), gamma, f)``, capped at ``cap``.

    ``b_at(a)`` supplies the (estimated) success probability for an
    ``a``-qubit energy register.
    """
    a = f
    seen = set()
    while a not in seen:
        seen.add(a)
        b = b_at(a)
        if b <= 0:
            return cap
        nxt = min(max(f + stabilizer_qubits(b, gamma, f), f), cap)
        if nxt <= a:
            return a
        a = nxt
    return a


__all__ = [
    "AmplificationDiagnostics",
    "Amplifier",
    "CircuitPair",
    "EnergyWindow",
    "amplified_probability",
    "grover_iterate",
    "optimal_iterations",
    "required_register_size",
    "s_0",
    "s_f",
    "s_f_gate_cost",
    "stabilizer_qubits",
    "success_condition",
    "success_lower_bound",
]
