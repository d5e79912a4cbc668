"""Amplitude estimation of the initial success probability ``b``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from philter.amplify import Amplifier, EnergyWindow, optimal_iterations
from philter.core import MAX_QUBITS
from philter.errors import CapacityError, NoOverlapDetected
from philter.spectral import AnsatzSpec, SpectralModel

CIRCUIT_QUBIT_LIMIT = 24
_DIST_CACHE: dict[tuple, np.ndarray] = {}
_DIST_CACHE_SIZE = 64


@dataclass(frozen=True)
class AmplitudeEstimate:
    t: int
    y: int
    c: int = 1

    @property
    def theta(self) -> float:
        return math.pi * self.y / 2**self.t

    @property
    def b(self) -> float:
        return math.sin(self.theta) ** 2

    @property
    def bound(self) -> float:
        """Error bound evaluated at the estimate itself."""
        return qae_error_bound(self.b, self.t, self.c)

    def to_dict(self) -> dict:
        return {"t": self.t, "y": self.y, "theta": self.theta, "b": self.b, "bound": self.bound}


def qae_error_bound(b: float, t: int, c: int = 1) -> float:
    """``2 pi c sqrt(b(1-b)) / 2^t + c^2 pi^2 / 2^2t``."""
    if not 0 <= b <= 1:
        raise ValueError(f"probability {b} outside [0, 1]")
    if t < 1 or c < 1:
        raise ValueError("need t >= 1 and c >= 1")
    return 2 * math.pi * c * math.sqrt(b * (1 - b)) / 2**t + (c * math.pi) ** 2 / 4**t


def estimation_applications(t: int) -> int:
    """``QPE(H) O`` invocations of a ``t``-bit estimation: one ``A`` plus two per ``Q``."""
    return 2 ** (t + 1) - 1


def subspace_distribution(b: float, t: int) -> np.ndarray:
    """Exact QAE output distribution from the two-dimensional rotation picture.

    Control value ``c`` carries ``sin((2c+1) theta)|good> + cos((2c+1) theta)|bad>``;
    the inverse QFT acts on each component separately.
    """
    theta = math.asin(math.sqrt(min(max(b, 0.0), 1.0)))
    c = np.arange(1 << t)
    good = np.fft.fft(np.sin((2 * c + 1) * theta), norm="ortho")
    bad = np.fft.fft(np.cos((2 * c + 1) * theta), norm="ortho")
    probs = (np.abs(good) ** 2 + np.abs(bad) ** 2) / 2**t
    return probs / probs.sum()


def circuit_distribution(amp: Amplifier, t: int) -> np.ndarray:
    """QAE by literal controlled ``Q^(2^j)`` ladders on a ``t``-qubit control register.

    Control qubit ``q`` (most significant first) drives ``Q^(2^(t-1-q))`` on the
    rows where its bit is set; the inverse QFT on the control axis follows.
    """
    n_total = t + amp.layout.total
    if n_total > CIRCUIT_QUBIT_LIMIT:
        raise CapacityError(f"{n_total} qubits exceeds the estimation circuit limit {CIRCUIT_QUBIT_LIMIT}")
    prepared = amp.circuit.prepared_array()
    arr = np.broadcast_to(prepared, (1 << t,) + prepared.shape) / 2 ** (t / 2)
    arr = np.ascontiguousarray(arr)
    controls = np.arange(1 << t)
    for q in range(t):
        rows = np.flatnonzero((controls >> (t - 1 - q)) & 1)
        sub = arr[rows]
        for _ in range(1 << (t - 1 - q)):
            sub = amp.q_array(sub)
        arr[rows] = sub
    arr = np.fft.fft(arr, axis=0, norm="ortho")
    probs = (np.abs(arr) ** 2).sum(axis=(1, 2))
    return probs / probs.sum()


def _cache_key(model: SpectralModel, ansatz: AnsatzSpec, window: EnergyWindow, m: int, t: int, method: str):
    return (
        model.matrix.tobytes(),
        model.scale,
        model.shift,
        repr(ansatz.to_json()),
        window.F,
        m,
        t,
        method,
    )


def qae_distribution(
    model: SpectralModel,
    ansatz: AnsatzSpec,
    window: EnergyWindow,
    m: int,
    t: int,
    method: str = "auto",
) -> np.ndarray:
    """Distribution of the ``t``-bit estimation register.

    ``method`` is ``"circuit"`` (literal controlled powers), ``"subspace"``
    (exact reduction to the plane spanned by the good and bad parts of
    ``A|0>``, with ``b`` read from the simulated state) or ``"auto"``, which
    picks the circuit whenever it fits. Results are cached.
    """
    if t < 1:
        raise ValueError("need at least one estimation qubit")
    if method not in ("auto", "circuit", "subspace"):
        raise ValueError(f"unknown estimation method {method!r}")
    total = t + m + model.num_qubits
    if total > MAX_QUBITS and method == "circuit":
        raise CapacityError(f"{total} qubits exceeds simulator capacity of {MAX_QUBITS}")
    if method == "auto":
        method = "circuit" if total <= CIRCUIT_QUBIT_LIMIT else "subspace"
    key = _cache_key(model, ansatz, window, m, t, method)
    if key in _DIST_CACHE:
        return _DIST_CACHE[key]
    amp = Amplifier(model, ansatz, window, m, cache=False)
    if method == "circuit":
        dist = circuit_distribution(amp, t)
    else:
        dist = subspace_distribution(amp.initial_probability(), t)
    if len(_DIST_CACHE) >= _DIST_CACHE_SIZE:
        _DIST_CACHE.pop(next(iter(_DIST_CACHE)))
    _DIST_CACHE[key] = dist
    return dist


def qae(
    model: SpectralModel,
    ansatz: AnsatzSpec,
    window: EnergyWindow,
    m: int,
    t: int,
    rng: np.random.Generator,
    method: str = "auto",
) -> AmplitudeEstimate:
    """Estimate ``b`` as ``sin^2(pi y / 2^t)`` from one measured register value ``y``."""
    dist = qae_distribution(model, ansatz, window, m, t, method)
    y = int(rng.choice(dist.size, p=dist))
    return AmplitudeEstimate(t, y)


def estimate_then_k(
    model: SpectralModel,
    ansatz: AnsatzSpec,
    window: EnergyWindow,
    m: int,
    t: int,
    rng: np.random.Generator,
    method: str = "auto",
) -> tuple[float, int]:
    est = qae(model, ansatz, window, m, t, rng, method)
    if est.b < 1e-15:
        raise NoOverlapDetected(
            f"amplitude estimation returned b=0 with t={t}; increase t or change the ansatz"
        )
    return est.b, optimal_iterations(min(est.b, 1.0))


__all__ = [
    "AmplitudeEstimate",
    "circuit_distribution",
    "estimate_then_k",
    "estimation_applications",
    "qae",
    "qae_distribution",
    "qae_error_bound",
    "subspace_distribution",
]
