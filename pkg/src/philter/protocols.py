"""PHILTER, iterative PHILTER and QPHILTER sampling protocols with runtime accounting."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from philter.amplify import (
    Amplifier,
    EnergyWindow,
    optimal_iterations,
    required_register_size,
    success_condition,
)
from philter.core import RegisterLayout, StateVector
from philter.errors import InsufficientPrecisionError, NoOverlapDetected, ProtocolFailure
from philter.estimate import estimation_applications, qae
from philter.qpe import iqpe
from philter.spectral import AnsatzSpec, SpectralModel, decode_energy

SCHEMA_VERSION = "1.0"
DEFAULT_RETRIES = 16
GROWTH = 8.0 / 7.0


@dataclass
class RunReport:
    """Outcome of one protocol run; runtime is counted in ``QPE(H) O`` applications."""

    protocol: str
    bitstring: str = ""
    m: int = 0
    energy: float | None = None
    in_window: bool = False
    in_acceptance: bool = False
    success: bool = False
    qpe_applications: int = 0
    estimation_qpe_applications: int = 0
    grover_iterations: int = 0
    retries: int = 0
    seed: int | None = None
    k_values: list[int] = field(default_factory=list)
    l_values: list[float] = field(default_factory=list)
    b_estimate: float | None = None
    register_size: int | None = None
    iqpe_rounds: int = 0
    condition: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def total_qpe_applications(self) -> int:
        return self.qpe_applications + self.estimation_qpe_applications

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema_version"] = SCHEMA_VERSION
        out["total_qpe_applications"] = self.total_qpe_applications
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class QsearchSchedule:
    """Randomised exponential schedule: ``k`` uniform in ``[0, floor(l))``, then ``l <- g l``."""

    g: float = GROWTH
    l: float = 1.0

    def __post_init__(self):
        if not 1 < self.g < 4 / 3:
            raise ValueError(f"growth factor {self.g} outside (1, 4/3)")
        if self.l < 1:
            raise ValueError("schedule bound starts at 1 or above")

    def draw(self, rng: np.random.Generator) -> int:
        return int(rng.integers(0, max(1, math.floor(self.l))))

    def grow(self) -> None:
        self.l *= self.g

    @staticmethod
    def critical_stage(b: float) -> float:
        theta = math.asin(math.sqrt(b))
        return 1.0 / math.sin(2 * theta)


def _rng_and_seed(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), int(rng)


def _finish(report: RunReport, model: SpectralModel, window: EnergyWindow, y: int, m: int) -> None:
    report.bitstring = format(y, f"0{m}b")
    report.m = m
    report.energy = decode_energy(model, y, m)
    report.in_window = window.in_window(y, m)
    report.in_acceptance = window.in_acceptance(y, m)


def minimum_register(b: float, gamma: float) -> int:
    """``ceil(log2(2/b) + gamma)``, the register size the estimate demands."""
    return int(math.ceil(math.log2(2.0 / b) + gamma - 1e-12))


def philter(
    model: SpectralModel,
    ansatz: AnsatzSpec,
    window: EnergyWindow,
    m: int,
    t: int,
    rng,
    max_retries: int = DEFAULT_RETRIES,
    amplifier: Amplifier | None = None,
    qae_method: str = "auto",
) -> RunReport:
    """Estimate ``b``, amplify ``k = floor(pi / 4 theta)`` times, accept inside ``F'``."""
    rng, seed = _rng_and_seed(rng)
    report = RunReport("philter", seed=seed)
    b_est, k = _estimate(model, ansatz, window, m, t, rng, qae_method, report)
    need = minimum_register(b_est, window.gamma)
    if m < need:
        raise InsufficientPrecisionError(
            f"energy register of {m} qubits is below ceil(log2(2/b) + gamma) = {need} for b={b_est:.4g}"
        )
    amp = amplifier or Amplifier(model, ansatz, window, m)
    for attempt in range(max_retries + 1):
        y = amp.sample(k, rng)
        report.k_values.append(k)
        report.grover_iterations += k
        report.qpe_applications += 2 * k + 1
        report.retries = attempt
        _finish(report, model, window, y, m)
        if report.in_acceptance:
            report.success = True
            return report
    raise ProtocolFailure(
        f"no outcome inside the acceptance interval after {max_retries + 1} attempts", report
    )


def _estimate(model, ansatz, window, m, t, rng, method, report) -> tuple[float, int]:
    est = qae(model, ansatz, window, m, t, rng, method)
    report.estimation_qpe_applications += estimation_applications(t)
    report.b_estimate = est.b
    if est.b < 1e-15:
        raise NoOverlapDetected(
            f"amplitude estimation returned b=0 with t={t}; increase t or change the ansatz"
        )
    return est.b, optimal_iterations(min(est.b, 1.0))


def iterative_philter(
    model: SpectralModel,
    ansatz: AnsatzSpec,
    window: EnergyWindow,
    m_total: int,
    t: int,
    rng,
    passes: int = 4,
    register_size: int | None = None,
    k: int | None = None,
    qae_method: str = "auto",
    reuse_prefix: bool = True,
) -> RunReport:
    """Amplify on a small register, then read the remaining bits by IQPE on one ancilla.

    The amplification register size is the fixed point of ``a = f + s(b(a))``
    with ``b(a)`` estimated by QAE at each candidate size, unless
    ``register_size`` is given. With ``reuse_prefix`` the ``a`` amplified bits
    become the leading bits of the ``m_total``-bit result and IQPE supplies
    the rest; otherwise IQPE re-reads all ``m_total`` bits from the collapsed
    state and the amplified bits only serve as a consistency check.
    """
    rng, seed = _rng_and_seed(rng)
    report = RunReport("iterative_philter", seed=seed)
    window.check_register(m_total)
    estimates: dict[int, float] = {}

    def b_at(a: int) -> float:
        if a not in estimates:
            est = qae(model, ansatz, window, a, t, rng, qae_method)
            report.estimation_qpe_applications += estimation_applications(t)
            estimates[a] = est.b
        return estimates[a]

    if register_size is None:
        a = required_register_size(b_at, window.gamma, window.f, m_total)
    else:
        a = register_size
    if not window.f <= a <= m_total:
        raise ValueError(f"register size {a} outside [{window.f}, {m_total}]")
    report.register_size = a
    if k is None:
        b_est = b_at(a)
        report.b_estimate = b_est
        if b_est < 1e-15:
            raise NoOverlapDetected(
                f"amplitude estimation returned b=0 with t={t}; increase t or change the ansatz"
            )
        k = optimal_iterations(min(b_est, 1.0))
    ok, diag = success_condition(model, ansatz, window, a)
    report.condition = ok
    if not ok:
        report.notes.append(
            f"amplification not guaranteed at register size {a}: "
            f"wanted {diag.wanted:.3g} <= unwanted {diag.unwanted:.3g}"
        )
    amp = Amplifier(model, ansatz, window, a)
    layout = RegisterLayout(0, model.num_qubits, 1)
    prefixes = []
    for attempt in range(passes):
        head = amp.sample(k, rng)
        report.k_values.append(k)
        report.grover_iterations += k
        report.qpe_applications += 2 * k + 1
        report.retries = attempt
        head_bits = format(head, f"0{a}b")
        prefixes.append(head_bits)
        lowest = a + 1 if reuse_prefix else 1
        bits = head_bits if reuse_prefix else ""
        if lowest <= m_total:
            psi = amp.collapsed_state_register(k, head)
            amps = np.zeros(1 << layout.total, dtype=complex)
            amps[::2] = psi
            tail, _ = iqpe(model, StateVector(layout.total, amps), layout, m_total, rng, lowest_bit=lowest)
            report.iqpe_rounds += m_total - lowest + 1
            bits += tail
            if not reuse_prefix and tail[:a] != head_bits:
                report.notes.append(f"pass {attempt}: IQPE prefix {tail[:a]} differs from amplified {head_bits}")
        y = int(bits, 2)
        _finish(report, model, window, y, m_total)
        if report.in_acceptance:
            report.success = True
            break
    if len(prefixes) > 1:
        report.notes.append(f"amplified prefixes per pass: {prefixes}")
    if not report.success:
        raise ProtocolFailure(f"no accepted outcome after {passes} passes", report)
    return report


def default_iteration_guard(m: int) -> int:
    """``100 ceil(8 / sin(2 arcsin sqrt(2^-m)))``."""
    theta = math.asin(math.sqrt(2.0**-m))
    return 100 * math.ceil(8.0 / math.sin(2 * theta))


def qphilter(
    model: SpectralModel,
    ansatz: AnsatzSpec,
    window: EnergyWindow,
    m: int,
    rng,
    max_total_iterations: int | None = None,
    growth: float = GROWTH,
    amplifier: Amplifier | None = None,
) -> RunReport:
    """Estimation-free sampling with the Qsearch schedule; accepts only inside ``F``."""
    rng, seed = _rng_and_seed(rng)
    report = RunReport("qphilter", seed=seed)
    guard = default_iteration_guard(m) if max_total_iterations is None else max_total_iterations
    amp = amplifier or Amplifier(model, ansatz, window, m)
    schedule = QsearchSchedule(growth)
    attempt = 0
    while True:
        k = schedule.draw(rng)
        report.l_values.append(schedule.l)
        report.k_values.append(k)
        y = amp.sample(k, rng)
        report.grover_iterations += k
        report.qpe_applications += 2 * k + 1
        report.retries = attempt
        _finish(report, model, window, y, m)
        if report.in_window:
            report.success = True
            return report
        if report.grover_iterations > guard:
            report.notes.append("iteration guard exceeded; the success condition is probably violated")
            raise ProtocolFailure(
                f"total iterations {report.grover_iterations} exceeded the guard {guard}", report
            )
        schedule.grow()
        attempt += 1


def expected_runtime_bounds(b: float) -> tuple[float, float]:
    """Repeat-QPE expectation ``1/b`` and the Qsearch bound ``8 / sin(2 theta)``."""
    if not 0 < b < 1:
        raise ValueError(f"probability {b} outside (0, 1)")
    theta = math.asin(math.sqrt(b))
    return 1.0 / b, 8.0 / math.sin(2 * theta)


def qsearch_average_success(b: float, l: int) -> float:
    """Mean of ``sin^2((2k+1) theta)`` for ``k`` uniform in ``{0, ..., l-1}``."""
    theta = math.asin(math.sqrt(b))
    return 0.5 - math.sin(4 * l * theta) / (4 * l * math.sin(2 * theta))


__all__ = [
    "QsearchSchedule",
    "RunReport",
    "SCHEMA_VERSION",
    "default_iteration_guard",
    "expected_runtime_bounds",
    "iterative_philter",
    "minimum_register",
    "philter",
    "qphilter",
    "qsearch_average_success",
]
