import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import dense_qpe_matrix, random_unitary, total_variation
from philter.core import RegisterLayout, StateVector, marginal_probabilities, probability_of
from philter.errors import CapacityError
from philter.qpe import (
    QpeCircuit,
    QpeOutputModel,
    best_m_bit,
    closed_form_distribution,
    eigenstate_layout_state,
    iqpe,
    iqpe_feedback_angle,
    qpe_amplitude,
    qpe_distribution_for_phase,
    qpe_error_bound,
    qpe_outcome_mass_within,
    run_iqpe_bit,
    run_qpe,
    walsh_hadamard,
)
from philter.spectral import (
    H2_ES_BITS,
    H2_GS_BITS,
    AnsatzSpec,
    evolution_power,
    hf_ansatz,
    model_from_phases,
    model_from_spectrum,
)


def random_setup(seed, d):
    rng = np.random.default_rng(seed)
    model = model_from_spectrum(rng.uniform(-6.2, 0.0, d), random_unitary(rng, d))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return model, AnsatzSpec.from_vector(v / np.linalg.norm(v))


def test_run_qpe_matches_dense_circuit():
    model, ansatz = random_setup(4, 2)
    m, n = 3, 1
    powers = [evolution_power(model, 1 << (m - 1 - q)) for q in range(m)]
    init = np.zeros(1 << (m + n), dtype=complex)
    init[: 1 << n] = ansatz.vector(2)
    expected = dense_qpe_matrix(powers, m, n) @ init
    np.testing.assert_allclose(run_qpe(model, ansatz, m).amplitudes, expected, atol=1e-12)


@given(seed=st.integers(0, 2**16), d=st.sampled_from([2, 4]), m=st.integers(1, 8))
def test_closed_form_equals_simulation(seed, d, m):
    model, ansatz = random_setup(seed, d)
    layout = RegisterLayout(m, model.num_qubits)
    sim = marginal_probabilities(run_qpe(model, ansatz, m), layout.energy_qubits)
    assert np.max(np.abs(sim - closed_form_distribution(model, ansatz, m))) < 1e-8


@given(seed=st.integers(0, 2**16), d=st.sampled_from([2, 4]), m=st.integers(1, 9))
def test_fast_circuit_equals_gate_level(seed, d, m):
    model, ansatz = random_setup(seed, d)
    fast = QpeCircuit(model, ansatz, m)
    ref = run_qpe(model, ansatz, m).amplitudes
    got = fast.forward(StateVector.zero(m + model.num_qubits)).amplitudes
    assert np.max(np.abs(got - ref)) < 1e-10
    back = fast.inverse(StateVector(m + model.num_qubits, ref))
    assert abs(abs(back.amplitudes[0]) - 1) < 1e-10
    assert fast.applications == 2


def test_walsh_hadamard_matches_kron():
    from oracles import hadamard_n

    rng = np.random.default_rng(0)
    arr = rng.normal(size=(3, 32, 2)) + 1j * rng.normal(size=(3, 32, 2))
    ref = np.einsum("xy,byk->bxk", hadamard_n(5), arr)
    for block in (1, 2, 4, 6):
        np.testing.assert_allclose(walsh_hadamard(arr, block), ref, atol=1e-12)


def test_eigenstate_exact_phase_gives_delta():
    model = model_from_phases([5 / 16, 11 / 16])
    out = run_qpe(model, AnsatzSpec.basis(1), 4)
    assert probability_of(out, [0, 1, 2, 3], format(11, "04b")) == pytest.approx(1.0, abs=1e-12)


def test_h2_m20_bitstrings(h2):
    out = run_qpe(h2, hf_ansatz(), 20)
    energy = list(range(20))
    a2 = np.abs(h2.eigen.overlaps(hf_ansatz().vector(2))) ** 2
    assert probability_of(out, energy, H2_GS_BITS) == pytest.approx(a2[0], abs=1e-9)
    assert probability_of(out, energy, H2_ES_BITS) == pytest.approx(a2[1], abs=1e-9)
    assert probability_of(out, energy, "00") == pytest.approx(0.0124, abs=1e-3)


def test_qpe_amplitude_exact_limit():
    assert qpe_amplitude(3, 0.0, 3, 4) == 1.0
    assert qpe_amplitude(3, 0.0, 4, 4) == pytest.approx(0.0, abs=1e-30)


def test_qpe_amplitude_appendix_values():
    got = [qpe_amplitude(1, 0.1825, x, 2) for x in range(4)]
    assert [round(g, 3) for g in got] == pytest.approx([0.029, 0.90, 0.051, 0.019], abs=1.5e-3)
    assert qpe_amplitude(0, 0.1430, 0, 2) == pytest.approx(0.94, abs=5e-3)


def test_qpe_amplitude_validates():
    with pytest.raises(ValueError):
        qpe_amplitude(4, 0.0, 0, 2)
    with pytest.raises(ValueError):
        qpe_amplitude(0, 1.0, 0, 2)


@given(e=st.integers(0, 2**10 - 1), delta=st.floats(0, 1, exclude_max=True), m=st.integers(1, 10))
def test_qpe_amplitude_normalised(e, delta, m):
    e = e % (1 << m)
    total = sum(qpe_amplitude(e, delta, x, m) for x in range(1 << m))
    assert total == pytest.approx(1.0, abs=1e-10)


def test_best_m_bit_examples():
    e, d = best_m_bit(309986 / 2**20, 2)
    assert (e, round(d, 4)) == (1, 0.1825)
    e, d = best_m_bit(37487 / 2**20, 3)
    assert (e, round(d, 4)) == (0, 0.2860)
    assert best_m_bit(13 / 32, 5) == (13, 0.0)
    with pytest.raises(ValueError):
        best_m_bit(1.0, 3)


def test_error_bound_formula():
    assert qpe_error_bound(1.0, 1) == pytest.approx(8 / math.pi**2)
    assert qpe_error_bound(1.0, 2) == 0.5
    with pytest.raises(ValueError):
        qpe_error_bound(1.0, 0)


def test_error_bound_on_simulation():
    rng = np.random.default_rng(1)
    for phi in rng.uniform(0, 1, 100):
        model = model_from_phases([phi, 0.0])
        circuit = QpeCircuit(model, AnsatzSpec.basis(0), 8)
        dist = (np.abs(circuit.prepared_array()) ** 2).sum(axis=1)
        assert qpe_outcome_mass_within(dist, phi, 1) >= 8 / math.pi**2 - 1e-12


def test_output_model_invariants(h2):
    out = QpeOutputModel.build(h2, hf_ansatz(), 6)
    assert np.all((out.deltas >= 0) & (out.deltas < 1))
    for j in range(2):
        assert out.eigenstate_distribution(j).sum() == pytest.approx(1.0, abs=1e-10)
    assert out.distribution().sum() == pytest.approx(1.0, abs=1e-10)


def test_distribution_for_phase_matches_amplitude():
    dist = qpe_distribution_for_phase(0.37, 5)
    e, d = best_m_bit(0.37, 5)
    assert dist[7] == pytest.approx(qpe_amplitude(e, d, 7, 5))


def test_feedback_angles():
    assert iqpe_feedback_angle("") == 0.0
    assert iqpe_feedback_angle("1") == pytest.approx(-math.pi / 2)
    assert iqpe_feedback_angle("01") == pytest.approx(-2 * math.pi * 0.125)


def test_iqpe_exact_phase_bits():
    m = 6
    y = 0b101101
    model = model_from_phases([y / 2**m, 0.25])
    layout = RegisterLayout(0, 1, 1)
    for seed in range(5):
        state = eigenstate_layout_state(np.array([1.0, 0.0]), layout)
        bits, post = iqpe(model, state, layout, m, np.random.default_rng(seed))
        assert bits == format(y, "06b")
        assert abs(post.amplitudes[0]) == pytest.approx(1.0)


def test_iqpe_bit_validation(rng):
    model = model_from_phases([0.5, 0.25])
    with pytest.raises(ValueError, match="ancilla"):
        run_iqpe_bit(model, StateVector.zero(1), RegisterLayout(0, 1), 1, "", 1, rng)
    layout = RegisterLayout(0, 1, 1)
    with pytest.raises(ValueError, match="tail"):
        run_iqpe_bit(model, StateVector.zero(2), layout, 2, "", 3, rng)


def test_iqpe_matches_qpe_distribution():
    m = 4
    phi = 0.3137
    model = model_from_phases([phi, 0.8])
    layout = RegisterLayout(0, 1, 1)
    rng = np.random.default_rng(5)
    counts = np.zeros(1 << m)
    runs = 10_000
    for _ in range(runs):
        bits, _ = iqpe(model, eigenstate_layout_state(np.array([1.0, 0.0]), layout), layout, m, rng)
        counts[int(bits, 2)] += 1
    assert total_variation(counts / runs, qpe_distribution_for_phase(phi, m)) < 0.02


def test_capacity(h2):
    with pytest.raises(CapacityError):
        run_qpe(h2, hf_ansatz(), 26)
    with pytest.raises(ValueError):
        QpeCircuit(h2, hf_ansatz(), 0)
