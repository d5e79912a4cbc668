import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from oracles import dft_matrix, embed, random_state, random_unitary
from philter.core import (
    MAX_QUBITS,
    H,
    StateVector,
    Unitary,
    X,
    apply_controlled_unitary,
    apply_unitary,
    collapse,
    inverse_qft,
    marginal_probabilities,
    measure,
    phase,
    probability_of,
    qft,
    ry,
)
from philter.errors import CapacityError
from philter.spectral import h2_model


def _state(seed, n):
    return StateVector(n, random_state(np.random.default_rng(seed), n))


def test_identity_leaves_state():
    s = _state(0, 3)
    out = apply_unitary(s, np.eye(4), [0, 2])
    np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-15)


def test_x_on_msb():
    out = apply_unitary(StateVector.zero(2), X, [0])
    assert np.argmax(np.abs(out.amplitudes)) == 0b10


def test_ry_four_digit_angle_quarter_overlap():
    # the rotated HF state has excited-state amplitude close to 1/2
    psi = apply_unitary(StateVector.zero(1), ry(0.824), [0]).amplitudes
    es = h2_model().eigen.eigenvectors[:, 1]
    assert abs(np.vdot(es, psi)) ** 2 == pytest.approx(0.25, abs=2e-3)


@given(
    n=st.integers(1, 5),
    seed=st.integers(0, 2**16),
    data=st.data(),
)
def test_apply_unitary_matches_dense_embedding(n, seed, data):
    k = data.draw(st.integers(1, n))
    targets = data.draw(st.permutations(range(n)))[:k]
    rng = np.random.default_rng(seed)
    u = random_unitary(rng, 1 << k)
    s = StateVector(n, random_state(rng, n))
    out = apply_unitary(s, u, targets)
    np.testing.assert_allclose(out.amplitudes, embed(u, targets, n) @ s.amplitudes, atol=1e-12)
    assert abs(out.norm() - 1) < 1e-10
    back = apply_unitary(out, Unitary(u).dagger(), targets)
    np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-10)


def test_apply_unitary_errors():
    s = StateVector.zero(3)
    with pytest.raises(ValueError, match="does not match"):
        apply_unitary(s, np.eye(4), [0])
    with pytest.raises(ValueError, match="duplicate"):
        apply_unitary(s, np.eye(4), [1, 1])
    with pytest.raises(ValueError, match="out of range"):
        apply_unitary(s, X, [3])
    with pytest.raises(ValueError, match="not unitary"):
        apply_unitary(s, np.array([[1, 1], [0, 1]]), [0])


def test_unitary_rejects_non_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        Unitary(np.eye(3))


def test_controlled_with_control_zero_is_identity():
    s = apply_unitary(StateVector.zero(3), H, [2])
    out = apply_controlled_unitary(s, 0, X, [1])
    np.testing.assert_allclose(out.amplitudes, s.amplitudes)


def test_controlled_with_control_one_is_plain():
    s = apply_unitary(StateVector.zero(3), X, [0])
    s = apply_unitary(s, H, [2])
    np.testing.assert_allclose(
        apply_controlled_unitary(s, 0, X, [1]).amplitudes, apply_unitary(s, X, [1]).amplitudes
    )


def test_controlled_phase_on_eigencomponent():
    # |1>|1> picks up e^{i phi}, every other component is untouched
    phi = 0.731
    s = apply_unitary(apply_unitary(StateVector.zero(2), H, [0]), H, [1])
    out = apply_controlled_unitary(s, 0, phase(phi), [1])
    expected = s.amplitudes.copy()
    expected[3] *= np.exp(1j * phi)
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-15)


@given(n=st.integers(2, 5), seed=st.integers(0, 2**16), data=st.data())
def test_controlled_matches_dense(n, seed, data):
    order = data.draw(st.permutations(range(n)))
    control, targets = order[0], order[1 : 1 + data.draw(st.integers(1, n - 1))]
    rng = np.random.default_rng(seed)
    u = random_unitary(rng, 1 << len(targets))
    s = StateVector(n, random_state(rng, n))
    dense = embed(u, targets, n)
    on = np.array([(i >> (n - 1 - control)) & 1 for i in range(1 << n)], dtype=bool)
    expected = np.where(on, dense @ s.amplitudes, s.amplitudes)
    # dense @ amps mixes only within the control=1 sector since targets exclude the control
    out = apply_controlled_unitary(s, control, u, targets)
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)
    assert abs(out.norm() - 1) < 1e-10


def test_controlled_overlap_rejected():
    with pytest.raises(ValueError, match="overlaps"):
        apply_controlled_unitary(StateVector.zero(2), 0, X, [0])


def test_inverse_qft_single_qubit_is_hadamard():
    s = _state(3, 1)
    np.testing.assert_allclose(inverse_qft(s, [0]).amplitudes, H @ s.amplitudes, atol=1e-14)


@pytest.mark.parametrize("m", range(1, 7))
def test_inverse_qft_matches_dense_dft(m):
    s = _state(m, m)
    out = inverse_qft(s, list(range(m)))
    assert np.max(np.abs(out.amplitudes - dft_matrix(m) @ s.amplitudes)) < 1e-10


@pytest.mark.parametrize("m", range(1, 5))
def test_inverse_qft_reads_exact_phase(m):
    size = 1 << m
    for y in range(size):
        reg = np.exp(2j * np.pi * y * np.arange(size) / size) / np.sqrt(size)
        out = inverse_qft(StateVector(m, reg), list(range(m)))
        assert out.probabilities()[y] == pytest.approx(1.0, abs=1e-12)


def test_inverse_qft_on_subregister_matches_embedding():
    s = _state(11, 4)
    out = inverse_qft(s, [1, 3])
    np.testing.assert_allclose(out.amplitudes, embed(dft_matrix(2), [1, 3], 4) @ s.amplitudes, atol=1e-12)


@given(n=st.integers(1, 6), seed=st.integers(0, 2**16))
def test_qft_roundtrip(n, seed):
    s = _state(seed, n)
    qubits = list(range(n))
    back = qft(inverse_qft(s, qubits), qubits)
    assert np.max(np.abs(back.amplitudes - s.amplitudes)) < 1e-12


def test_measure_basis_state(rng):
    bits, post = measure(StateVector.from_bitstring("0110"), [0, 1, 2, 3], rng)
    assert bits == "0110"
    assert post.probabilities()[0b0110] == pytest.approx(1.0)


def test_measure_bell_marginal():
    bell = StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))
    seen = {}
    for seed in range(200):
        bits, post = measure(bell, [0], np.random.default_rng(seed))
        seen[bits] = seen.get(bits, 0) + 1
        expected = StateVector.from_bitstring(bits * 2)
        np.testing.assert_allclose(post.amplitudes, expected.amplitudes, atol=1e-15)
    assert set(seen) == {"0", "1"}
    assert 60 < seen["0"] < 140


def test_measure_is_deterministic_given_seed():
    s = _state(5, 4)
    a = [measure(s, [0, 2], np.random.default_rng(9))[0] for _ in range(3)]
    assert len(set(a)) == 1


def test_measurement_frequencies_chi_square():
    s = _state(21, 3)
    qubits = [2, 0, 1]
    probs = marginal_probabilities(s, qubits)
    rng = np.random.default_rng(77)
    # sample through the public measurement path in bulk via the same marginal
    counts = np.zeros(8)
    for _ in range(2000):
        bits, _ = measure(s, qubits, rng)
        counts[int(bits, 2)] += 1
    _, p = stats.chisquare(counts, probs * counts.sum())
    assert p > 0.001
    for prefix in ("0", "1", "01", "110"):
        expected = sum(probs[i] for i in range(8) if format(i, "03b").startswith(prefix))
        assert probability_of(s, qubits, prefix) == pytest.approx(expected, abs=1e-12)


def test_measurement_frequencies_large_sample():
    # 10^5 draws of the marginal used by measure(): empirical frequency within 3 sigma
    s = _state(8, 3)
    probs = marginal_probabilities(s, [0, 1, 2])
    draws = np.random.default_rng(3).choice(8, size=100_000, p=probs / probs.sum())
    freq = np.bincount(draws, minlength=8) / draws.size
    sigma = np.sqrt(probs * (1 - probs) / draws.size)
    assert np.all(np.abs(freq - probs) <= 3 * sigma + 1e-12)


def test_probability_of_edge_cases():
    s = StateVector.from_bitstring("101")
    assert probability_of(s, [0, 1, 2], "") == pytest.approx(1.0)
    assert probability_of(s, [0, 1, 2], "101") == 1.0
    assert probability_of(s, [0, 1, 2], "100") == 0.0
    with pytest.raises(ValueError):
        probability_of(s, [0], "10")


def test_collapse_zero_probability_raises():
    with pytest.raises(ValueError, match="zero probability"):
        collapse(StateVector.zero(2), [0], "1")


def test_capacity_guard():
    with pytest.raises(CapacityError):
        StateVector.zero(MAX_QUBITS + 1)


def test_state_length_validated():
    with pytest.raises(ValueError, match="expected 8"):
        StateVector(3, np.ones(4))
