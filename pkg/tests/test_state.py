import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabslice.circuit import PauliString
from stabslice.state import (
    DensityState,
    StateError,
    apply_mixture_channel,
    apply_unitary,
    measure_qubit_branches,
    new_pure_state,
    new_state,
    overlap_with_projector,
    partial_trace,
    pauli_expectation,
    pauli_matrix,
)

X = pauli_matrix("X")
Z = pauli_matrix("Z")
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def bell():
    s = new_state([0, 1], [0, 0])
    s = apply_unitary(s, H, [0])
    return apply_unitary(s, CNOT, [0, 1])


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def test_new_state_basis():
    assert np.allclose(new_state([4], [0]).matrix, np.diag([1, 0]))
    s = new_state([2, 7], [0, 1])
    expected = np.zeros((4, 4))
    expected[1, 1] = 1
    assert np.allclose(s.matrix, expected)


def test_empty_register_is_unit_scalar():
    s = new_state([], [])
    assert s.matrix.shape == (1, 1)
    assert s.weight == pytest.approx(1.0)


@pytest.mark.parametrize("labels", [[0, 0], list(range(13))])
def test_bad_labels_rejected(labels):
    with pytest.raises(StateError):
        new_state(labels, [0] * len(labels))


def test_x_flips_zero():
    s = apply_unitary(new_state([0], [0]), X, [0])
    assert np.allclose(s.matrix, np.diag([0, 1]))


def test_global_phase_invisible():
    u = np.diag([np.exp(-1j * math.pi / 2), np.exp(1j * math.pi / 2)])
    s = apply_unitary(new_state([0], [0]), u, [0])
    assert np.allclose(s.matrix, np.diag([1, 0]))


def test_hh_then_cz_stabilizers():
    s = new_state([0, 1], [0, 0])
    s = apply_unitary(s, np.kron(H, H), [0, 1])
    s = apply_unitary(s, CZ, [0, 1])
    assert pauli_expectation(s, {0: "X", 1: "Z"}) == pytest.approx(1.0)
    assert pauli_expectation(s, {0: "Z", 1: "X"}) == pytest.approx(1.0)


def test_non_unitary_rejected():
    with pytest.raises(StateError):
        apply_unitary(new_state([0], [0]), np.diag([1.0, 0.5]), [0])


def test_single_term_channel_matches_unitary():
    rng = np.random.default_rng(5)
    u = random_unitary(rng, 4)
    s = bell()
    a = apply_mixture_channel(s, [(1.0, u, [1, 0])])
    b = apply_unitary(s, u, [1, 0])
    assert np.allclose(a.matrix, b.matrix, atol=1e-12)


def test_half_flip_is_maximally_mixed():
    s = apply_mixture_channel(new_state([0], [0]), [(0.5, np.eye(2), [0]), (0.5, X, [0])])
    assert np.allclose(s.matrix, np.eye(2) / 2)


def test_small_flip_channel():
    c2, s2 = math.cos(0.1) ** 2, math.sin(0.1) ** 2
    s = apply_mixture_channel(new_state([0], [0]), [(c2, np.eye(2), [0]), (s2, X, [0])])
    assert np.allclose(np.diag(s.matrix).real, [0.990033, 0.009967], atol=1e-6)


def test_channel_probabilities_validated():
    with pytest.raises(StateError):
        apply_mixture_channel(new_state([0], [0]), [(0.7, np.eye(2), [0]), (0.7, X, [0])])


def test_measure_plus_state():
    plus = apply_unitary(new_state([0], [0]), H, [0])
    b0, b1 = measure_qubit_branches(plus, 0)
    assert b0.probability == pytest.approx(0.5)
    assert b1.probability == pytest.approx(0.5)


def test_measure_bell_leaves_partner():
    b0, _ = measure_qubit_branches(bell(), 0)
    assert b0.probability == pytest.approx(0.5)
    assert b0.state.qubits == (1,)
    assert np.allclose(b0.state.normalized().matrix, np.diag([1, 0]))


def test_measurement_is_linear_in_weight():
    s = bell().scaled(0.3)
    b0, b1 = measure_qubit_branches(s, 1)
    assert b0.state.weight + b1.state.weight == pytest.approx(0.3)


def test_pauli_expectations():
    zero = new_state([0], [0])
    assert pauli_expectation(zero, PauliString.uniform("Z", [0])) == pytest.approx(1)
    assert pauli_expectation(zero, PauliString.uniform("X", [0])) == pytest.approx(0)
    assert pauli_expectation(bell(), PauliString.uniform("Z", [0, 1])) == pytest.approx(1)


def test_projector_overlaps():
    s = bell().scaled(0.8)
    assert overlap_with_projector(s, np.eye(4), [0, 1]) == pytest.approx(0.8)
    assert overlap_with_projector(new_state([0], [1]), np.diag([1, 0]), [0]) == pytest.approx(0)
    zz = (np.eye(4) + np.kron(Z, Z)) / 2
    assert overlap_with_projector(bell(), zz, [0, 1]) == pytest.approx(1)


def test_non_projector_rejected():
    with pytest.raises(StateError):
        overlap_with_projector(bell(), np.diag([1, 0.5, 0, 0]), [0, 1])


def test_partial_trace_of_bell():
    r = partial_trace(bell(), [1])
    assert np.allclose(r.matrix, np.eye(2) / 2)


def test_pure_and_density_agree():
    rng = np.random.default_rng(1)
    u = random_unitary(rng, 8)
    p = apply_unitary(new_pure_state([0, 1, 2], [0, 1, 0]), u, [2, 0, 1])
    d = apply_unitary(new_state([0, 1, 2], [0, 1, 0]), u, [2, 0, 1])
    assert np.allclose(p.to_density().matrix, d.matrix, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    probs=st.lists(st.floats(0.01, 1.0), min_size=1, max_size=4),
    support=st.permutations([0, 1, 2]).map(lambda p: p[:2]),
)
def test_mixture_channel_preserves_density_axioms(seed, probs, support):
    rng = np.random.default_rng(seed)
    total = sum(probs)
    terms = [(p / total, random_unitary(rng, 4), support) for p in probs]
    s = apply_unitary(new_state([0, 1, 2], [0, 0, 0]), random_unitary(rng, 8), [0, 1, 2])
    out = apply_mixture_channel(s, terms)
    out.check(psd=True)
    assert out.weight == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), label=st.sampled_from([0, 1, 2]))
def test_measurement_branches_sum_to_parent(seed, label):
    rng = np.random.default_rng(seed)
    s = apply_unitary(new_state([0, 1, 2], [0, 0, 0]), random_unitary(rng, 8), [0, 1, 2])
    s = DensityState(s.qubits, s.matrix * 0.6)
    b0, b1 = measure_qubit_branches(s, label)
    assert b0.probability + b1.probability == pytest.approx(1.0)
    assert b0.state.weight + b1.state.weight == pytest.approx(0.6)
    b0.state.check(psd=True)
