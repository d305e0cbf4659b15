import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabslice.circuit import (
    PI,
    Circuit,
    CircuitError,
    ControlledPauli,
    Gate,
    Measure,
    NoiseClass,
    Pauli,
    PauliString,
    PlanarAxis,
    Prep,
    circuit_unitary,
    compile_cnot,
    compile_hadamard,
    compile_sk1,
    equal_up_to_phase,
    from_text,
    ms,
    peephole_cancel,
    rotation_unitary,
    rx,
    ry,
    sk1_phase,
    sk1_replace,
    to_text,
)

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def expm_hermitian(m, theta):
    w, v = np.linalg.eigh(m)
    return v @ np.diag(np.exp(-1j * theta * w)) @ v.conj().T


def test_pauli_z_rotation():
    g = Gate(Pauli(PauliString.uniform("Z", [0])), PI / 2)
    assert np.allclose(rotation_unitary(g), np.diag([-1j, 1j]))


def test_xx_rotation_matches_exponential():
    gen = Pauli(PauliString.uniform("X", [0, 1]))
    assert np.allclose(rotation_unitary(Gate(gen, 0.1)), expm_hermitian(gen.matrix(), 0.1), atol=1e-14)


def test_controlled_z_rotation():
    gen = ControlledPauli(0, PauliString.uniform("Z", [1]))
    m = gen.matrix()
    assert np.allclose(m @ m, np.eye(4))
    cz = np.diag([1, 1, 1, -1])
    assert np.allclose(rotation_unitary(Gate(gen, PI / 2)), -1j * cz)


@pytest.mark.parametrize(
    "gen",
    [
        Pauli(PauliString.from_dict({0: "X", 1: "Y", 2: "Z"})),
        ControlledPauli(3, PauliString.uniform("X", [0, 1])),
        PlanarAxis(0, 0.7),
    ],
)
def test_generators_are_hermitian_involutions(gen):
    m = gen.matrix()
    assert np.allclose(m, m.conj().T)
    assert np.allclose(m @ m, np.eye(m.shape[0]))


def test_control_inside_target_rejected():
    with pytest.raises(CircuitError):
        ControlledPauli(1, PauliString.uniform("Z", [0, 1]))


@pytest.mark.parametrize("s", [1, -1])
@pytest.mark.parametrize("v", [1, -1])
def test_cnot_compilations(s, v):
    frag = compile_cnot(0, 1, s, v)
    assert len(frag) == 5
    assert sum(g.noise_class is NoiseClass.TWO_QUBIT for g in frag) == 1
    assert sum(g.noise_class is NoiseClass.ONE_QUBIT for g in frag) == 4
    assert equal_up_to_phase(circuit_unitary(frag, (0, 1)), CNOT, atol=1e-12)


@pytest.mark.parametrize("variant", [1, 2])
def test_hadamard_compilations(variant):
    frag = compile_hadamard(0, variant)
    assert equal_up_to_phase(circuit_unitary(frag, (0,)), H, atol=1e-12)
    bloch = sorted(round(abs(2 * g.theta) / PI, 12) for g in frag)
    assert set(bloch) <= {0.5, 1.0}


def test_sk1_phase_for_quarter_turn():
    assert sk1_phase(PI / 2) == pytest.approx(1.69612, abs=1e-5)
    assert sk1_phase(PI / 2) == pytest.approx(math.acos(-1 / 8))


@pytest.mark.parametrize("bloch", [PI / 2, PI, 3 * PI / 2])
def test_sk1_is_exact_without_error(bloch):
    frag = compile_sk1(bloch, 0.3)
    target = rotation_unitary(Gate(PlanarAxis(0, 0.3), bloch / 2))
    assert len(frag) == 3
    assert equal_up_to_phase(circuit_unitary(frag, (0,)), target, atol=1e-12)


def test_sk1_replace_keeps_unitary():
    c = Circuit((0, 1), (), [rx(0, PI / 2), ms(0, 1, PI / 4), ry(1, -PI / 2)])
    out = sk1_replace(c)
    assert len(out.gates) == 7
    assert equal_up_to_phase(circuit_unitary(out), circuit_unitary(c), atol=1e-12)


def test_peephole_cancels_opposites():
    c = Circuit((0,), (), [rx(0, PI / 2), rx(0, -PI / 2)])
    assert len(peephole_cancel(c).ops) == 0


def test_peephole_blocked_by_intervening_gate():
    ops = [rx(0, PI / 2), ms(0, 1, PI / 4), rx(0, -PI / 2)]
    c = Circuit((0, 1), (), ops)
    assert peephole_cancel(c).ops == ops


def test_peephole_merges_same_axis():
    c = Circuit((0,), (), [rx(0, PI / 2), rx(0, PI / 2)])
    (g,) = peephole_cancel(c).ops
    assert g.theta == pytest.approx(PI / 2)


def test_empty_and_single_gate_unitary():
    assert np.allclose(circuit_unitary(Circuit((0, 1), (), [])), np.eye(4))
    g = ms(0, 1, 0.3)
    assert np.allclose(circuit_unitary(Circuit((0, 1), (), [g])), rotation_unitary(g))


def test_validate_rejects_gate_on_unprepared_ancilla():
    c = Circuit((0,), (1,), [ms(0, 1, PI / 4)])
    with pytest.raises(CircuitError):
        c.validate()


def test_text_round_trip():
    ops = [
        Prep(2, "X+"),
        Gate(ControlledPauli(2, PauliString.uniform("Z", [0, 1])), -PI / 2, NoiseClass.THREE_QUBIT),
        Gate(PlanarAxis(1, 1.2345), PI),
        ry(0, PI / 2),
        Gate(Pauli(PauliString.uniform("X", [0])), 0.1, NoiseClass.NOISELESS),
        Measure(2, "X", "Z0", True),
    ]
    c = Circuit((0, 1), (2,), ops)
    back = from_text(to_text(c, ["hello"]))
    assert back.data == c.data and back.ancillas == c.ancillas
    assert len(back.ops) == len(c.ops)
    for a, b in zip(back.ops, c.ops):
        if isinstance(a, Gate):
            assert a.generator == b.generator and a.noise_class is b.noise_class
            assert a.theta == pytest.approx(b.theta, abs=1e-15)
        else:
            assert a == b


def test_text_parse_error_has_line():
    with pytest.raises(CircuitError, match="line 2"):
        from_text("Q 0\nROT abc P 0:X\n")


letters = st.sampled_from("XYZ")


@settings(max_examples=50, deadline=None)
@given(
    a=st.dictionaries(st.integers(0, 4), letters, min_size=1, max_size=5),
    b=st.dictionaries(st.integers(0, 4), letters, min_size=1, max_size=5),
)
def test_commutation_matches_matrices(a, b):
    pa, pb = PauliString.from_dict(a), PauliString.from_dict(b)
    order = tuple(range(5))
    ma, mb = pa.matrix(order), pb.matrix(order)
    assert pa.commutes_with(pb) == np.allclose(ma @ mb, mb @ ma)


@settings(max_examples=30, deadline=None)
@given(
    thetas=st.lists(st.floats(-PI, PI, allow_nan=False), min_size=1, max_size=6),
    axes=st.lists(st.sampled_from(["X", "Y"]), min_size=6, max_size=6),
)
def test_peephole_preserves_unitary(thetas, axes):
    ops = [Gate(Pauli(PauliString.uniform(ax, [0])), t) for t, ax in zip(thetas, axes)]
    c = Circuit((0,), (), ops)
    assert equal_up_to_phase(circuit_unitary(peephole_cancel(c)), circuit_unitary(c), atol=1e-10)
