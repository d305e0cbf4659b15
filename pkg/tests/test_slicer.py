import math

import numpy as np
import pytest

from stabslice.circuit import (
    CircuitError,
    Gate,
    Measure,
    NoiseClass,
    PauliString,
    circuit_unitary,
    to_text,
)
from stabslice.codes import GaugeFrame, get_code, logical_zero_vector
from stabslice.codes import _apply_pauli_vec as apply_pauli_vec
from stabslice.evaluator import exact_logical_error
from stabslice.noise import OverrotationParams, gate_error_angle
from stabslice.slicer import (
    SlicingMode,
    assign_directions,
    build_extraction,
    build_extraction_3body,
    build_extraction_iontrap,
    controlled_halves_block,
    iontrap_block,
    slice_stabilizer,
)


def coherent_version(gates, params):
    """Gates with their kappa=1 overrotation folded into the angle."""
    return [g.with_theta(g.theta + g.direction * gate_error_angle(g, params)) for g in gates]


def block_gates(ops):
    return [op for op in ops if isinstance(op, Gate)]


@pytest.fixture(scope="module")
def bs13():
    return get_code("baconshor13")


@pytest.fixture(scope="module")
def s17():
    return get_code("surface17")


def test_slice_weight_four():
    e = slice_stabilizer(PauliString.uniform("Z", [0, 1, 2, 3]))
    assert e.left == PauliString.uniform("Z", [0, 1])
    assert e.right == PauliString.uniform("Z", [2, 3])
    assert (e.left_sign, e.right_sign) == (1, -1)


def test_slice_weight_two():
    e = slice_stabilizer(PauliString.uniform("X", [4, 7]))
    assert e.left == PauliString.uniform("X", [4]) and e.right == PauliString.uniform("X", [7])


def test_slice_weight_six():
    e = slice_stabilizer(PauliString.uniform("X", range(6)))
    assert e.left.weight == e.right.weight == 3
    assert e.left_sign == -e.right_sign


def test_slice_rejects_weight_one():
    with pytest.raises(CircuitError):
        slice_stabilizer(PauliString.uniform("X", [0]))


def test_unsliced_directions_all_positive(bs13):
    sl = assign_directions(bs13, SlicingMode.UNSLICED)
    assert all(s == 1 for signs in sl.signs.values() for _, s in signs)


def test_sliced_weight_six_alternates(bs13):
    sl = assign_directions(bs13, SlicingMode.SLICED)
    for signs in sl.signs.values():
        assert [s for _, s in signs] == [1, -1, 1, -1, 1, -1]


def test_adaptive_with_all_negative_frame_is_unsliced_on_x_blocks(bs13):
    frame = GaugeFrame((-1,) * 6)
    ad = assign_directions(bs13, SlicingMode.ADAPTIVE, frame)
    un = assign_directions(bs13, SlicingMode.UNSLICED)
    for name in ("X01", "X12"):
        assert ad.signs[name] == un.signs[name]


def test_adaptive_needs_frame(bs13):
    with pytest.raises(CircuitError):
        assign_directions(bs13, SlicingMode.ADAPTIVE)


def test_surface17_blocks_have_two_opposite_crots(s17):
    c = build_extraction_3body(s17, SlicingMode.SLICED)
    lines = to_text(c).splitlines()
    blocks, cur = [], []
    for ln in lines:
        if ln.startswith("CROT"):
            cur.append(float(ln.split()[1]))
        elif ln.startswith("MEAS"):
            blocks.append(cur)
            cur = []
    assert len(blocks) == 8
    for b in blocks:
        assert len(b) == 2 and b[0] == -b[1]


@pytest.mark.parametrize("gate_set,code", [("native3body", "surface17"), ("iontrap2body", "baconshor13"), ("iontrap2body", "surface17")])
def test_unsliced_entangling_angles_positive(gate_set, code):
    c = build_extraction(get_code(code), gate_set, SlicingMode.UNSLICED)
    assert all(g.theta > 0 for g in c.gates if len(g.support) > 1)
    if gate_set == "native3body":
        assert all(g.theta > 0 for g in c.gates)


def test_baconshor_block_census(bs13):
    c = build_extraction_iontrap(bs13, SlicingMode.SLICED)
    text = to_text(c)
    ms_lines = [ln for ln in text.splitlines() if ln.startswith("ROT") and ln.count(":") == 2]
    assert len(ms_lines) == 24
    assert all(ln.split()[1] in ("+0.25", "-0.25") for ln in ms_lines)
    block = iontrap_block(bs13.stabilizer("X01"), 9, assign_directions(bs13, SlicingMode.SLICED).signs["X01"])
    gates = block_gates(block)
    assert sum(g.noise_class is NoiseClass.TWO_QUBIT for g in gates) == 6
    assert sum(g.noise_class is NoiseClass.ONE_QUBIT for g in gates) == 6
    assert isinstance(block[-1], Measure)


def test_three_body_rejects_weight_six(bs13):
    with pytest.raises(CircuitError):
        build_extraction_3body(bs13, SlicingMode.SLICED)


def test_unknown_gate_set(s17):
    with pytest.raises(CircuitError):
        build_extraction(s17, "photonic", SlicingMode.SLICED)


@pytest.mark.parametrize(
    "gate_set,code,mode",
    [
        ("native3body", "surface17", SlicingMode.SLICED),
        ("native3body", "surface17", SlicingMode.UNSLICED),
        ("iontrap2body", "surface17", SlicingMode.SLICED),
        ("iontrap2body", "baconshor13", SlicingMode.SLICED),
        ("iontrap2body", "baconshor13", SlicingMode.UNSLICED),
    ],
)
def test_noiseless_round_reports_trivial_syndrome(gate_set, code, mode):
    cd = get_code(code)
    res = exact_logical_error(build_extraction(cd, gate_set, mode), OverrotationParams(), cd, merge=False)
    assert res.p_logical == pytest.approx(0, abs=1e-12)
    assert len(res.branches) == 1
    assert res.branches[0].syndrome == (0,) * len(cd.stabilizers)
    assert res.branches[0].probability == pytest.approx(1)


@pytest.mark.parametrize("q", [0, 4, 8])
def test_sliced_and_unsliced_report_same_syndrome_noiselessly(s17, q):
    v = apply_pauli_vec(logical_zero_vector(s17), PauliString.uniform("Y", [q]), list(s17.data))
    out = []
    for mode in (SlicingMode.SLICED, SlicingMode.UNSLICED):
        res = exact_logical_error(build_extraction_3body(s17, mode), OverrotationParams(), s17, initial=v, merge=False)
        out.append([b.syndrome for b in res.branches])
    assert out[0] == out[1] and len(out[0]) == 1


def _eigenstate(stab, order, sign, seed, left=None):
    """Random eigenstate of ``stab``; with ``left`` given, balanced so that <left> = 0."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** len(order)) + 1j * rng.normal(size=2 ** len(order))
    v = v + sign * (stab.matrix(order) @ v)
    if left is not None:
        m = left.matrix(order)
        a, b = v + m @ v, v - m @ v
        v = a / np.linalg.norm(a) + b / np.linalg.norm(b)
    return v / np.linalg.norm(v)


def test_weight_four_block_cancels_on_plus_one_state():
    stab = PauliString.uniform("Z", [0, 1, 2, 3])
    gates = block_gates(controlled_halves_block(stab, 4))
    params = OverrotationParams(1.0, 0.0, 0.05, 0.05)
    order = (4, 0, 1, 2, 3)
    noisy_u = circuit_unitary(coherent_version(gates, params), order)
    clean_u = circuit_unitary(gates, order)
    plus = np.array([1, 1]) / math.sqrt(2)
    psi = np.kron(plus, _eigenstate(stab, order[1:], +1, 0))
    assert np.allclose(noisy_u @ psi, clean_u @ psi, atol=1e-12)


def test_weight_four_block_doubles_error_on_minus_one_state():
    # with the control active the two half errors add up to exp(-2i eps S_L)
    stab = PauliString.uniform("Z", [0, 1, 2, 3])
    gates = block_gates(controlled_halves_block(stab, 4))
    params = OverrotationParams(1.0, 0.0, 0.05, 0.05)
    order = (4, 0, 1, 2, 3)
    left = PauliString.uniform("Z", [0, 1])
    psi = np.kron([0, 1], _eigenstate(stab, order[1:], -1, 1, left))
    noisy = circuit_unitary(coherent_version(gates, params), order) @ psi
    clean = circuit_unitary(gates, order) @ psi
    assert abs(np.vdot(clean, noisy)) ** 2 == pytest.approx(math.cos(2 * 0.05) ** 2, abs=1e-12)


def test_iontrap_sliced_x_block_cancels_on_gauge_fixed_state(bs13):
    signs = assign_directions(bs13, SlicingMode.SLICED).signs["X01"]
    gates = block_gates(iontrap_block(bs13.stabilizer("X01"), 9, signs))
    params = OverrotationParams(1.0, 0.0, 0.03)
    order = tuple(bs13.data) + (9,)
    psi = np.kron(logical_zero_vector(bs13), [1, 0])
    noisy = circuit_unitary(coherent_version(gates, params), order) @ psi
    clean = circuit_unitary(gates, order) @ psi
    assert np.allclose(noisy, clean, atol=1e-10)


def test_adaptive_block_is_frame_conjugate_of_sliced(bs13):
    frame = GaugeFrame((1, 1, -1, 1, 1, 1))  # X3 X4 flipped
    stab = bs13.stabilizer("X01")
    sliced = block_gates(iontrap_block(stab, 9, assign_directions(bs13, SlicingMode.SLICED).signs["X01"]))
    adaptive = block_gates(iontrap_block(stab, 9, assign_directions(bs13, SlicingMode.ADAPTIVE, frame).signs["X01"]))
    params = OverrotationParams.linked_from_eps2(0.04)
    order = (9,) + stab.order
    us = circuit_unitary(coherent_version(sliced, params), order)
    ua = circuit_unitary(coherent_version(adaptive, params), order)
    z = PauliString.uniform("Z", [4]).matrix(order)
    assert np.allclose(ua, z @ us @ z, atol=1e-12)


def test_peephole_removes_opposing_pulses_between_z_blocks(bs13):
    plain = build_extraction_iontrap(bs13, SlicingMode.SLICED)
    opt = build_extraction_iontrap(bs13, SlicingMode.SLICED, peephole=True)
    # row 1 is shared by Z01 and Z12: RY(-pi/2) then RY(+pi/2) on qubits 3, 4, 5
    assert len(plain.gates) - len(opt.gates) == 6
    assert np.allclose(circuit_unitary(plain.copy(plain.gates)), circuit_unitary(opt.copy(opt.gates)), atol=1e-12)


def test_sk1_option_expands_single_qubit_pulses(bs13):
    c = build_extraction_iontrap(bs13, SlicingMode.SLICED, sk1=True)
    one_q = [g for g in c.gates if len(g.support) == 1]
    assert len(one_q) == 3 * sum(len(g.support) == 1 for g in build_extraction_iontrap(bs13, SlicingMode.SLICED).gates)
