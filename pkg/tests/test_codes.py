import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabslice.circuit import PauliString, pauli_product
from stabslice.codes import (
    CodeError,
    GaugeFrame,
    build_lookup_decoder,
    gauge_fixing_operator,
    get_code,
    in_gauge_group,
    infer_gauge_frame,
    one_sided_error,
    prepare_logical_zero,
    syndrome_of,
)
from stabslice.state import apply_unitary, pauli_expectation


@pytest.fixture(scope="module")
def s17():
    return get_code("surface17")


@pytest.fixture(scope="module")
def bs13():
    return get_code("baconshor13")


def apply_pauli(state, p):
    return apply_unitary(state, p.matrix(), p.support)


def test_unknown_code():
    with pytest.raises(CodeError):
        get_code("steane")


def test_surface17_layout(s17):
    assert len(s17.data) == 9
    weights = sorted(s.pauli.weight for s in s17.stabilizers)
    assert weights == [2, 2, 2, 2, 4, 4, 4, 4]
    for a, b in itertools.combinations(s17.stabilizers, 2):
        assert a.pauli.commutes_with(b.pauli)
    assert s17.z_logical.weight == 3 and s17.x_logical.weight == 3
    assert not s17.z_logical.commutes_with(s17.x_logical)


def test_baconshor_layout(bs13):
    assert [s.pauli.weight for s in bs13.stabilizers] == [6, 6, 6, 6]
    assert len(bs13.gauges) == 12
    for s in bs13.stabilizers:
        for g in bs13.gauges:
            assert s.pauli.commutes_with(g)
    for g in bs13.x_gauges:
        assert bs13.z_logical.commutes_with(g)


def test_baconshor_x_stabilizer_is_gauge_product(bs13):
    gauges = [g for g in bs13.x_gauges if set(g.support) <= {0, 1, 3, 4, 6, 7}]
    assert len(gauges) == 3
    assert pauli_product(gauges) == bs13.stabilizer("X01").pauli


@pytest.mark.parametrize("name", ["surface17", "baconshor13"])
def test_zero_syndrome_decodes_to_identity(name):
    code = get_code(name)
    dec = build_lookup_decoder(code)
    assert dec.decode((0,) * len(code.stabilizers)) is None


def test_baconshor_corner_x_error(bs13):
    dec = build_lookup_decoder(bs13)
    err = PauliString.uniform("X", [0])
    syn = syndrome_of(bs13, err)
    names = [s.name for s in bs13.stabilizers]
    assert syn[names.index("Z01")] == 1 and syn[names.index("Z12")] == 0
    corr = dec.decode(syn)
    assert set(corr.support) <= {0, 1, 2} and corr.letters == "X"
    assert in_gauge_group(bs13, pauli_product([err, corr]))


@pytest.mark.parametrize("q", range(9))
def test_surface17_single_z_errors_corrected(s17, q):
    dec = build_lookup_decoder(s17)
    err = PauliString.uniform("Z", [q])
    residual = pauli_product([err, dec.decode(syndrome_of(s17, err))])
    assert residual is None or (
        all(residual.commutes_with(s.pauli) for s in s17.stabilizers) and residual.commutes_with(s17.x_logical)
    )


@pytest.mark.parametrize("name", ["surface17", "baconshor13"])
@pytest.mark.parametrize("letter", ["X", "Z"])
def test_single_errors_never_flip_logicals(name, letter):
    code = get_code(name)
    dec = build_lookup_decoder(code)
    other = code.x_logical if letter == "Z" else code.z_logical
    for q in code.data:
        err = PauliString.uniform(letter, [q])
        residual = pauli_product([err, dec.decode(syndrome_of(code, err))])
        assert syndrome_of(code, residual) == (0,) * len(code.stabilizers)
        assert residual is None or residual.commutes_with(other)


def test_decoder_dump_lists_every_syndrome(bs13):
    text = build_lookup_decoder(bs13).dump()
    assert text.splitlines()[0] == "# X01 X12 Z01 Z12"
    assert len(text.splitlines()) == 1 + 16


def test_reverse_tie_break_differs(bs13):
    a = build_lookup_decoder(bs13)
    b = build_lookup_decoder(bs13, "reverse")
    assert a.table != b.table


def test_logical_zero_surface17(s17):
    rho = prepare_logical_zero(s17)
    for s in s17.stabilizers:
        assert pauli_expectation(rho, s.pauli) == pytest.approx(1)
    assert pauli_expectation(rho, s17.z_logical) == pytest.approx(1)
    assert pauli_expectation(rho, s17.x_logical) == pytest.approx(0, abs=1e-12)


def test_logical_zero_baconshor(bs13):
    rho = prepare_logical_zero(bs13)
    for g in bs13.x_gauges:
        assert pauli_expectation(rho, g) == pytest.approx(1)
    assert pauli_expectation(rho, bs13.z_logical) == pytest.approx(1)
    assert pauli_expectation(rho, bs13.x_logical) == pytest.approx(0, abs=1e-12)


def test_one_sided_error(bs13):
    rho = prepare_logical_zero(bs13)
    assert one_sided_error(rho, bs13) == pytest.approx(0, abs=1e-12)
    assert one_sided_error(apply_pauli(rho, bs13.x_logical), bs13) == pytest.approx(1)
    assert one_sided_error(apply_pauli(rho, bs13.z_logical), bs13) == pytest.approx(0, abs=1e-12)
    assert one_sided_error(apply_pauli(rho, bs13.x_logical).scaled(0.25), bs13) == pytest.approx(0.25)


def test_gauge_frame_after_corner_z(bs13):
    rho = prepare_logical_zero(bs13)
    assert infer_gauge_frame(rho, bs13) == GaugeFrame.trivial(bs13)
    frame = infer_gauge_frame(apply_pauli(rho, PauliString.uniform("Z", [0])), bs13)
    flipped = [g for g, s in zip(bs13.x_gauges, frame.signs) if s == -1]
    assert flipped == [PauliString.uniform("X", [0, 1])]
    frame = infer_gauge_frame(apply_pauli(rho, PauliString.uniform("Z", [1])), bs13)
    assert frame.signs.count(-1) == 2


def test_x_gauge_leaves_frame(bs13):
    rho = prepare_logical_zero(bs13)
    for g in bs13.x_gauges:
        assert infer_gauge_frame(apply_pauli(rho, g), bs13) == GaugeFrame.trivial(bs13)


def test_frame_tracking_matches_state(bs13):
    rho = prepare_logical_zero(bs13)
    err = PauliString.from_dict({1: "Z", 5: "Y", 7: "Z"})
    assert infer_gauge_frame(apply_pauli(rho, err), bs13) == GaugeFrame.trivial(bs13).flipped_by(bs13, err)


def test_single_gauge_frame_needs_non_gauge_string(bs13):
    frame = GaugeFrame((-1, 1, 1, 1, 1, 1))
    fix = gauge_fixing_operator(bs13, frame)
    assert fix == PauliString.uniform("Z", [0])
    assert frame.flipped_by(bs13, fix) == GaugeFrame.trivial(bs13)


def test_two_gauge_frame_prefers_gauge_group(bs13):
    fix = gauge_fixing_operator(bs13, GaugeFrame((-1, 1, -1, 1, 1, 1)))
    assert fix == PauliString.uniform("Z", [0, 3])
    assert in_gauge_group(bs13, fix)


@settings(max_examples=64, deadline=None)
@given(st.lists(st.sampled_from([1, -1]), min_size=6, max_size=6))
def test_gauge_fix_resets_any_frame(signs):
    code = get_code("baconshor13")
    frame = GaugeFrame(tuple(signs))
    fix = gauge_fixing_operator(code, frame)
    assert frame.flipped_by(code, fix) == GaugeFrame.trivial(code)
    if fix is not None:
        assert set(fix.letters) == {"Z"}
        assert fix.commutes_with(code.z_logical)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.integers(0, 8), st.sampled_from("XYZ"), min_size=1, max_size=4))
def test_syndrome_is_linear(err_dict):
    code = get_code("surface17")
    items = sorted(err_dict.items())
    half = len(items) // 2
    a = PauliString(tuple(items[:half])) if half else None
    b = PauliString(tuple(items[half:]))
    sa, sb = np.array(syndrome_of(code, a)), np.array(syndrome_of(code, b))
    assert tuple((sa + sb) % 2) == syndrome_of(code, pauli_product([a, b]))
