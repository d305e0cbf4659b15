"""Syndrome-extraction circuits with and without stabilizer slicing.

A stabilizer ``S = S_L S_R`` is measured through two controlled halves.  When
the halves rotate in opposite directions their systematic overrotations cancel
on the +1 eigenspace of ``S``.  Two gate sets are supported:

* ``native3body``: controlled-Pauli rotations ``exp(-i theta C S_half)`` with
  ``theta = +-pi/2`` (3-body for weight-2 halves).
* ``iontrap2body``: Molmer-Sorensen ``XX(+-pi/4)`` gates plus single-qubit
  pulses, where slicing is the choice of MS directions.  For Bacon-Shor the
  slices follow the gauge pairs, so cancellation needs the X gauges at +1.
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    PI,
    Circuit,
    CircuitError,
    ControlledPauli,
    Gate,
    Measure,
    NoiseClass,
    PauliString,
    Prep,
    circuit_unitary,
    ms,
    peephole_cancel,
    rx,
    ry,
    sk1_replace,
)
from .codes import GaugeFrame, Stabilizer, SubsystemCode

log = logging.getLogger(__name__)


class SlicingMode(enum.Enum):
    UNSLICED = "unsliced"
    SLICED = "sliced"
    ADAPTIVE = "adaptive"
    # every pair direction set against the tracked gauge: maximal constructive error
    WORST = "worst"


BASELINES = ("all-positive", "figure1-default")


@dataclass(frozen=True)
class SliceEntry:
    left: PauliString
    right: PauliString
    left_sign: int = 1
    right_sign: int = -1


def slice_stabilizer(s: PauliString, order: Sequence[int] | None = None) -> SliceEntry:
    """Split ``s`` into first and second halves of ``order`` (default: label order)."""
    if s is None or s.weight == 0:
        raise CircuitError("cannot slice an empty stabilizer")
    order = tuple(order) if order is not None else s.support
    if sorted(order) != sorted(s.support):
        raise CircuitError("slice order must list the stabilizer support")
    w = len(order)
    if w % 2:
        log.warning("odd-weight stabilizer %s sliced asymmetrically", s)
    half = (w + 1) // 2
    d = s.as_dict()
    left = PauliString(tuple((q, d[q]) for q in order[:half]))
    right = PauliString(tuple((q, d[q]) for q in order[half:])) if w > 1 else None
    if right is None:
        raise CircuitError("a weight-1 operator has no second half")
    return SliceEntry(left, right)


@dataclass
class Slicing:
    """Resolved directions: per stabilizer, the block order and MS sign of each data qubit."""

    entries: dict[str, SliceEntry] = field(default_factory=dict)
    signs: dict[str, tuple[tuple[int, int], ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class ExtractionSchedule:
    blocks: tuple[str, ...]
    mode: SlicingMode


def default_schedule(code: SubsystemCode, mode: SlicingMode = SlicingMode.SLICED) -> ExtractionSchedule:
    """X stabilizers in raster order, then Z stabilizers; one ancilla reused."""
    xs = [s.name for s in code.stabilizers if s.kind == "X"]
    zs = [s.name for s in code.stabilizers if s.kind == "Z"]
    return ExtractionSchedule(tuple(xs + zs), mode)


def _block_order_and_signs(stab: Stabilizer, mode: SlicingMode, frame, code) -> tuple[tuple[int, int], ...]:
    if stab.pairs:
        out = []
        for a, b in stab.pairs:
            if mode is SlicingMode.UNSLICED:
                out += [(a, 1), (b, 1)]
                continue
            # X_a + s_b X_b = X_a (1 + s_b X_a X_b) vanishes when s_b = -<X_a X_b>
            sb = -1
            if stab.kind == "X" and mode is SlicingMode.ADAPTIVE:
                sb = -frame.sign_of(code, (a, b))
            elif stab.kind == "X" and mode is SlicingMode.WORST:
                sb = frame.sign_of(code, (a, b))
            out += [(a, 1), (b, sb)]
        return tuple(out)
    entry = slice_stabilizer(stab.pauli, stab.order)
    if mode is SlicingMode.UNSLICED:
        return tuple((q, 1) for q in stab.order)
    if mode is SlicingMode.WORST:
        return tuple((q, 1) for q in stab.order)
    return tuple((q, entry.left_sign) for q in entry.left.support) + tuple(
        (q, entry.right_sign) for q in _in_order(entry.right, stab.order)
    )


def _in_order(p: PauliString, order: Sequence[int]) -> tuple[int, ...]:
    sup = set(p.support)
    return tuple(q for q in order if q in sup)


def assign_directions(
    code: SubsystemCode,
    mode: SlicingMode,
    gauge_frame: GaugeFrame | None = None,
    blocks: Sequence[str] | None = None,
) -> Slicing:
    """Unsliced: all +.  Sliced: + on the first half, - on the second.

    Adaptive flips the relative direction of every X-gauge pair whose tracked
    sign is -1, which restores the cancellation on that gauge sector.
    """
    if mode in (SlicingMode.ADAPTIVE, SlicingMode.WORST) and gauge_frame is None:
        raise CircuitError(f"{mode.value} slicing needs a gauge frame")
    names = blocks if blocks is not None else default_schedule(code).blocks
    out = Slicing()
    for name in names:
        stab = code.stabilizer(name)
        out.entries[name] = slice_stabilizer(stab.pauli, stab.order)
        out.signs[name] = _block_order_and_signs(stab, mode, gauge_frame, code)
    return out


# --- measurement sign convention ----------------------------------------------

def _plus_eigenstate(stab: PauliString, order: Sequence[int]) -> np.ndarray:
    n = len(order)
    v = np.zeros(2**n, dtype=complex)
    v[0] = 1.0
    v = v + stab.matrix(order) @ v
    return v / np.linalg.norm(v)


def _measurement_invert(gates: Sequence[Gate], ancilla: int, prep: str, basis: str, stab: PauliString) -> bool:
    """Which ancilla outcome reports +1, found by simulating the noiseless block."""
    support = stab.support
    order = (ancilla,) + tuple(support)
    anc = {"Z0": np.array([1, 0]), "Z1": np.array([0, 1]), "X+": np.array([1, 1]) / math.sqrt(2)}[prep]
    psi = np.kron(anc, _plus_eigenstate(stab, support)).astype(complex)
    psi = circuit_unitary(list(gates), order) @ psi
    t = psi.reshape(2, -1)
    if basis == "X":
        t = np.array([t[0] + t[1], t[0] - t[1]]) / math.sqrt(2)
    p0 = float(np.sum(abs(t[0]) ** 2))
    if abs(p0 - 1) < 1e-9:
        return False
    if abs(p0) < 1e-9:
        return True
    raise CircuitError(f"block for {stab} is not a stabilizer measurement (p0={p0:.3g})")


# --- native 3-body extraction -------------------------------------------------

def controlled_halves_block(
    stab: PauliString,
    ancilla: int,
    signs: tuple[int, int] = (1, -1),
    order: Sequence[int] | None = None,
    name: str | None = None,
) -> list:
    """|+> ancilla, C-S_L and C-S_R rotations of +-pi/2, X readout."""
    entry = slice_stabilizer(stab, order)
    gates = []
    for half, sign in ((entry.left, signs[0]), (entry.right, signs[1])):
        gen = ControlledPauli(ancilla, half)
        cls = NoiseClass.TWO_QUBIT if half.weight == 1 else NoiseClass.THREE_QUBIT
        gates.append(Gate(gen, sign * PI / 2, cls))
    invert = _measurement_invert(gates, ancilla, "X+", "X", stab)
    return [Prep(ancilla, "X+"), *gates, Measure(ancilla, "X", name, invert)]


def build_extraction_3body(code: SubsystemCode, mode: SlicingMode, ancilla: int | None = None) -> Circuit:
    """One round of bare-ancilla extraction with native controlled-half gates."""
    ancilla = max(code.data) + 1 if ancilla is None else ancilla
    if mode in (SlicingMode.ADAPTIVE, SlicingMode.WORST):
        mode = SlicingMode.SLICED
    ops = []
    for name in default_schedule(code).blocks:
        stab = code.stabilizer(name)
        if stab.pauli.weight > 4:
            raise CircuitError(f"stabilizer {name} has weight {stab.pauli.weight} > 4")
        signs = (1, 1) if mode is SlicingMode.UNSLICED else (1, -1)
        ops += controlled_halves_block(stab.pauli, ancilla, signs, stab.order, name)
    c = Circuit(code.data, (ancilla,), ops)
    c.validate()
    return c


# --- trapped-ion extraction -----------------------------------------------------

def iontrap_block(
    stab: Stabilizer,
    ancilla: int,
    signs: Sequence[tuple[int, int]],
    baseline: str = "all-positive",
) -> list:
    """MS-compiled measurement of one stabilizer with the ancilla prepared in |0>.

    Per data qubit j (MS sign s_j): X-type blocks apply XX(s_j pi/4) then
    RX_j(c s_j pi/2); Z-type blocks wrap the same pair in RY_j(pi/2) ...
    RY_j(-pi/2).  The ancilla single-qubit pulses of the CNOT compilation
    commute to the readout and are absorbed into the sign convention.
    ``c`` is +1 by default; the ``figure1-default`` baseline uses the
    s = v = +1 compilation verbatim, i.e. c = -1.
    """
    if baseline not in BASELINES:
        raise CircuitError(f"unknown baseline {baseline!r}")
    c = -1 if baseline == "figure1-default" else 1
    gates: list[Gate] = []
    for q, s in signs:
        if stab.kind == "X":
            gates += [ms(ancilla, q, s * PI / 4), rx(q, c * s * PI / 2)]
        else:
            gates += [ry(q, PI / 2), ms(ancilla, q, s * PI / 4), rx(q, c * s * PI / 2), ry(q, -PI / 2)]
    invert = _measurement_invert(gates, ancilla, "Z0", "Z", stab.pauli)
    return [Prep(ancilla, "Z0"), *gates, Measure(ancilla, "Z", stab.name, invert)]


def build_extraction_iontrap(
    code: SubsystemCode,
    mode: SlicingMode,
    gauge_frame: GaugeFrame | None = None,
    baseline: str = "all-positive",
    peephole: bool = False,
    sk1: bool = False,
    ancilla: int | None = None,
) -> Circuit:
    """One extraction round compiled to MS gates and single-qubit pulses."""
    if code.name not in ("baconshor13", "surface17"):
        raise CircuitError(f"unsupported code {code.name}")
    ancilla = max(code.data) + 1 if ancilla is None else ancilla
    if mode in (SlicingMode.ADAPTIVE, SlicingMode.WORST) and gauge_frame is None:
        gauge_frame = GaugeFrame.trivial(code)
    slicing = assign_directions(code, mode, gauge_frame)
    ops = []
    for name in default_schedule(code).blocks:
        ops += iontrap_block(code.stabilizer(name), ancilla, slicing.signs[name], baseline)
    c = Circuit(code.data, (ancilla,), ops)
    if peephole:
        c = peephole_cancel(c)
    if sk1:
        c = sk1_replace(c)
    c.validate()
    return c


def build_extraction(
    code: SubsystemCode,
    gate_set: str,
    mode: SlicingMode,
    gauge_frame: GaugeFrame | None = None,
    **opts,
) -> Circuit:
    if gate_set == "native3body":
        return build_extraction_3body(code, mode)
    if gate_set == "iontrap2body":
        return build_extraction_iontrap(code, mode, gauge_frame, **opts)
    raise CircuitError(f"unknown gate set {gate_set!r}")
