"""Surface-17 and Bacon-Shor-13: geometry, lookup decoding, logical states."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import PauliString, pauli_product
from .state import (
    DensityState,
    PureState,
    StateError,
    apply_left,
    pauli_expectation,
    pauli_matrix,
)

log = logging.getLogger(__name__)


class CodeError(ValueError):
    pass


@dataclass(frozen=True)
class Stabilizer:
    name: str
    pauli: PauliString
    # layout order of the support; first half / second half is the default slice
    order: tuple[int, ...]
    # gauge pairs whose product is this stabilizer (Bacon-Shor only)
    pairs: tuple[tuple[int, int], ...] = ()

    @property
    def kind(self) -> str:
        return self.pauli.letters[0]


@dataclass(frozen=True)
class SubsystemCode:
    name: str
    coords: Mapping[int, tuple[int, int]]
    stabilizers: tuple[Stabilizer, ...]
    gauges: tuple[PauliString, ...]
    z_logical: PauliString
    x_logical: PauliString

    @property
    def data(self) -> tuple[int, ...]:
        return tuple(sorted(self.coords))

    @property
    def x_gauges(self) -> tuple[PauliString, ...]:
        return tuple(g for g in self.gauges if g.letters[0] == "X")

    def stabilizer(self, name: str) -> Stabilizer:
        for s in self.stabilizers:
            if s.name == name:
                return s
        raise KeyError(name)

    def check(self) -> None:
        stabs = [s.pauli for s in self.stabilizers]
        for a, b in itertools.combinations(stabs, 2):
            if not a.commutes_with(b):
                raise CodeError(f"stabilizers {a} and {b} anticommute")
        for s in stabs:
            for g in self.gauges + (self.z_logical, self.x_logical):
                if not s.commutes_with(g):
                    raise CodeError(f"stabilizer {s} anticommutes with {g}")
        for g in self.gauges:
            for lg in (self.z_logical, self.x_logical):
                if not g.commutes_with(lg):
                    raise CodeError(f"gauge {g} anticommutes with logical {lg}")
        if self.z_logical.commutes_with(self.x_logical):
            raise CodeError("logical operators commute")


def _q(r: int, c: int) -> int:
    return 3 * r + c


def _coords() -> dict[int, tuple[int, int]]:
    return {_q(r, c): (r, c) for r in range(3) for c in range(3)}


def surface17() -> SubsystemCode:
    """Rotated distance-3 surface code on a 3x3 grid (labels 3r + c).

    Plaquette orders are NW, NE, SW, SE.  X boundaries sit on the top and
    bottom edges, so Z_L is the top row and X_L the left column.
    """

    def plaq(kind, r, c):
        order = (_q(r, c), _q(r, c + 1), _q(r + 1, c), _q(r + 1, c + 1))
        return PauliString.uniform(kind, order), order

    stabs = []
    for name, kind, r, c in (("X1", "X", 0, 1), ("X2", "X", 1, 0)):
        p, order = plaq(kind, r, c)
        stabs.append(Stabilizer(name, p, order))
    for name, order in (("X0", (_q(0, 0), _q(0, 1))), ("X3", (_q(2, 1), _q(2, 2)))):
        stabs.append(Stabilizer(name, PauliString.uniform("X", order), order))
    for name, kind, r, c in (("Z1", "Z", 0, 0), ("Z2", "Z", 1, 1)):
        p, order = plaq(kind, r, c)
        stabs.append(Stabilizer(name, p, order))
    for name, order in (("Z0", (_q(0, 2), _q(1, 2))), ("Z3", (_q(1, 0), _q(2, 0)))):
        stabs.append(Stabilizer(name, PauliString.uniform("Z", order), order))
    # raster order of plaquette centres within each type
    xs = sorted((s for s in stabs if s.kind == "X"), key=_centre)
    zs = sorted((s for s in stabs if s.kind == "Z"), key=_centre)
    xs = [replace(s, name=f"X{i}") for i, s in enumerate(xs)]
    zs = [replace(s, name=f"Z{i}") for i, s in enumerate(zs)]
    code = SubsystemCode(
        "surface17",
        _coords(),
        tuple(xs + zs),
        (),
        PauliString.uniform("Z", (_q(0, 0), _q(0, 1), _q(0, 2))),
        PauliString.uniform("X", (_q(0, 0), _q(1, 0), _q(2, 0))),
    )
    code.check()
    return code


def _centre(s: Stabilizer) -> tuple[float, float]:
    rs = [q // 3 for q in s.order]
    cs = [q % 3 for q in s.order]
    return (sum(rs) / len(rs), sum(cs) / len(cs))


def baconshor13() -> SubsystemCode:
    """Bacon-Shor code on a 3x3 grid (9 data qubits plus 4 ancillas in hardware).

    X gauges are horizontal pairs X(r,c)X(r,c+1); X stabilizers cover column
    pairs.  Z gauges are vertical pairs; Z stabilizers cover row pairs.  Each
    stabilizer's order lists one member of every gauge pair first, so its
    first/second-half split places the two qubits of each gauge on opposite
    sides.
    """
    stabs = []
    for c in range(2):
        pairs = tuple((_q(r, c), _q(r, c + 1)) for r in range(3))
        order = tuple(a for a, _ in pairs) + tuple(b for _, b in pairs)
        stabs.append(Stabilizer(f"X{c}{c + 1}", PauliString.uniform("X", order), order, pairs))
    for r in range(2):
        pairs = tuple((_q(r, c), _q(r + 1, c)) for c in range(3))
        order = tuple(a for a, _ in pairs) + tuple(b for _, b in pairs)
        stabs.append(Stabilizer(f"Z{r}{r + 1}", PauliString.uniform("Z", order), order, pairs))
    gauges = [PauliString.uniform("X", (_q(r, c), _q(r, c + 1))) for r in range(3) for c in range(2)]
    gauges += [PauliString.uniform("Z", (_q(r, c), _q(r + 1, c))) for r in range(2) for c in range(3)]
    code = SubsystemCode(
        "baconshor13",
        _coords(),
        tuple(stabs),
        tuple(gauges),
        PauliString.uniform("Z", (_q(0, 0), _q(0, 1), _q(0, 2))),
        PauliString.uniform("X", (_q(0, 0), _q(1, 0), _q(2, 0))),
    )
    code.check()
    return code


CODES = {"surface17": surface17, "baconshor13": baconshor13}


def get_code(name: str) -> SubsystemCode:
    try:
        return CODES[name]()
    except KeyError:
        raise CodeError(f"unknown code {name!r}; expected one of {sorted(CODES)}") from None


# --- syndromes and decoding ---------------------------------------------------

def syndrome_of(code: SubsystemCode, error: PauliString | None) -> tuple[int, ...]:
    """Bit per stabilizer: 1 where the error anticommutes with it."""
    if error is None:
        return (0,) * len(code.stabilizers)
    return tuple(0 if s.pauli.commutes_with(error) else 1 for s in code.stabilizers)


def _group_span(code: SubsystemCode) -> set:
    """All elements (up to phase) of the group generated by stabilizers and gauges."""
    gens = [s.pauli for s in code.stabilizers] + list(code.gauges)
    seen = {None}
    frontier = [None]
    while frontier:
        nxt = []
        for el in frontier:
            for g in gens:
                p = pauli_product([el, g])
                if p not in seen:
                    seen.add(p)
                    nxt.append(p)
        frontier = nxt
    return seen


_SPANS: dict[str, set] = {}


def in_gauge_group(code: SubsystemCode, p: PauliString | None) -> bool:
    span = _SPANS.get(code.name)
    if span is None:
        span = _SPANS[code.name] = _group_span(code)
    return p in span


@dataclass
class SyndromeTable:
    code_name: str
    stabilizer_names: tuple[str, ...]
    table: dict = field(default_factory=dict)

    def decode(self, syndrome: Sequence[int]) -> PauliString | None:
        key = tuple(int(b) for b in syndrome)
        try:
            return self.table[key]
        except KeyError:
            raise CodeError(f"syndrome {key} missing from the lookup table") from None

    def dump(self) -> str:
        lines = ["# " + " ".join(self.stabilizer_names)]
        for key in sorted(self.table):
            corr = self.table[key]
            lines.append("".join(map(str, key)) + " -> " + (str(corr) if corr else "I"))
        return "\n".join(lines) + "\n"


def _candidates(qubits: Sequence[int], letter: str, weight: int, tie_break: str):
    order = list(qubits) if tie_break == "lexicographic" else list(reversed(qubits))
    for combo in itertools.combinations(order, weight):
        yield PauliString.uniform(letter, combo)


def build_lookup_decoder(code: SubsystemCode, tie_break: str = "lexicographic") -> SyndromeTable:
    """Minimum-weight lookup table, built separately for X and Z errors.

    X errors are matched against the Z-stabilizer bits and Z errors against
    the X-stabilizer bits (both codes are CSS); the full correction is the
    product.  Ties go to the lexicographically smallest qubit labels (or the
    largest with ``tie_break="reverse"``).
    """
    if tie_break not in ("lexicographic", "reverse"):
        raise CodeError(f"unknown tie_break {tie_break!r}")
    n_s = len(code.stabilizers)
    partial: dict[str, dict] = {}
    for letter, detect in (("X", "Z"), ("Z", "X")):
        idx = [i for i, s in enumerate(code.stabilizers) if s.kind == detect]
        sub: dict[tuple[int, ...], PauliString | None] = {(0,) * len(idx): None}
        for w in (1, 2):
            for err in _candidates(code.data, letter, w, tie_break):
                syn = syndrome_of(code, err)
                key = tuple(syn[i] for i in idx)
                sub.setdefault(key, err)
        for key in itertools.product((0, 1), repeat=len(idx)):
            if key not in sub:
                log.warning("%s: %s-syndrome %s unreachable by weight <= 2", code.name, detect, key)
                sub[key] = None
        partial[letter] = (idx, sub)
    table = {}
    (ix, subx), (iz, subz) = partial["X"], partial["Z"]
    for bits in itertools.product((0, 1), repeat=n_s):
        kx = tuple(bits[i] for i in ix)
        kz = tuple(bits[i] for i in iz)
        table[bits] = pauli_product([subx[kx], subz[kz]])
    return SyndromeTable(code.name, tuple(s.name for s in code.stabilizers), table)


# --- logical states and readout -------------------------------------------------

def _apply_pauli_vec(vec: np.ndarray, p: PauliString, qubits: Sequence[int]) -> np.ndarray:
    n = len(qubits)
    t = vec.reshape((2,) * n)
    for q, ch in p.factors:
        t = apply_left(t, pauli_matrix(ch), [qubits.index(q)])
    return np.ascontiguousarray(t).reshape(-1)


def logical_zero_vector(code: SubsystemCode) -> np.ndarray:
    qubits = list(code.data)
    fixed = [s.pauli for s in code.stabilizers] + [code.z_logical] + list(code.x_gauges)
    v = np.zeros(2 ** len(qubits), dtype=complex)
    v[0] = 1.0
    for p in fixed:
        v = (v + _apply_pauli_vec(v, p, qubits)) / 2
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise CodeError("projector product annihilates the fiducial state")
    return v / norm


def prepare_logical_zero(code: SubsystemCode) -> DensityState:
    """|0>_L fixed by every stabilizer, by Z_L, and (Bacon-Shor) by every X gauge."""
    v = logical_zero_vector(code)
    return DensityState(code.data, np.outer(v, v.conj()))


def prepare_logical_zero_pure(code: SubsystemCode) -> PureState:
    return PureState(code.data, logical_zero_vector(code))


def one_sided_error(state: DensityState, code: SubsystemCode) -> float:
    """tr((I - Z_L)/2 rho): weight of the -1 outcome of a bare Z_L readout."""
    w = state.weight
    if w == 0:
        return 0.0
    return 0.5 * (w - w * pauli_expectation(state, code.z_logical))


@dataclass(frozen=True)
class GaugeFrame:
    """Tracked sign of each X gauge, in ``code.x_gauges`` order."""

    signs: tuple[int, ...]

    @classmethod
    def trivial(cls, code: SubsystemCode) -> GaugeFrame:
        return cls((1,) * len(code.x_gauges))

    def flipped_by(self, code: SubsystemCode, p: PauliString | None) -> GaugeFrame:
        if p is None:
            return self
        return GaugeFrame(
            tuple(s if g.commutes_with(p) else -s for s, g in zip(self.signs, code.x_gauges))
        )

    def sign_of(self, code: SubsystemCode, pair: tuple[int, int]) -> int:
        target = PauliString.uniform("X", pair)
        for s, g in zip(self.signs, code.x_gauges):
            if g == target:
                return s
        return 1


def infer_gauge_frame(state, code: SubsystemCode, atol: float = 1e-6) -> GaugeFrame:
    signs = []
    for g in code.x_gauges:
        e = pauli_expectation(state, g)
        if abs(e - 1) <= atol:
            signs.append(1)
        elif abs(e + 1) <= atol:
            signs.append(-1)
        else:
            raise StateError(f"gauge {g} is indefinite (expectation {e:.3g})")
    return GaugeFrame(tuple(signs))


def gauge_fixing_operator(code: SubsystemCode, frame: GaugeFrame) -> PauliString | None:
    """Lowest-weight Z-type Pauli that maps the tracked frame back to all +1.

    Products of Z gauges are preferred at equal weight.  A frame left by a
    residual Z error (one gauge of a stabilizer flipped) needs a Z string
    outside the gauge group; Z-type operators never move the Z_L readout, so
    the reset is invisible to the one-sided functional.  Returns None for a
    trivial frame.
    """
    if all(s == 1 for s in frame.signs):
        return None
    target = tuple(0 if s == 1 else 1 for s in frame.signs)
    for w in range(1, len(code.data) + 1):
        hits = []
        for combo in itertools.combinations(code.data, w):
            p = PauliString.uniform("Z", combo)
            if tuple(0 if g.commutes_with(p) else 1 for g in code.x_gauges) == target:
                hits.append(p)
        if hits:
            gauge = [p for p in hits if in_gauge_group(code, p)]
            return (gauge or hits)[0]
    raise CodeError(f"frame {frame.signs} is not reachable by any Z string")
