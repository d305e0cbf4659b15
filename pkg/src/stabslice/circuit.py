"""Circuits of rotations generated by Hermitian involutions.

A gate is ``exp(-i theta M)`` for an involution ``M`` (``M^2 = I``), computed
exactly as ``cos(theta) I - i sin(theta) M``.  The sign of ``theta`` is the
rotation direction.  Angles follow this convention everywhere: the Bloch-sphere
pulse ``RX(pi/2)`` is stored as ``theta = pi/4`` and the full Pauli ``X`` as
``theta = pi/2``.  The Molmer-Sorensen gate ``XX(pi/4) = exp(-i pi/4 XX)``
already uses it and is stored as ``theta = pi/4``.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .state import pauli_matrix

PI = math.pi


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    """Tensor product of X/Y/Z factors on labelled qubits, phase dropped."""

    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        items = tuple(sorted((int(q), str(p)) for q, p in self.factors))
        if not items:
            raise CircuitError("a PauliString needs at least one non-identity factor")
        labels = [q for q, _ in items]
        if len(set(labels)) != len(labels):
            raise CircuitError(f"repeated qubit in Pauli string {items}")
        for _, p in items:
            if p not in ("X", "Y", "Z"):
                raise CircuitError(f"bad Pauli letter {p!r}")
        object.__setattr__(self, "factors", items)

    @classmethod
    def from_dict(cls, d: Mapping[int, str]) -> PauliString:
        return cls(tuple((q, p) for q, p in d.items() if p != "I"))

    @classmethod
    def uniform(cls, letter: str, qubits: Iterable[int]) -> PauliString:
        return cls(tuple((q, letter) for q in qubits))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.factors)

    @property
    def letters(self) -> str:
        return "".join(p for _, p in self.factors)

    @property
    def weight(self) -> int:
        return len(self.factors)

    def as_dict(self) -> dict[int, str]:
        return dict(self.factors)

    def matrix(self, order: Sequence[int] | None = None) -> np.ndarray:
        if order is None:
            return pauli_matrix(self.letters)
        d = self.as_dict()
        return pauli_matrix("".join(d.get(q, "I") for q in order))

    def commutes_with(self, other: PauliString) -> bool:
        a, b = self.as_dict(), other.as_dict()
        anti = sum(1 for q in a.keys() & b.keys() if a[q] != b[q])
        return anti % 2 == 0

    def restrict(self, qubits: Iterable[int]) -> PauliString | None:
        keep = set(qubits)
        f = tuple((q, p) for q, p in self.factors if q in keep)
        return PauliString(f) if f else None

    def __mul__(self, other: PauliString) -> PauliString | None:
        """Product up to phase; None for the identity."""
        return pauli_product([self, other])

    def __str__(self) -> str:
        return " ".join(f"{q}:{p}" for q, p in self.factors)


_MULT = {
    ("X", "Y"): "Z", ("Y", "X"): "Z", ("Y", "Z"): "X",
    ("Z", "Y"): "X", ("Z", "X"): "Y", ("X", "Z"): "Y",
}


def pauli_product(paulis: Iterable[PauliString | None]) -> PauliString | None:
    acc: dict[int, str] = {}
    for p in paulis:
        if p is None:
            continue
        for q, ch in p.factors:
            cur = acc.get(q)
            if cur is None:
                acc[q] = ch
            elif cur == ch:
                del acc[q]
            else:
                acc[q] = _MULT[(cur, ch)]
    return PauliString.from_dict(acc) if acc else None


# --- generators -----------------------------------------------------------

@dataclass(frozen=True)
class Pauli:
    string: PauliString

    @property
    def support(self) -> tuple[int, ...]:
        return self.string.support

    def matrix(self) -> np.ndarray:
        return self.string.matrix()


@dataclass(frozen=True)
class ControlledPauli:
    """|0><0| (x) I + |1><1| (x) P, itself a Hermitian involution."""

    control: int
    target: PauliString

    def __post_init__(self):
        if self.control in self.target.support:
            raise CircuitError("control qubit inside the target support")

    @property
    def support(self) -> tuple[int, ...]:
        return (self.control,) + self.target.support

    def matrix(self) -> np.ndarray:
        p = self.target.matrix()
        d = p.shape[0]
        m = np.zeros((2 * d, 2 * d), dtype=complex)
        m[:d, :d] = np.eye(d)
        m[d:, d:] = p
        return m


@dataclass(frozen=True)
class PlanarAxis:
    """cos(phi) X + sin(phi) Y on one qubit."""

    qubit: int
    phi: float

    @property
    def support(self) -> tuple[int, ...]:
        return (self.qubit,)

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.phi), math.sin(self.phi)
        return np.array([[0, c - 1j * s], [c + 1j * s, 0]], dtype=complex)


Generator = Pauli | ControlledPauli | PlanarAxis


class NoiseClass(enum.Enum):
    ONE_QUBIT = "1q"
    TWO_QUBIT = "2q"
    THREE_QUBIT = "3q"
    NOISELESS = "none"


def default_noise_class(gen: Generator) -> NoiseClass:
    k = len(gen.support)
    if k == 1:
        return NoiseClass.ONE_QUBIT
    if k == 2:
        return NoiseClass.TWO_QUBIT
    return NoiseClass.THREE_QUBIT


@dataclass(frozen=True)
class Gate:
    generator: Generator
    theta: float
    noise_class: NoiseClass | None = None

    def __post_init__(self):
        if self.noise_class is None:
            object.__setattr__(self, "noise_class", default_noise_class(self.generator))

    @property
    def support(self) -> tuple[int, ...]:
        return self.generator.support

    @property
    def direction(self) -> int:
        return 1 if self.theta >= 0 else -1

    def with_theta(self, theta: float) -> Gate:
        return replace(self, theta=theta)


def rotation_unitary(g: Gate | Generator, theta: float | None = None) -> np.ndarray:
    """exp(-i theta M) = cos(theta) I - i sin(theta) M on the generator's support."""
    if isinstance(g, Gate):
        gen, theta = g.generator, g.theta if theta is None else theta
    else:
        gen = g
    m = gen.matrix()
    return math.cos(theta) * np.eye(m.shape[0]) - 1j * math.sin(theta) * m


# --- gate constructors (angles in the Bloch convention of the figures) --------

def rx(q: int, bloch: float) -> Gate:
    return Gate(Pauli(PauliString(((q, "X"),))), bloch / 2)


def ry(q: int, bloch: float) -> Gate:
    return Gate(Pauli(PauliString(((q, "Y"),))), bloch / 2)


def ms(a: int, b: int, chi: float) -> Gate:
    """Molmer-Sorensen XX(chi) = exp(-i chi X_a X_b)."""
    return Gate(Pauli(PauliString(((a, "X"), (b, "X")))), chi, NoiseClass.TWO_QUBIT)


def planar(q: int, bloch: float, phi: float) -> Gate:
    return Gate(PlanarAxis(q, phi), bloch / 2, NoiseClass.ONE_QUBIT)


# --- circuits ---------------------------------------------------------------

PREP_BASES = ("Z0", "Z1", "X+")


@dataclass(frozen=True)
class Prep:
    qubit: int
    basis: str = "Z0"

    def __post_init__(self):
        if self.basis not in PREP_BASES:
            raise CircuitError(f"unknown preparation basis {self.basis!r}")


@dataclass(frozen=True)
class Measure:
    """Ancilla readout; ``invert`` marks outcome 1 as the +1 eigenvalue."""

    qubit: int
    basis: str = "Z"
    stabilizer: str | None = None
    invert: bool = False

    def __post_init__(self):
        if self.basis not in ("Z", "X"):
            raise CircuitError(f"unknown measurement basis {self.basis!r}")


Op = Prep | Gate | Measure


@dataclass
class Circuit:
    data: tuple[int, ...] = ()
    ancillas: tuple[int, ...] = ()
    ops: list = field(default_factory=list)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(self.data) + tuple(self.ancillas)

    @property
    def gates(self) -> list[Gate]:
        return [op for op in self.ops if isinstance(op, Gate)]

    @property
    def measurements(self) -> list[Measure]:
        return [op for op in self.ops if isinstance(op, Measure)]

    def __iter__(self) -> Iterator[Op]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def copy(self, ops=None) -> Circuit:
        return Circuit(tuple(self.data), tuple(self.ancillas), list(self.ops if ops is None else ops))

    def validate(self) -> None:
        declared = set(self.qubits)
        if len(declared) != len(self.qubits):
            raise CircuitError("qubit declared twice")
        live = set(self.data)
        anc = set(self.ancillas)
        for i, op in enumerate(self.ops):
            if isinstance(op, Prep):
                if op.qubit not in anc:
                    raise CircuitError(f"op {i}: preparation of non-ancilla {op.qubit}")
                if op.qubit in live:
                    raise CircuitError(f"op {i}: ancilla {op.qubit} prepared twice before measurement")
                live.add(op.qubit)
            elif isinstance(op, Measure):
                if op.qubit not in anc or op.qubit not in live:
                    raise CircuitError(f"op {i}: measurement of unprepared qubit {op.qubit}")
                live.discard(op.qubit)
            else:
                for q in op.support:
                    if q not in declared:
                        raise CircuitError(f"op {i}: undeclared qubit {q}")
                    if q not in live:
                        raise CircuitError(f"op {i}: gate on inactive qubit {q}")
        if live - set(self.data):
            raise CircuitError(f"ancillas {sorted(live - set(self.data))} never measured")


def circuit_unitary(c: Circuit | Sequence[Gate], order: Sequence[int] | None = None) -> np.ndarray:
    """Ordered product of gate unitaries on ``order`` (default: sorted support)."""
    ops = c.ops if isinstance(c, Circuit) else list(c)
    if any(not isinstance(op, Gate) for op in ops):
        raise CircuitError("circuit_unitary is defined only for measurement-free gate lists")
    if order is None:
        if isinstance(c, Circuit) and c.qubits:
            order = c.qubits
        else:
            order = sorted({q for g in ops for q in g.support})
    order = tuple(order)
    if len(order) > 12:
        raise CircuitError("circuit too large for a dense unitary")
    n = len(order)
    u = np.eye(2**n, dtype=complex).reshape((2,) * n + (2**n,))
    from .state import apply_left

    for g in ops:
        pos = [order.index(q) for q in g.support]
        u = apply_left(u, rotation_unitary(g), pos)
    return np.ascontiguousarray(u).reshape(2**n, 2**n)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-12) -> bool:
    ph = np.vdot(b.ravel(), a.ravel())
    if abs(ph) < 1e-15:
        return False
    ph /= abs(ph)
    return bool(np.allclose(a, ph * b, atol=atol))


# --- compilations -----------------------------------------------------------

def compile_cnot(control: int, target: int, s: int = 1, v: int = 1) -> list[Gate]:
    """Trapped-ion CNOT: RY_c(v pi/2), XX(s pi/4), RX_c(-s pi/2), RX_t(-v s pi/2), RY_c(-v pi/2)."""
    if control == target:
        raise CircuitError("CNOT needs distinct qubits")
    if s not in (1, -1) or v not in (1, -1):
        raise CircuitError("s and v must be +1 or -1")
    return [
        ry(control, v * PI / 2),
        ms(control, target, s * PI / 4),
        rx(control, -s * PI / 2),
        rx(target, -v * s * PI / 2),
        ry(control, -v * PI / 2),
    ]


def compile_hadamard(q: int, variant: int = 1) -> list[Gate]:
    if variant == 1:
        return [ry(q, PI / 2), rx(q, -PI)]
    if variant == 2:
        return [rx(q, PI), ry(q, -PI / 2)]
    raise CircuitError("Hadamard variant must be 1 or 2")


def sk1_phase(bloch: float) -> float:
    r = bloch / (4 * PI)
    if abs(r) > 1:
        raise CircuitError(f"SK1 undefined for rotation angle {bloch}")
    return math.acos(-r)


def compile_sk1(bloch: float, phi: float, qubit: int = 0) -> list[Gate]:
    """SK1 composite pulse: R_phi(theta), R_{phi-phi1}(2pi), R_{phi+phi1}(2pi)."""
    if not 0 < bloch < 2 * PI:
        raise CircuitError("SK1 target angle must lie in (0, 2 pi)")
    phi1 = sk1_phase(bloch)
    return [
        planar(qubit, bloch, phi),
        planar(qubit, 2 * PI, phi - phi1),
        planar(qubit, 2 * PI, phi + phi1),
    ]


def sk1_replace(c: Circuit) -> Circuit:
    """Swap every single-qubit X/Y rotation for its SK1 composite."""
    out = []
    for op in c.ops:
        if isinstance(op, Gate) and len(op.support) == 1 and op.noise_class is not NoiseClass.NOISELESS:
            gen = op.generator
            if isinstance(gen, Pauli) and gen.string.letters in "XY":
                phi = 0.0 if gen.string.letters == "X" else PI / 2
            elif isinstance(gen, PlanarAxis):
                phi = gen.phi
            else:
                out.append(op)
                continue
            bloch = 2 * op.theta
            if bloch < 0:
                bloch, phi = -bloch, phi + PI
            bloch = bloch % (4 * PI)
            if bloch == 0:
                continue
            if bloch >= 2 * PI:
                # R(theta) = -R(theta - 2pi): same channel, shorter pulse
                bloch -= 2 * PI
                if bloch == 0:
                    continue
            out.extend(compile_sk1(bloch, phi, gen.support[0]))
        else:
            out.append(op)
    return c.copy(out)


# --- peephole optimizer -----------------------------------------------------

def _merge_key(g: Gate):
    if len(g.support) != 1:
        return None
    return (g.generator, g.noise_class)


def peephole_cancel(c: Circuit, atol: float = 1e-12) -> Circuit:
    """Merge adjacent same-generator single-qubit rotations; drop zero-angle results.

    Two rotations are adjacent on a qubit when no other op touches that qubit
    between them.
    """
    ops = list(c.ops)
    changed = True
    while changed:
        changed = False
        last: dict[int, int] = {}
        out: list = []
        for op in ops:
            qs = (op.qubit,) if isinstance(op, (Prep, Measure)) else op.support
            if isinstance(op, Gate) and _merge_key(op) is not None:
                q = qs[0]
                j = last.get(q)
                if j is not None and out[j] is not None and isinstance(out[j], Gate) and _merge_key(out[j]) == _merge_key(op):
                    theta = out[j].theta + op.theta
                    changed = True
                    if abs(theta) < atol:
                        out[j] = None
                        last.pop(q)
                    else:
                        out[j] = out[j].with_theta(theta)
                    continue
            for q in qs:
                last[q] = len(out)
            out.append(op)
        ops = [op for op in out if op is not None]
        if not changed:
            break
    return c.copy(ops)


# --- text format ------------------------------------------------------------

def _fmt_angle(theta: float) -> str:
    return f"{theta / PI:+.17g}"


def _fmt_pauli(p: PauliString) -> str:
    return " ".join(f"{q}:{ch}" for q, ch in p.factors)


def to_text(c: Circuit, comments: Sequence[str] = ()) -> str:
    lines = [f"# {line}" for line in comments]
    lines.append("Q " + " ".join(str(q) for q in c.data))
    if c.ancillas:
        lines.append("A " + " ".join(str(q) for q in c.ancillas))
    for op in c.ops:
        if isinstance(op, Prep):
            lines.append(f"PREP {op.qubit} {op.basis}")
        elif isinstance(op, Measure):
            name = op.stabilizer or "_"
            if op.invert:
                name = "-" + name
            lines.append(f"MEAS {op.qubit} {op.basis} {name}")
        else:
            gen = op.generator
            cls = "" if op.noise_class is default_noise_class(gen) else f" @{op.noise_class.value}"
            if isinstance(gen, Pauli):
                lines.append(f"ROT {_fmt_angle(op.theta)} P {_fmt_pauli(gen.string)}{cls}")
            elif isinstance(gen, ControlledPauli):
                lines.append(f"CROT {_fmt_angle(op.theta)} C {gen.control} P {_fmt_pauli(gen.target)}{cls}")
            else:
                lines.append(f"AXROT {_fmt_angle(op.theta)} {gen.qubit} {gen.phi!r}{cls}")
    return "\n".join(lines) + "\n"


def _parse_pauli(tokens: Sequence[str]) -> PauliString:
    items = []
    for tok in tokens:
        q, _, ch = tok.partition(":")
        items.append((int(q), ch))
    return PauliString(tuple(items))


def from_text(text: str) -> Circuit:
    """Parse the line format written by :func:`to_text`."""
    data: tuple[int, ...] = ()
    anc: tuple[int, ...] = ()
    ops: list = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        cls = None
        if tok[-1].startswith("@"):
            cls = NoiseClass(tok.pop()[1:])
        try:
            kind = tok[0]
            if kind == "Q":
                data = tuple(int(t) for t in tok[1:])
            elif kind == "A":
                anc = tuple(int(t) for t in tok[1:])
            elif kind == "PREP":
                ops.append(Prep(int(tok[1]), tok[2]))
            elif kind == "MEAS":
                name = tok[3] if len(tok) > 3 else "_"
                invert = name.startswith("-")
                name = name.lstrip("-")
                ops.append(Measure(int(tok[1]), tok[2], None if name == "_" else name, invert))
            elif kind == "ROT":
                assert tok[2] == "P"
                ops.append(Gate(Pauli(_parse_pauli(tok[3:])), float(tok[1]) * PI, cls))
            elif kind == "CROT":
                assert tok[2] == "C" and tok[4] == "P"
                gen = ControlledPauli(int(tok[3]), _parse_pauli(tok[5:]))
                ops.append(Gate(gen, float(tok[1]) * PI, cls))
            elif kind == "AXROT":
                ops.append(Gate(PlanarAxis(int(tok[2]), float(tok[3])), float(tok[1]) * PI, cls))
            else:
                raise CircuitError(f"unknown record {kind!r}")
        except (IndexError, ValueError, AssertionError) as exc:
            raise CircuitError(f"line {lineno}: cannot parse {raw!r} ({exc})") from None
    return Circuit(data, anc, ops)
