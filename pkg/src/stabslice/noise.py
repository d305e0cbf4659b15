"""Overrotation noise: coherent, stochastic and mixed channels bound to gates.

Each gate ``exp(-i theta G)`` is followed by a channel built from its own
generator ``G``:

    coherent    rho -> exp(-i d eps G) rho exp(i d eps G)       (d = sign of theta)
    stochastic  rho -> cos^2(eps) rho + sin^2(eps) G rho G
    mixed       kappa * coherent + (1 - kappa) * stochastic

Both pure channels have the same average gate fidelity, so ``kappa`` moves
between coherent and incoherent noise at fixed gate infidelity.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    PI,
    Circuit,
    ControlledPauli,
    Gate,
    Generator,
    Measure,
    NoiseClass,
    Pauli,
    PauliString,
    PlanarAxis,
    Prep,
    compile_sk1,
    planar,
    rotation_unitary,
)
from .state import mixture_superop


class NoiseError(ValueError):
    pass


# A channel term: (probability, unitary on the channel support)
Term = tuple[float, np.ndarray]


@dataclass(frozen=True)
class Channel:
    """Finite mixture of unitaries on ``support``.

    ``kinds`` labels each term ("coherent", "identity", "flip") so trajectory
    sampling can tell which Pauli-like event occurred.
    """

    support: tuple[int, ...]
    terms: tuple[Term, ...]
    kinds: tuple[str, ...] = ()
    generator: Generator | None = None

    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.terms])

    def as_state_terms(self):
        return [(p, u, self.support) for p, u in self.terms]

    def superop(self) -> np.ndarray:
        return mixture_superop(list(self.terms))


def _identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def coherent_channel(gen: Generator, eps: float, direction: int = 1) -> Channel:
    if eps < 0:
        raise NoiseError("error angle must be non-negative")
    u = rotation_unitary(gen, direction * eps)
    return Channel(gen.support, ((1.0, u),), ("coherent",), gen)


def stochastic_channel(gen: Generator, eps: float) -> Channel:
    if eps < 0:
        raise NoiseError("error angle must be non-negative")
    m = gen.matrix()
    c2, s2 = math.cos(eps) ** 2, math.sin(eps) ** 2
    return Channel(gen.support, ((c2, _identity(m.shape[0])), (s2, m)), ("identity", "flip"), gen)


def mixed_channel(gen: Generator, eps: float, kappa: float, direction: int = 1) -> Channel:
    """kappa-weighted mixture of :func:`coherent_channel` and :func:`stochastic_channel`."""
    if not 0.0 <= kappa <= 1.0:
        raise NoiseError(f"kappa={kappa} outside [0, 1]")
    coh = coherent_channel(gen, eps, direction)
    sto = stochastic_channel(gen, eps)
    terms = [(kappa * p, u) for p, u in coh.terms] + [((1 - kappa) * p, u) for p, u in sto.terms]
    kinds = coh.kinds + sto.kinds
    keep = [i for i, (p, _) in enumerate(terms) if p > 0]
    if not keep:
        keep = [0]
    return Channel(gen.support, tuple(terms[i] for i in keep), tuple(kinds[i] for i in keep), gen)


def dephasing_channel(qubit: int, p: float) -> Channel:
    z = np.diag([1.0, -1.0]).astype(complex)
    gen = Pauli(PauliString(((qubit, "Z"),)))
    terms = [(1 - p, _identity(2)), (p, z)]
    keep = [i for i, (w, _) in enumerate(terms) if w > 0]
    kinds = ("identity", "flip")
    return Channel((qubit,), tuple(terms[i] for i in keep), tuple(kinds[i] for i in keep), gen)


def infidelity_to_epsilon(infidelity: float) -> float:
    if not 0.0 <= infidelity <= 1.0:
        raise NoiseError(f"infidelity {infidelity} outside [0, 1]")
    return math.asin(math.sqrt(infidelity))


def epsilon_relation(eps1: float) -> float:
    """Two-qubit error angle implied by a one-qubit one: (1 + eps1)^2 - 1."""
    if eps1 < 0:
        raise NoiseError("eps1 must be non-negative")
    return (1 + eps1) ** 2 - 1


def epsilon_relation_inverse(eps2: float) -> float:
    return math.sqrt(1 + eps2) - 1


@dataclass(frozen=True)
class OverrotationParams:
    kappa: float = 1.0
    eps1: float = 0.0
    eps2: float = 0.0
    eps3: float = 0.0
    linked: bool = False

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise NoiseError(f"kappa={self.kappa} outside [0, 1]")
        if min(self.eps1, self.eps2, self.eps3) < 0:
            raise NoiseError("error angles must be non-negative")
        if self.linked and abs(epsilon_relation(self.eps1) - self.eps2) > 1e-12:
            raise NoiseError("linked parameters violate eps2 = (1 + eps1)^2 - 1")

    @classmethod
    def linked_from_eps2(cls, eps2: float, kappa: float = 1.0, eps3: float = 0.0) -> OverrotationParams:
        return cls(kappa, epsilon_relation_inverse(eps2), eps2, eps3, linked=True)

    @classmethod
    def from_infidelities(cls, kappa=1.0, one=0.0, two=0.0, three=0.0, linked=False):
        eps2 = infidelity_to_epsilon(two)
        eps3 = infidelity_to_epsilon(three)
        if linked:
            return cls.linked_from_eps2(eps2, kappa, eps3)
        return cls(kappa, infidelity_to_epsilon(one), eps2, eps3)

    def with_kappa(self, kappa: float) -> OverrotationParams:
        return OverrotationParams(kappa, self.eps1, self.eps2, self.eps3, self.linked)

    def eps_for(self, cls: NoiseClass) -> float:
        return {
            NoiseClass.ONE_QUBIT: self.eps1,
            NoiseClass.TWO_QUBIT: self.eps2,
            NoiseClass.THREE_QUBIT: self.eps3,
            NoiseClass.NOISELESS: 0.0,
        }[cls]


@dataclass(frozen=True)
class DephasingParams:
    t1q: float = 1.0
    t2q: float = 10.0
    T2: float = 2e4

    def __post_init__(self):
        if self.t1q < 0 or self.t2q < 0 or self.T2 <= 0:
            raise NoiseError("gate times must be >= 0 and T2 > 0")

    def flip_probability(self, t: float) -> float:
        return (1 - math.exp(-t / self.T2)) / 2

    def duration(self, cls: NoiseClass) -> float:
        if cls is NoiseClass.ONE_QUBIT:
            return self.t1q
        if cls is NoiseClass.NOISELESS:
            return 0.0
        return self.t2q


def reference_angle(gate: Gate) -> float:
    """Rotation angle at which a gate's class error equals eps_k.

    Controlled-Pauli gates reach their target at theta = pi/2; MS gates and
    single-qubit pulses are referenced to theta = pi/4 (XX(pi/4) and the
    Bloch pi/2 pulse).
    """
    gen = gate.generator
    if isinstance(gen, ControlledPauli):
        return PI / 2
    if isinstance(gen, PlanarAxis) or len(gen.support) <= 2:
        return PI / 4
    return PI / 2


def gate_error_angle(gate: Gate, params: OverrotationParams) -> float:
    eps = params.eps_for(gate.noise_class)
    if eps == 0:
        return 0.0
    return eps * abs(gate.theta) / reference_angle(gate)


@dataclass(frozen=True)
class NoisyGate:
    """A gate together with the channels that follow it."""

    gate: Gate
    channels: tuple[Channel, ...] = ()


ScheduleOp = Prep | Measure | NoisyGate


@dataclass
class NoisySchedule:
    circuit: Circuit
    ops: list = field(default_factory=list)

    @property
    def n_channels(self) -> int:
        return sum(len(op.channels) for op in self.ops if isinstance(op, NoisyGate))


def bind_noise(
    c: Circuit, params: OverrotationParams, dephasing: DephasingParams | None = None
) -> NoisySchedule:
    """Attach one mixed overrotation channel after every noisy gate.

    The error angle scales linearly with |theta| relative to the class
    reference angle.  With dephasing, each touched qubit also gets an
    independent phase flip whose probability depends on the gate duration.
    """
    out = []
    for op in c.ops:
        if not isinstance(op, Gate):
            out.append(op)
            continue
        if op.noise_class is None:
            raise NoiseError(f"gate {op} has no noise class")
        if op.noise_class is NoiseClass.NOISELESS:
            out.append(NoisyGate(op))
            continue
        eps = gate_error_angle(op, params)
        chans = [mixed_channel(op.generator, eps, params.kappa, op.direction)]
        if dephasing is not None:
            p = dephasing.flip_probability(dephasing.duration(op.noise_class))
            chans.extend(dephasing_channel(q, p) for q in op.support)
        out.append(NoisyGate(op, tuple(chans)))
    return NoisySchedule(c, out)


def fused_terms(ng: NoisyGate) -> list[tuple[float, np.ndarray, int]]:
    """Gate followed by its own overrotation channel as one mixture.

    Returns (probability, unitary, kind index) on the gate support; dephasing
    channels are not folded in.
    """
    u = rotation_unitary(ng.gate)
    if not ng.channels or ng.channels[0].support != ng.gate.support:
        return [(1.0, u, -1)]
    ch = ng.channels[0]
    return [(p, e @ u, i) for i, (p, e) in enumerate(ch.terms)]


# --- fidelity helpers -------------------------------------------------------

def process_fidelity(channel: Channel) -> float:
    """Entanglement fidelity of a unitary mixture with the identity."""
    d = channel.terms[0][1].shape[0]
    return float(sum(p * abs(np.trace(u)) ** 2 for p, u in channel.terms) / d**2)


def average_gate_fidelity(channel: Channel) -> float:
    d = channel.terms[0][1].shape[0]
    return (d * process_fidelity(channel) + 1) / (d + 1)


def channel_infidelity_against(terms: Sequence[Term], target: np.ndarray) -> float:
    """1 - average gate fidelity of a unitary mixture against a target unitary."""
    d = target.shape[0]
    fpro = sum(p * abs(np.trace(target.conj().T @ u)) ** 2 for p, u in terms) / d**2
    return 1 - (d * fpro + 1) / (d + 1)


# --- composite-pulse comparison ------------------------------------------------

def sequence_superop(gates: Sequence[Gate], params: OverrotationParams, order: Sequence[int]) -> np.ndarray:
    """Superoperator of a gate list with every gate followed by its mixed channel."""
    d = 2 ** len(order)
    total = np.eye(d * d, dtype=complex)
    for g in gates:
        ng = NoisyGate(g, (mixed_channel(g.generator, gate_error_angle(g, params), params.kappa, g.direction),))
        full = []
        for p, u, _ in fused_terms(ng):
            full.append((p, _embed(u, g.support, order)))
        total = mixture_superop(full) @ total
    return total


def _embed(u: np.ndarray, support: Sequence[int], order: Sequence[int]) -> np.ndarray:
    if tuple(support) == tuple(order):
        return u
    n = len(order)
    k = len(support)
    t = np.eye(2**n, dtype=complex).reshape((2,) * (2 * n))
    pos = [list(order).index(q) for q in support]
    out = np.tensordot(u.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), pos))
    return np.moveaxis(out, list(range(k)), pos).reshape(2**n, 2**n)


def superop_infidelity(superop: np.ndarray, target: np.ndarray) -> float:
    """1 - average gate fidelity of a superoperator against a target unitary."""
    d = target.shape[0]
    t = mixture_superop([(1.0, target)])
    f_pro = float(np.trace(t.conj().T @ superop).real) / d**2
    return 1 - (d * f_pro + 1) / (d + 1)


def sk1_crossover(eps1: float, bloch: float = PI / 2, phi: float = 0.0, tol: float = 1e-10) -> float | None:
    """Smallest kappa above which the SK1 composite beats the bare pulse.

    Both infidelities are affine in kappa for a single pulse and close to it
    for the sequence, so the root is bracketed on [0, 1] and found by
    bisection.  Returns None when SK1 never wins.
    """
    bare = [planar(0, bloch, phi)]
    comp = compile_sk1(bloch, phi, 0)
    target = rotation_unitary(bare[0])

    def gap(kappa: float) -> float:
        p = OverrotationParams(kappa, eps1, 0.0, 0.0)
        return superop_infidelity(sequence_superop(comp, p, (0,)), target) - superop_infidelity(
            sequence_superop(bare, p, (0,)), target
        )

    lo, hi = 0.0, 1.0
    if gap(hi) >= 0:
        return None
    if gap(lo) < 0:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
