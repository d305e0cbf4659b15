"""Logical error rates of one or more extraction rounds.

Two estimators share the same noisy schedule:

* :func:`exact_logical_error` walks every ancilla-outcome branch with a
  density matrix, decodes each syndrome with a lookup table, applies the
  correction without noise and sums the weight of the -1 outcome of Z_L.
* :func:`trajectory_sample` unravels each mixed channel into its unitary
  terms, samples ancilla outcomes, tracks the Bacon-Shor X-gauge frame and
  can re-slice the next round from that frame.

Per-shot contributions use the Born probability of a Z_L flip rather than a
sampled final readout, which removes one layer of shot noise without bias.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    Circuit,
    ControlledPauli,
    Measure,
    Pauli,
    PauliString,
    PlanarAxis,
    Prep,
)
from .codes import (
    GaugeFrame,
    SubsystemCode,
    SyndromeTable,
    build_lookup_decoder,
    gauge_fixing_operator,
    logical_zero_vector,
)
from .noise import (
    DephasingParams,
    NoisyGate,
    OverrotationParams,
    bind_noise,
    fused_terms,
)
from .slicer import SlicingMode
from .state import apply_left, mixture_superop, pauli_matrix

log = logging.getLogger(__name__)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_PREP_VEC = {
    "Z0": np.array([1, 0], dtype=complex),
    "Z1": np.array([0, 1], dtype=complex),
    "X+": np.array([1, 1], dtype=complex) / math.sqrt(2),
}


class InvariantViolation(RuntimeError):
    """A numerical sanity check failed (trace, postselection sum, Hermiticity)."""


# --- exact density-matrix engine ---------------------------------------------------
#
# A density tensor over register ``reg`` has axes rows(len reg), cols(len reg),
# then optional trailing batch axes.  Every noisy gate is turned into one
# superoperator (gate, overrotation mixture and dephasing together) and applied
# by moving its axes to the front and doing a single matrix product.


def _apply_super(t: np.ndarray, s: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract superop ``s`` (out_r, out_c, in_r, in_c) into row+col ``axes``."""
    axes = list(axes)
    rest = [i for i in range(t.ndim) if i not in axes]
    perm = axes + rest
    shape = t.shape
    m = t.transpose(perm).reshape(s.shape[1], -1)
    out = (s @ m).reshape([shape[i] for i in perm])
    return out.transpose(np.argsort(perm))


def _gate_superop(ng: NoisyGate) -> np.ndarray:
    fused = fused_terms(ng)
    s = mixture_superop([(p, u) for p, u, _ in fused])
    k = len(ng.gate.support)
    if len(ng.channels) > 1:
        # phase flips damp entries whose row and column bits differ on a qubit
        bits = (np.arange(2**k)[:, None] >> np.arange(k - 1, -1, -1)) & 1
        support = ng.gate.support
        factor = np.ones((2**k, 2**k))
        for ch in ng.channels[1:]:
            p = sum(pr for (pr, _), kind in zip(ch.terms, ch.kinds) if kind == "flip")
            j = support.index(ch.support[0])
            differ = bits[:, j][:, None] != bits[:, j][None, :]
            factor = np.where(differ, factor * (1 - 2 * p), factor)
        s = factor.reshape(-1, 1) * s
    return s


def _axes(reg: list[int], support: Sequence[int]) -> list[int]:
    n = len(reg)
    pos = [reg.index(q) for q in support]
    return pos + [n + p for p in pos]


def _prep(t: np.ndarray, reg: list[int], op: Prep) -> tuple[np.ndarray, list[int]]:
    n = len(reg)
    v = _PREP_VEC[op.basis]
    t = np.multiply.outer(t, np.outer(v, v.conj()))
    return np.moveaxis(t, [-2, -1], [n, 2 * n + 1]), reg + [op.qubit]


_H_SUPER = mixture_superop([(1.0, HADAMARD)])


def _measure(t: np.ndarray, reg: list[int], op: Measure) -> tuple[list[np.ndarray], list[int]]:
    n = len(reg)
    i = reg.index(op.qubit)
    if op.basis == "X":
        t = _apply_super(t, _H_SUPER, [i, n + i])
    kids = [np.take(np.take(t, b, axis=n + i), b, axis=i) for b in (0, 1)]
    return kids, reg[:i] + reg[i + 1 :]


@dataclass
class _Block:
    """Ancilla prep, its gates and its readout, seen from the data register."""

    prep: Prep
    steps: list  # (support, superop)
    measure: Measure
    support: tuple[int, ...]
    outcome_superops: list | None = None


# Blocks touching at most this many data qubits are folded into per-outcome
# superoperators (4^w x 4^w); larger ones are simulated gate by gate.
MAX_FOLD_WEIGHT = 4
ZERO_FLOOR = 1e-14


def _segments(schedule) -> list:
    segs: list = []
    cur = None
    for op in schedule.ops:
        if isinstance(op, Prep):
            if cur is not None:
                raise InvariantViolation("exact engine supports one live ancilla at a time")
            cur = _Block(op, [], None, ())
        elif isinstance(op, Measure):
            if cur is None or op.qubit != cur.prep.qubit:
                raise InvariantViolation(f"measurement of unprepared qubit {op.qubit}")
            cur.measure = op
            sup = sorted({q for s, _ in cur.steps for q in s} - {op.qubit})
            cur.support = tuple(sup)
            segs.append(cur)
            cur = None
        else:
            step = (op.gate.support, _gate_superop(op))
            (cur.steps if cur is not None else segs).append(step)
    if cur is not None:
        raise InvariantViolation("ancilla never measured")
    for seg in segs:
        if isinstance(seg, _Block) and len(seg.support) <= MAX_FOLD_WEIGHT:
            seg.outcome_superops = _fold_block(seg)
    return segs


def _run_block(t: np.ndarray, reg: list[int], blk: _Block):
    t, reg = _prep(t, reg, blk.prep)
    for support, s in blk.steps:
        t = _apply_super(t, s, _axes(reg, support))
    return _measure(t, reg, blk.measure)


def _fold_block(blk: _Block) -> list[np.ndarray]:
    """Per-outcome superoperators on the block's data support."""
    reg = list(blk.support)
    w = len(reg)
    d = 2**w
    eye = np.eye(d * d, dtype=complex).reshape((2,) * (2 * w) + (d * d,))
    kids, _ = _run_block(eye, reg, blk)
    return [k.reshape(d * d, d * d) for k in kids]


def _block_children(t: np.ndarray, reg: list[int], blk: _Block) -> list[np.ndarray]:
    if blk.outcome_superops is not None:
        ax = _axes(reg, blk.support)
        return [_apply_super(t, s, ax) for s in blk.outcome_superops]
    kids, _ = _run_block(t, reg, blk)
    return kids


@dataclass
class BranchRecord:
    """One syndrome class; ``None`` marks bits summed over (see ExactResult)."""

    syndrome: tuple
    probability: float
    error: float


@dataclass
class ExactResult:
    p_logical: float
    branches: list[BranchRecord]
    branch_count: int
    total_probability: float
    marginalized: tuple[str, ...] = ()

    @property
    def p_L(self) -> float:
        return self.p_logical


READOUTS = ("bare", "ideal")


def _bitmask(code: SubsystemCode, qubits) -> int:
    n = len(code.data)
    return sum(1 << (n - 1 - code.data.index(q)) for q in qubits)


class LogicalReadout:
    """Weight of the failing Z_L outcome, given a data diagonal and a syndrome.

    ``bare`` reads Z_L right after the round's correction.  ``ideal`` first
    runs one noiseless round of Z-stabilizer measurement and lookup
    correction, so leftover weight-1 X errors (including those a false
    syndrome bit introduced) are removed before the readout.  Only the
    diagonal matters because Z_L and the Z stabilizers are diagonal and
    every correction maps basis states to basis states.
    """

    def __init__(self, code: SubsystemCode, decoder: SyndromeTable, kind: str = "bare"):
        if kind not in READOUTS:
            raise ValueError(f"unknown readout {kind!r}; expected one of {READOUTS}")
        self.code, self.decoder, self.kind = code, decoder, kind
        n = len(code.data)
        self.index = np.arange(2**n)
        par = np.zeros(2**n, dtype=np.int64)
        for b in range(n):
            par ^= (self.index >> b) & 1
        self.parity = par
        self.zl = _bitmask(code, code.z_logical.support)
        self.zstabs = [(i, _bitmask(code, s.pauli.support)) for i, s in enumerate(code.stabilizers) if s.kind == "Z"]
        self._xmask_cache: dict = {}
        if kind == "ideal":
            m = len(code.stabilizers)
            second = np.zeros(2 ** len(self.zstabs), dtype=np.int64)
            for key in range(len(second)):
                syn = [0] * m
                for j, (i, _) in enumerate(self.zstabs):
                    syn[i] = (key >> j) & 1
                second[key] = self.x_mask(tuple(syn))
            self.second = second

    def x_mask(self, syn) -> int:
        """Bit-flip pattern of the decoded correction for ``syn``."""
        syn = tuple(0 if b is None else int(b) for b in syn)
        if syn not in self._xmask_cache:
            corr = self.decoder.decode(syn)
            qs = [] if corr is None else [q for q, ch in corr.factors if ch in "XY"]
            self._xmask_cache[syn] = _bitmask(self.code, qs)
        return self._xmask_cache[syn]

    def failure_vector(self, xmask: int = 0) -> np.ndarray:
        y = self.index ^ xmask
        if self.kind == "ideal":
            key = np.zeros_like(y)
            for j, (_, m) in enumerate(self.zstabs):
                key |= self.parity[y & m] << j
            y = y ^ self.second[key]
        return self.parity[y & self.zl].astype(float)

    def failure(self, diag: np.ndarray, syn) -> float:
        return float(diag @ self.failure_vector(self.x_mask(syn)))

    def irrelevant_bits(self) -> set[int]:
        """Stabilizer bits that never change the correction's X part."""
        m = len(self.code.stabilizers)
        out = set()
        for k in range(m):
            if all(
                self.x_mask(s) == self.x_mask(s[:k] + (1 - s[k],) + s[k + 1 :])
                for s in itertools.product((0, 1), repeat=m)
            ):
                out.add(k)
        return out


def exact_logical_error(
    circuit: Circuit,
    params: OverrotationParams,
    code: SubsystemCode,
    dephasing: DephasingParams | None = None,
    decoder: SyndromeTable | None = None,
    initial: np.ndarray | None = None,
    readout: str = "bare",
    merge: bool = True,
    prune: float = 1e-30,
) -> ExactResult:
    """Exact postselected logical error of one round starting from |0>_L.

    The leaf functional is tr(C (I - Z_L)/2 C rho_s) with C the decoded
    correction; because C is a Pauli it equals tr((I -+ Z_L)/2 rho_s).  With
    ``merge`` on, outcomes of stabilizers whose bit never changes the sign
    (for a CSS lookup decoder: all X-type stabilizers) are summed rather than
    branched on, which is exact and much cheaper.  Branches lighter than
    ``prune`` are dropped.
    """
    decoder = decoder or build_lookup_decoder(code)
    if list(circuit.data) != list(code.data):
        raise InvariantViolation("circuit data register differs from the code")
    segs = _segments(bind_noise(circuit, params, dephasing))
    names = [s.name for s in code.stabilizers]
    ro = LogicalReadout(code, decoder, readout)
    summed = ro.irrelevant_bits() if merge else set()
    qubits = list(code.data)
    n = len(qubits)
    v = logical_zero_vector(code) if initial is None else np.asarray(initial, dtype=complex)
    rho = np.outer(v, v.conj()).reshape((2,) * (2 * n))
    records: list[BranchRecord] = []

    def walk(i: int, t: np.ndarray, syn: tuple):
        while i < len(segs):
            seg = segs[i]
            if not isinstance(seg, _Block):
                t = _apply_super(t, seg[1], _axes(qubits, seg[0]))
                i += 1
                continue
            if seg.measure.stabilizer not in names:
                raise InvariantViolation(f"measurement of unknown stabilizer {seg.measure.stabilizer!r}")
            k = names.index(seg.measure.stabilizer)
            kids = _block_children(t, qubits, seg)
            if k in summed:
                t = kids[0] + kids[1]
                syn = syn[:k] + (None,) + syn[k + 1 :]
                i += 1
                continue
            for b, child in enumerate(kids):
                if _trace(child, n) < prune:
                    continue
                bit = b ^ int(seg.measure.invert)
                walk(i + 1, child, syn[:k] + (bit,) + syn[k + 1 :])
            return
        leaf(t, syn)

    def leaf(t: np.ndarray, syn: tuple):
        d = 2**n
        m = t.reshape(d, d)
        w = float(np.trace(m).real)
        if abs(np.trace(m).imag) > 1e-9:
            raise InvariantViolation("branch trace is not real")
        err = ro.failure(np.diag(m).real, syn)
        records.append(BranchRecord(syn, w, err))

    walk(0, rho, (0,) * len(names))
    total = sum(r.probability for r in records)
    if abs(total - 1) > 1e-9:
        raise InvariantViolation(f"branch probabilities sum to {total!r}")
    p = sum(r.error for r in records)
    if not -1e-12 <= p <= 1 + 1e-12:
        raise InvariantViolation(f"logical error {p!r} outside [0, 1]")
    marg = tuple(names[k] for k in sorted(summed))
    # anything below a few ulp of the unit total is rounding, not signal
    if p < ZERO_FLOOR:
        p = 0.0
    return ExactResult(p, records, 2 ** len(circuit.measurements), total, marg)


def _trace(t: np.ndarray, n: int) -> float:
    d = 2**n
    return float(np.trace(t.reshape(d, d)).real)


def improvement_ratio(p_unsliced: float, p_sliced: float) -> float:
    if p_sliced <= 0:
        return math.inf if p_unsliced > 0 else math.nan
    return p_unsliced / p_sliced


# --- trajectories -------------------------------------------------------------------

class TrajectoryMode(enum.Enum):
    STATIC = "static"
    ADAPTIVE = "adaptive"
    PERFECT_GAUGE = "perfect-gauge"
    WORST_GAUGE = "worst-gauge"


@dataclass(frozen=True)
class TrajectoryConfig:
    mode: TrajectoryMode = TrajectoryMode.STATIC
    rounds: int = 1
    shots: int = 10_000
    seed: int = 0
    chunk: int = 5_000
    terminal_only: bool = False
    readout: str = "bare"
    threads: int = 1

    def __post_init__(self):
        if self.rounds < 1 or self.shots < 1 or self.chunk < 1:
            raise ValueError("rounds, shots and chunk must be positive")


@dataclass
class TrajectoryResult:
    mode: TrajectoryMode
    rounds: np.ndarray
    p_round: np.ndarray
    stderr: np.ndarray
    shots: int
    slope: float = math.nan
    intercept: float = math.nan


CircuitFamily = Callable[[SlicingMode, "GaugeFrame | None"], Circuit]


def _flip_pauli(gen, data: set[int]) -> PauliString | None:
    """Data-qubit Pauli applied by a 'flip' term of a channel with this generator."""
    if isinstance(gen, Pauli):
        return gen.string.restrict(data)
    if isinstance(gen, ControlledPauli):
        return gen.target.restrict(data)
    if isinstance(gen, PlanarAxis):
        c, s = math.cos(gen.phi), math.sin(gen.phi)
        if gen.qubit not in data:
            return None
        if abs(s) < 1e-12:
            return PauliString(((gen.qubit, "X"),))
        if abs(c) < 1e-12:
            return PauliString(((gen.qubit, "Y"),))
        return PauliString(((gen.qubit, "Y"),))
    return None


@dataclass
class _BatchOp:
    kind: str
    op: object = None
    support: tuple[int, ...] = ()
    probs: np.ndarray | None = None
    unitaries: list = field(default_factory=list)
    # data Pauli applied by each term, used to update gauge frames
    flips: list = field(default_factory=list)


def _batch_program(circuit: Circuit, params, dephasing, data: set[int]) -> list[_BatchOp]:
    prog = []
    for op in bind_noise(circuit, params, dephasing).ops:
        if not isinstance(op, NoisyGate):
            prog.append(_BatchOp("prep" if isinstance(op, Prep) else "meas", op))
            continue
        fused = fused_terms(op)
        kinds = op.channels[0].kinds if op.channels else ()
        flip = _flip_pauli(op.gate.generator, data)
        flips = [flip if (k >= 0 and kinds[k] == "flip") else None for _, _, k in fused]
        prog.append(
            _BatchOp("gate", op, op.gate.support, np.array([p for p, _, _ in fused]), [u for _, u, _ in fused], flips)
        )
        for ch in op.channels[1:]:
            prog.append(
                _BatchOp(
                    "gate", None, ch.support, ch.probabilities(), [u for _, u in ch.terms],
                    [None if kd != "flip" else PauliString(((ch.support[0], "Z"),)) for kd in ch.kinds],
                )
            )
    return prog


class _Batch:
    """B pure states over the live register, shape (B, 2, ..., 2)."""

    def __init__(self, psi: np.ndarray, qubits: list[int], frames: np.ndarray, rng: np.random.Generator):
        self.psi = psi
        self.qubits = qubits
        self.frames = frames
        self.rng = rng

    def axes(self, support) -> list[int]:
        return [1 + self.qubits.index(q) for q in support]

    def apply(self, u: np.ndarray, support, mask=None):
        ax = self.axes(support)
        if mask is None:
            self.psi = apply_left(self.psi, u, ax)
        elif mask.any():
            self.psi[mask] = apply_left(self.psi[mask], u, ax)

    def flip_frames(self, code: SubsystemCode, p: PauliString | None, mask):
        if p is None or not self.frames.shape[1]:
            return
        anti = np.array([not g.commutes_with(p) for g in code.x_gauges])
        if anti.any():
            self.frames[np.ix_(mask, anti)] *= -1

    def run(self, prog: list[_BatchOp], code: SubsystemCode, n_stab: int) -> np.ndarray:
        """Execute one round; returns a (B, n_stab) array of syndrome bits."""
        B = self.psi.shape[0]
        syn = np.zeros((B, n_stab), dtype=np.int8)
        names = [s.name for s in code.stabilizers]
        for bop in prog:
            if bop.kind == "prep":
                v = _PREP_VEC[bop.op.basis]
                self.psi = np.multiply.outer(self.psi, v)
                self.qubits = self.qubits + [bop.op.qubit]
            elif bop.kind == "meas":
                m: Measure = bop.op
                i = self.qubits.index(m.qubit)
                if m.basis == "X":
                    self.apply(HADAMARD, (m.qubit,))
                t = np.moveaxis(self.psi, 1 + i, 1)
                p1 = np.sum(np.abs(t[:, 1].reshape(B, -1)) ** 2, axis=1)
                p1 = np.clip(p1, 0.0, 1.0)
                b = (self.rng.random(B) < p1).astype(np.int8)
                keep = np.where(b[:, None], t[:, 1].reshape(B, -1), t[:, 0].reshape(B, -1))
                norm = np.sqrt(np.where(b == 1, p1, 1 - p1))
                keep /= norm[:, None]
                self.qubits = self.qubits[:i] + self.qubits[i + 1 :]
                self.psi = keep.reshape((B,) + (2,) * len(self.qubits))
                syn[:, names.index(m.stabilizer)] = b ^ int(m.invert)
            else:
                if len(bop.unitaries) == 1:
                    self.apply(bop.unitaries[0], bop.support)
                    self.flip_frames(code, bop.flips[0], np.ones(B, bool))
                    continue
                cdf = np.cumsum(bop.probs)
                idx = np.searchsorted(cdf, self.rng.random(B) * cdf[-1], side="right")
                idx = np.minimum(idx, len(cdf) - 1)
                for k, (u, fl) in enumerate(zip(bop.unitaries, bop.flips)):
                    mask = idx == k
                    if not mask.any():
                        continue
                    self.apply(u, bop.support, None if mask.all() else mask)
                    self.flip_frames(code, fl, mask)
        return syn

    def apply_pauli_per_shot(self, code: SubsystemCode, paulis: Sequence[PauliString | None]):
        groups: dict = {}
        for j, p in enumerate(paulis):
            if p is not None:
                groups.setdefault(p, []).append(j)
        for p, rows in groups.items():
            mask = np.zeros(len(paulis), bool)
            mask[rows] = True
            for q, ch in p.factors:
                self.apply(pauli_matrix(ch), (q,), mask)
            self.flip_frames(code, p, mask)

    def measure_gauges(self, code: SubsystemCode) -> np.ndarray:
        """Noiseless projective measurement of every X gauge; returns (B, n_gauges) signs."""
        B = self.psi.shape[0]
        signs = np.ones((B, len(code.x_gauges)), dtype=np.int8)
        for gi, g in enumerate(code.x_gauges):
            gpsi = self.psi
            for q, ch in g.factors:
                gpsi = apply_left(gpsi, pauli_matrix(ch), self.axes((q,)))
            overlap = np.sum((self.psi.conj() * gpsi).reshape(B, -1), axis=1).real
            p_plus = np.clip((1 + overlap) / 2, 0.0, 1.0)
            plus = self.rng.random(B) < p_plus
            sign = np.where(plus, 1, -1)
            norm = 2 * np.sqrt(np.where(plus, p_plus, 1 - p_plus))
            shape = (B,) + (1,) * (self.psi.ndim - 1)
            self.psi = (self.psi + sign.reshape(shape) * gpsi) / norm.reshape(shape)
            signs[:, gi] = sign
        return signs

    def failure_probability(self, fail: np.ndarray) -> np.ndarray:
        B = self.psi.shape[0]
        probs = np.abs(self.psi.reshape(B, -1)) ** 2
        return probs @ fail


def _family_mode(mode: TrajectoryMode) -> SlicingMode:
    return {
        TrajectoryMode.STATIC: SlicingMode.SLICED,
        TrajectoryMode.PERFECT_GAUGE: SlicingMode.SLICED,
        TrajectoryMode.ADAPTIVE: SlicingMode.ADAPTIVE,
        TrajectoryMode.WORST_GAUGE: SlicingMode.WORST,
    }[mode]


def _run_chunk(cfg: TrajectoryConfig, family: CircuitFamily, params, code, dephasing, shots: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = len(code.data)
    data = set(code.data)
    v = logical_zero_vector(code)
    psi = np.broadcast_to(v.reshape((2,) * n), (shots,) + (2,) * n).copy()
    frames = np.ones((shots, len(code.x_gauges)), dtype=np.int8)
    batch = _Batch(psi, list(code.data), frames, rng)
    decoder = build_lookup_decoder(code)
    fail = LogicalReadout(code, decoder, cfg.readout).failure_vector()
    n_stab = len(code.stabilizers)
    smode = _family_mode(cfg.mode)
    programs: dict = {}
    fix_cache: dict = {}
    out = np.zeros((cfg.rounds, shots))

    def program(frame):
        key = frame if smode in (SlicingMode.ADAPTIVE, SlicingMode.WORST) else None
        if key not in programs:
            programs[key] = _batch_program(family(smode, key), params, dephasing, data)
        return programs[key]

    for r in range(cfg.rounds):
        if cfg.mode is TrajectoryMode.PERFECT_GAUGE and batch.frames.shape[1]:
            # At kappa = 1 the tracked frame never sees coherent gauge drift, so
            # the baseline measures the gauges for real and fixes them to +1.
            keys = [tuple(int(x) for x in f) for f in batch.measure_gauges(code)]
            for k in set(keys) - fix_cache.keys():
                fix_cache[k] = gauge_fixing_operator(code, GaugeFrame(k))
            fixes = [fix_cache[k] for k in keys]
            batch.apply_pauli_per_shot(code, fixes)
            batch.frames[:] = 1
        if smode in (SlicingMode.ADAPTIVE, SlicingMode.WORST) and batch.frames.shape[1]:
            syn = np.zeros((shots, n_stab), dtype=np.int8)
            keys = [tuple(int(x) for x in f) for f in batch.frames]
            groups: dict = {}
            for j, k in enumerate(keys):
                groups.setdefault(k, []).append(j)
            psi_out = np.empty_like(batch.psi)
            frames_out = batch.frames.copy()
            for k, rows in groups.items():
                rows = np.array(rows)
                sub = _Batch(batch.psi[rows], list(batch.qubits), batch.frames[rows].copy(), rng)
                syn[rows] = sub.run(program(GaugeFrame(k)), code, n_stab)
                psi_out[rows] = sub.psi
                frames_out[rows] = sub.frames
            batch.psi, batch.frames = psi_out, frames_out
        else:
            syn = batch.run(program(None), code, n_stab)
        last = r == cfg.rounds - 1
        if not cfg.terminal_only or last:
            corrections = [decoder.decode(s) for s in syn]
            batch.apply_pauli_per_shot(code, corrections)
        out[r] = batch.failure_probability(fail)
    return out


def trajectory_sample(
    cfg: TrajectoryConfig,
    family: CircuitFamily,
    params: OverrotationParams,
    code: SubsystemCode,
    dephasing: DephasingParams | None = None,
) -> TrajectoryResult:
    """Monte-Carlo unraveling over ``cfg.rounds`` rounds and ``cfg.shots`` shots.

    Shots are processed in chunks; chunk ``i`` draws from
    ``SeedSequence(cfg.seed).spawn(...)[i]`` so results do not depend on the
    number of worker threads.
    """
    sizes = [min(cfg.chunk, cfg.shots - i) for i in range(0, cfg.shots, cfg.chunk)]
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    if cfg.threads > 1 and len(jobs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(cfg.threads) as ex:
            parts = list(ex.map(lambda j: _run_chunk(cfg, family, params, code, dephasing, *j), jobs))
    else:
        parts = [_run_chunk(cfg, family, params, code, dephasing, *j) for j in jobs]
    per_shot = np.concatenate(parts, axis=1)
    p = per_shot.mean(axis=1)
    se = per_shot.std(axis=1, ddof=1) / math.sqrt(cfg.shots) if cfg.shots > 1 else np.zeros_like(p)
    rounds = np.arange(1, cfg.rounds + 1)
    res = TrajectoryResult(cfg.mode, rounds, p, se, cfg.shots)
    if cfg.rounds >= 2:
        res.slope, res.intercept = (float(x) for x in np.polyfit(rounds, p, 1))
    return res
