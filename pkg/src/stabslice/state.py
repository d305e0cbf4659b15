"""Dense density-matrix and state-vector simulation over labelled qubits.

States carry an ordered tuple of opaque integer labels; the i-th label is the
i-th tensor factor (most significant bit first).  Density matrices may be
subnormalized, which is how postselected branches are represented.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 12
ATOL = 1e-10

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class StateError(ValueError):
    """Raised for malformed registers, labels or operators."""


def _check_labels(labels: Sequence[int]) -> tuple[int, ...]:
    labels = tuple(int(q) for q in labels)
    if len(set(labels)) != len(labels):
        raise StateError(f"duplicate qubit labels in {labels}")
    if len(labels) > MAX_QUBITS:
        raise StateError(f"register of {len(labels)} qubits exceeds the {MAX_QUBITS}-qubit limit")
    return labels


def _positions(qubits: tuple[int, ...], support: Sequence[int]) -> list[int]:
    try:
        return [qubits.index(q) for q in support]
    except ValueError:
        missing = [q for q in support if q not in qubits]
        raise StateError(f"qubits {missing} not in register {qubits}") from None


def _check_unitary(u: np.ndarray, k: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2**k, 2**k):
        raise StateError(f"operator of shape {u.shape} does not act on {k} qubits")
    if not np.allclose(u @ u.conj().T, np.eye(2**k), atol=ATOL):
        raise StateError("operator is not unitary")
    return u


def apply_left(tensor: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract a 2^k x 2^k operator into the given qubit axes of a tensor.

    ``tensor`` has one length-2 axis per qubit index (row or column) plus any
    leading batch axes; the result keeps the axis order.
    """
    k = len(axes)
    if k == 0:
        return tensor * op[0, 0]
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_superop(tensor: np.ndarray, superop: np.ndarray, row_axes, col_axes) -> np.ndarray:
    """Apply a superoperator with index order (out_row, out_col, in_row, in_col)."""
    k = len(row_axes)
    axes = list(row_axes) + list(col_axes)
    s_t = superop.reshape((2,) * (4 * k))
    out = np.tensordot(s_t, tensor, axes=(list(range(2 * k, 4 * k)), axes))
    return np.moveaxis(out, list(range(2 * k)), axes)


def mixture_superop(terms: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    """Superoperator sum_i p_i U_i (x) conj(U_i), index order (out_r, out_c, in_r, in_c)."""
    d = terms[0][1].shape[0]
    s = np.zeros((d, d, d, d), dtype=complex)
    for p, u in terms:
        s += p * np.einsum("ac,bd->abcd", u, u.conj())
    return s.reshape(d * d, d * d)


@dataclass(frozen=True)
class DensityState:
    """Subnormalized density matrix on an ordered register of labelled qubits."""

    qubits: tuple[int, ...]
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return len(self.qubits)

    @property
    def weight(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def tensor(self) -> np.ndarray:
        return self.matrix.reshape((2,) * (2 * self.n))

    @classmethod
    def _from_tensor(cls, qubits, tensor) -> DensityState:
        d = 2 ** len(qubits)
        return cls(tuple(qubits), np.ascontiguousarray(tensor).reshape(d, d))

    def normalized(self) -> DensityState:
        w = self.weight
        if w <= 0:
            raise StateError("cannot normalize a zero-weight state")
        return DensityState(self.qubits, self.matrix / w)

    def scaled(self, factor: float) -> DensityState:
        return DensityState(self.qubits, self.matrix * factor)

    def check(self, psd: bool = False, atol: float = ATOL) -> None:
        """Verify Hermiticity and the weight bound; eigenvalues only if ``psd``."""
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol):
            raise StateError("density matrix is not Hermitian")
        w = self.weight
        if w < -atol or w > 1 + atol:
            raise StateError(f"weight {w} outside [0, 1]")
        if psd and np.linalg.eigvalsh(m).min() < -atol:
            raise StateError("density matrix is not positive semidefinite")


@dataclass(frozen=True)
class PureState:
    qubits: tuple[int, ...]
    amplitudes: np.ndarray

    @property
    def n(self) -> int:
        return len(self.qubits)

    def to_density(self) -> DensityState:
        a = self.amplitudes
        return DensityState(self.qubits, np.outer(a, a.conj()))


@dataclass(frozen=True)
class MeasurementBranch:
    outcome: int
    probability: float
    state: DensityState


def basis_vector(bits: Sequence[int]) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise StateError(f"basis bit must be 0 or 1, got {b}")
        idx = 2 * idx + b
    v[idx] = 1.0
    return v


def new_state(labels: Sequence[int], basis_bits: Sequence[int]) -> DensityState:
    """Computational-basis product state of unit weight."""
    labels = _check_labels(labels)
    if len(basis_bits) != len(labels):
        raise StateError("need one basis bit per label")
    v = basis_vector(basis_bits)
    return DensityState(labels, np.outer(v, v.conj()))


def new_pure_state(labels: Sequence[int], basis_bits: Sequence[int]) -> PureState:
    labels = _check_labels(labels)
    if len(basis_bits) != len(labels):
        raise StateError("need one basis bit per label")
    return PureState(labels, basis_vector(basis_bits))


def tensor_product(a: DensityState, b: DensityState) -> DensityState:
    """Append the qubits of ``b`` after those of ``a``."""
    labels = _check_labels(a.qubits + b.qubits)
    return DensityState(labels, np.kron(a.matrix, b.matrix))


def apply_unitary(state, u: np.ndarray, support: Sequence[int]):
    """Conjugate by ``u`` embedded on ``support`` (label order = operator factor order)."""
    support = tuple(support)
    u = _check_unitary(u, len(support))
    pos = _positions(state.qubits, support)
    if isinstance(state, PureState):
        t = state.amplitudes.reshape((2,) * state.n)
        t = apply_left(t, u, pos)
        return PureState(state.qubits, np.ascontiguousarray(t).reshape(-1))
    n = state.n
    t = apply_left(state.tensor(), u, pos)
    t = apply_left(t, u.conj(), [n + p for p in pos])
    return DensityState._from_tensor(state.qubits, t)


def apply_mixture_channel(
    state: DensityState, terms: Sequence[tuple[float, np.ndarray, Sequence[int]]]
) -> DensityState:
    """rho -> sum_i p_i U_i rho U_i^dagger for a finite mixture of unitaries.

    Terms sharing one support are folded into a single superoperator when that
    is cheaper than applying them one by one.
    """
    terms = list(terms)
    if not terms:
        raise StateError("empty channel")
    probs = np.array([t[0] for t in terms], dtype=float)
    if np.any(probs < -1e-15) or abs(probs.sum() - 1.0) > 1e-12:
        raise StateError(f"channel probabilities {probs} do not form a distribution")
    supports = {tuple(t[2]) for t in terms}
    if len(supports) == 1:
        support = supports.pop()
        k = len(support)
        us = [_check_unitary(u, k) for _, u, _ in terms]
        pos = _positions(state.qubits, support)
        n = state.n
        t = state.tensor()
        if len(terms) == 1:
            u = us[0]
            t = apply_left(t, u, pos)
            t = apply_left(t, u.conj(), [n + p for p in pos])
        elif 2**k <= 2 * len(terms):
            s = mixture_superop(list(zip(probs, us)))
            t = apply_superop(t, s, pos, [n + p for p in pos])
        else:
            acc = None
            for p, u in zip(probs, us):
                if p == 0:
                    continue
                r = apply_left(t, u, pos)
                r = apply_left(r, u.conj(), [n + q for q in pos])
                acc = p * r if acc is None else acc + p * r
            t = acc
        return DensityState._from_tensor(state.qubits, t)
    out = None
    for p, u, support in terms:
        if p == 0:
            continue
        r = apply_unitary(state, u, support).matrix * p
        out = r if out is None else out + r
    return DensityState(state.qubits, out)


def measure_qubit_branches(state: DensityState, label: int) -> tuple[MeasurementBranch, MeasurementBranch]:
    """Z-basis measurement; each branch keeps Pi_b rho Pi_b with the qubit removed."""
    (pos,) = _positions(state.qubits, [label])
    n = state.n
    t = state.tensor()
    rest = tuple(q for q in state.qubits if q != label)
    parent = state.weight
    branches = []
    for b in (0, 1):
        idx = [slice(None)] * (2 * n)
        idx[pos] = b
        idx[n + pos] = b
        child = DensityState._from_tensor(rest, t[tuple(idx)])
        prob = child.weight / parent if parent > 0 else 0.0
        branches.append(MeasurementBranch(b, prob, child))
    return branches[0], branches[1]


def pauli_matrix(letters: str) -> np.ndarray:
    m = np.eye(1, dtype=complex)
    for ch in letters:
        m = np.kron(m, _PAULI[ch])
    return m


def _pauli_trace(state: DensityState, support: Sequence[int], letters: str) -> complex:
    pos = _positions(state.qubits, support)
    t = state.tensor()
    for p, ch in zip(pos, letters):
        t = apply_left(t, _PAULI[ch], [p])
    d = 2**state.n
    return np.trace(np.ascontiguousarray(t).reshape(d, d))


def pauli_expectation(state, pauli) -> float:
    """Normalized <P> = tr(P rho) / tr(rho).

    ``pauli`` is anything with ``support`` and ``letters`` (a PauliString) or a
    mapping from label to letter.
    """
    support, letters = _pauli_parts(pauli)
    if isinstance(state, PureState):
        state = state.to_density()
    w = state.weight
    if w <= 0:
        raise StateError("expectation of a zero-weight state")
    return float(np.real(_pauli_trace(state, support, letters))) / w


def _pauli_parts(pauli) -> tuple[tuple[int, ...], str]:
    if hasattr(pauli, "support") and hasattr(pauli, "letters"):
        return tuple(pauli.support), pauli.letters
    items = sorted(dict(pauli).items())
    return tuple(q for q, _ in items), "".join(ch for _, ch in items)


def overlap_with_projector(state: DensityState, proj: np.ndarray, support: Sequence[int]) -> float:
    """Weight-bearing tr(Pi rho) for a projector on ``support``."""
    proj = np.asarray(proj, dtype=complex)
    k = len(support)
    if proj.shape != (2**k, 2**k):
        raise StateError("projector dimension does not match its support")
    if not np.allclose(proj @ proj, proj, atol=ATOL) or not np.allclose(proj, proj.conj().T, atol=ATOL):
        raise StateError("operator is not a Hermitian projector")
    pos = _positions(state.qubits, support)
    t = apply_left(state.tensor(), proj, pos)
    d = 2**state.n
    return float(np.real(np.trace(np.ascontiguousarray(t).reshape(d, d))))


def partial_trace(state: DensityState, keep: Iterable[int]) -> DensityState:
    keep = tuple(keep)
    pos_keep = _positions(state.qubits, keep)
    n = state.n
    drop = [i for i in range(n) if i not in pos_keep]
    t = state.tensor()
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[i] for i in range(n)]
    col = [letters[i] if i in drop else letters[n + i].upper() for i in range(n)]
    out = [row[i] for i in pos_keep] + [col[i] for i in pos_keep]
    t = np.einsum("".join(row) + "".join(col) + "->" + "".join(out), t)
    return DensityState._from_tensor(keep, t)


def fidelity_pure(state: DensityState, vector: np.ndarray) -> float:
    """<v| rho |v> for a normalized vector on the state's register."""
    return float(np.real(np.vdot(vector, state.matrix @ vector)))
