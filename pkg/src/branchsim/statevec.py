"""Dense state vectors over the computational basis of n qubits.

Qubit 0 is the most significant bit of the amplitude index, so for three
qubits the index of |q0 q1 q2> is 4*q0 + 2*q1 + q2.

All operations return new StateVector objects; the amplitude arrays held by
a StateVector are read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 24
TOL_NORM = 1e-10
TOL_UNITARY = 1e-12


class CapacityError(ValueError):
    """Raised when a state would exceed the configured qubit budget."""


class StateVector:
    __slots__ = ("_n", "_amps")

    def __init__(self, amplitudes, n_qubits: int | None = None, *, max_qubits: int = MAX_QUBITS):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        size = amps.shape[0]
        if size == 0 or size & (size - 1):
            raise ValueError(f"amplitude count must be a power of two, got {size}")
        n = size.bit_length() - 1
        if n_qubits is not None and n_qubits != n:
            raise ValueError(f"expected 2**{n_qubits} amplitudes, got {size}")
        if n < 1:
            raise ValueError("a state needs at least one qubit")
        if n > max_qubits:
            raise CapacityError(f"{n} qubits exceeds the maximum of {max_qubits}")
        amps.setflags(write=False)
        self._n = n
        self._amps = amps

    @classmethod
    def basis(cls, bits: Sequence[int]) -> "StateVector":
        """Computational basis state |b_0 b_1 ... b_{n-1}>."""
        n = len(bits)
        amps = np.zeros(2**n, dtype=np.complex128)
        amps[bits_to_index(bits)] = 1.0
        return cls(amps)

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        return cls(np.zeros(2**n_qubits, dtype=np.complex128))

    @property
    def n_qubits(self) -> int:
        return self._n

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    def norm2(self) -> float:
        return float(np.vdot(self._amps, self._amps).real)

    def is_normalized(self, tol: float = TOL_NORM) -> bool:
        return abs(self.norm2() - 1.0) < tol

    def normalized(self) -> "StateVector":
        nrm = np.sqrt(self.norm2())
        if nrm == 0.0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return StateVector(self._amps / nrm)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same_size(self, other)
        return StateVector(self._amps + other._amps)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_same_size(self, other)
        return StateVector(self._amps - other._amps)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self._amps * scalar)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return self._amps.shape[0]

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self._n}, norm2={self.norm2():.6g})"


@dataclass(frozen=True)
class BitAssignment:
    """Values for an ordered subset of qubits, e.g. the record of one event."""

    qubit_indices: tuple[int, ...]
    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubit_indices", tuple(int(q) for q in self.qubit_indices))
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if len(self.qubit_indices) != len(self.bits):
            raise ValueError("qubit_indices and bits must have equal length")
        if len(set(self.qubit_indices)) != len(self.qubit_indices):
            raise ValueError(f"duplicate qubit index in {self.qubit_indices}")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"bits must be 0 or 1, got {self.bits}")

    def check(self, n_qubits: int) -> None:
        _check_targets(self.qubit_indices, n_qubits)


def bits_to_index(bits: Sequence[int]) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def index_to_bits(index: int, n_qubits: int) -> tuple[int, ...]:
    return tuple((index >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits))


def qubit_bits(n_qubits: int, qubit: int) -> np.ndarray:
    """Value of ``qubit`` for every basis index, as an int array of length 2**n."""
    return (np.arange(2**n_qubits) >> (n_qubits - 1 - qubit)) & 1


def _check_same_size(a: StateVector, b: StateVector) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def _check_targets(targets: Sequence[int], n_qubits: int) -> None:
    for q in targets:
        if not 0 <= q < n_qubits:
            raise IndexError(f"qubit index {q} out of range for {n_qubits} qubits")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits {tuple(targets)}")


def is_unitary(u: np.ndarray, tol: float = TOL_UNITARY) -> bool:
    """True if ``u`` is square and U^dagger U = I entrywise within ``tol``."""
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def tensor(a: StateVector, b: StateVector, *, max_qubits: int = MAX_QUBITS) -> StateVector:
    if a.n_qubits + b.n_qubits > max_qubits:
        raise CapacityError(
            f"{a.n_qubits} + {b.n_qubits} qubits exceeds the maximum of {max_qubits}"
        )
    return StateVector(np.kron(a.amplitudes, b.amplitudes), max_qubits=max_qubits)


def apply_local_unitary(s: StateVector, u: np.ndarray, targets: Sequence[int]) -> StateVector:
    """Apply ``u`` to the ordered ``targets``; the first target is the most
    significant bit of ``u``'s row/column index."""
    u = np.asarray(u, dtype=np.complex128)
    targets = [int(q) for q in targets]
    k = len(targets)
    n = s.n_qubits
    _check_targets(targets, n)
    if u.shape != (2**k, 2**k):
        raise ValueError(f"unitary of shape {u.shape} does not act on {k} target qubits")

    psi = s.amplitudes.reshape([2] * n)
    gate = u.reshape([2] * (2 * k))
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), targets))
    # tensordot puts the target axes first; move them back into place
    out = np.moveaxis(out, list(range(k)), targets)
    return StateVector(out.reshape(-1))


def phase_sums(n_qubits: int, omegas: dict[int, float]) -> np.ndarray:
    """Sum of omega_i * e_i over record qubits for every basis index."""
    total = np.zeros(2**n_qubits)
    for q, w in omegas.items():
        total += w * qubit_bits(n_qubits, q)
    return total


def evolve_diagonal(s: StateVector, omegas: dict[int, float], dt: float) -> StateVector:
    """Free evolution exp(-i dt sum_i omega_i e_i) over the record qubits in ``omegas``."""
    if dt == 0 or not omegas:
        return s
    _check_targets(list(omegas), s.n_qubits)
    phases = np.exp(-1j * dt * phase_sums(s.n_qubits, omegas))
    return StateVector(s.amplitudes * phases)


def pattern_mask(n_qubits: int, r: BitAssignment) -> np.ndarray:
    r.check(n_qubits)
    mask = np.ones(2**n_qubits, dtype=bool)
    for q, b in zip(r.qubit_indices, r.bits):
        mask &= qubit_bits(n_qubits, q) == b
    return mask


def project(s: StateVector, r: BitAssignment) -> StateVector:
    """Zero every amplitude whose bits on ``r.qubit_indices`` differ from ``r.bits``."""
    mask = pattern_mask(s.n_qubits, r)
    return StateVector(np.where(mask, s.amplitudes, 0.0))


def inner(a: StateVector, b: StateVector) -> complex:
    _check_same_size(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-distributed normalized state."""
    z = rng.standard_normal(2**n_qubits) + 1j * rng.standard_normal(2**n_qubits)
    return StateVector(z / np.linalg.norm(z))
