"""System description and the timeline of record-writing events.

Between events the state evolves under the diagonal free Hamiltonian
H0 = sum_i omega_i e_i over the record qubits. Events are instantaneous:
free evolution runs up to t_k and the event unitary is applied at t_k, so a
state "at time t" has seen every event with t_k <= t.

Event unitaries are given in the co-rotating memory basis |e, t> =
exp(-i t omega e)|e> by default (``frame="memory"``). In the static basis the
gate applied at t_k is then D(t_k) U D(t_k)^dagger with D(t) = exp(-i H0 t).
``frame="lab"`` applies U unchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .gates import embed
from .statevec import (
    MAX_QUBITS,
    TOL_NORM,
    TOL_UNITARY,
    BitAssignment,
    StateVector,
    apply_local_unitary,
    evolve_diagonal,
    is_unitary,
    project,
)

DEGENERACY_TOL = 1e-9
FRAMES = ("memory", "lab")


class ScheduleError(ValueError):
    """A schedule failed validation."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid schedule: " + "; ".join(self.violations))


def default_omegas(count: int, offset: int = 0) -> list[float]:
    """sqrt(1), sqrt(2), sqrt(3), sqrt(5), sqrt(7), ...

    Square roots of distinct squarefree integers are rationally independent,
    so no two record patterns share a phase sum.
    """
    out = [1.0]
    k = 2
    while len(out) < count + offset:
        if all(k % p for p in range(2, int(k**0.5) + 1)):
            out.append(float(np.sqrt(k)))
        k += 1
    return out[offset : offset + count]


@dataclass(frozen=True)
class Gate:
    matrix: np.ndarray
    targets: tuple[int, ...]
    # catalog name and parameters, kept for serialization
    name: str | None = None
    params: tuple[float, ...] = ()

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def dagger(self) -> "Gate":
        return Gate(self.matrix.conj().T, self.targets)


@dataclass(frozen=True, eq=False)
class SplittingEvent:
    """One record-writing interaction.

    ``gates`` act in order on disjoint or overlapping targets; simultaneous
    recordings on disjoint qubits are a single event with several gates.
    """

    time: float
    gates: tuple[Gate, ...]
    record_set: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "record_set", tuple(int(q) for q in self.record_set))

    @property
    def unitary_targets(self) -> tuple[int, ...]:
        seen: dict[int, None] = {}
        for g in self.gates:
            for q in g.targets:
                seen.setdefault(q)
        return tuple(seen)

    @cached_property
    def unitary(self) -> np.ndarray:
        """Dense product of the gates on ``unitary_targets``."""
        return embed([(g.matrix, g.targets) for g in self.gates], self.unitary_targets)

    def record_patterns(self) -> list[BitAssignment]:
        """All bit patterns on the record set, lexicographic in record order."""
        return [
            BitAssignment(self.record_set, bits)
            for bits in itertools.product((0, 1), repeat=len(self.record_set))
        ]


@dataclass(frozen=True, eq=False)
class SystemSpec:
    n_qubits: int
    omegas: dict[int, float]

    def __post_init__(self):
        object.__setattr__(self, "omegas", {int(q): float(w) for q, w in self.omegas.items()})

    @property
    def record_qubits(self) -> tuple[int, ...]:
        return tuple(sorted(self.omegas))

    @property
    def system_qubits(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.n_qubits) if q not in self.omegas)


@dataclass(frozen=True, eq=False)
class EventSchedule:
    spec: SystemSpec
    events: tuple[SplittingEvent, ...]
    horizon: float
    initial_state: StateVector | None = None
    frame: str = "memory"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def n_qubits(self) -> int:
        return self.spec.n_qubits

    @cached_property
    def violations(self) -> list[str]:
        return validate(self)

    def check(self) -> None:
        if self.violations:
            raise ScheduleError(self.violations)

    def event_times(self) -> list[float]:
        return [ev.time for ev in self.events]


def _phase_sum_collisions(omegas: Sequence[float], tol: float) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    patterns = list(itertools.product((0, 1), repeat=len(omegas)))
    sums = np.array([float(np.dot(p, omegas)) for p in patterns]) if omegas else np.zeros(1)
    order = np.argsort(sums, kind="stable")
    hits = []
    for a, b in zip(order[:-1], order[1:]):
        if sums[b] - sums[a] < tol:
            hits.append((patterns[a], patterns[b]))
    return hits


def validate(schedule: EventSchedule) -> list[str]:
    """Return a list of human-readable invariant violations (empty if valid)."""
    out: list[str] = []
    spec = schedule.spec
    n = spec.n_qubits

    if not 1 <= n <= MAX_QUBITS:
        out.append(f"qubit count: n_qubits={n} outside [1, {MAX_QUBITS}]")
        return out
    for q, w in spec.omegas.items():
        if not 0 <= q < n:
            out.append(f"record qubit {q}: index outside [0, {n})")
        if not np.isfinite(w):
            out.append(f"record qubit {q}: frequency {w} is not finite")

    if len(spec.omegas) <= 20:
        qs = spec.record_qubits
        collisions = _phase_sum_collisions([spec.omegas[q] for q in qs], DEGENERACY_TOL)
        if collisions:
            a, b = collisions[0]
            out.append(
                f"degenerate phase sums: record patterns {a} and {b} on qubits {qs} "
                f"share a phase sum ({len(collisions)} collision(s))"
            )

    if schedule.frame not in FRAMES:
        out.append(f"frame: {schedule.frame!r} is not one of {FRAMES}")

    times = schedule.event_times()
    if times and times[0] <= 0:
        out.append(f"event 0: time {times[0]} must be after the initial state at t=0")
    for k in range(1, len(times)):
        if times[k] <= times[k - 1]:
            out.append(f"event {k}: time {times[k]} not strictly after event {k - 1} at {times[k - 1]}")
    last = times[-1] if times else 0.0
    if not schedule.horizon > last:
        out.append(f"horizon: {schedule.horizon} not strictly after last event time {last}")

    earlier_records: dict[int, int] = {}
    for k, ev in enumerate(schedule.events):
        for j, g in enumerate(ev.gates):
            if any(not 0 <= q < n for q in g.targets):
                out.append(f"event {k} gate {j}: target outside [0, {n}) in {g.targets}")
                continue
            if len(set(g.targets)) != len(g.targets):
                out.append(f"event {k} gate {j}: duplicate targets {g.targets}")
                continue
            if g.matrix.shape != (2 ** len(g.targets),) * 2:
                out.append(f"event {k} gate {j}: matrix shape {g.matrix.shape} does not fit {len(g.targets)} targets")
                continue
            if not is_unitary(g.matrix, TOL_UNITARY):
                out.append(f"event {k} gate {j}: matrix is not unitary")
                continue
            for q in g.targets:
                if q in earlier_records and not _preserves_bit(g.matrix, g.targets.index(q)):
                    out.append(
                        f"event {k} gate {j}: rewrites qubit {q}, the permanent record of "
                        f"event {earlier_records[q]}"
                    )

        if not ev.record_set:
            out.append(f"event {k}: empty record set")
        if len(set(ev.record_set)) != len(ev.record_set):
            out.append(f"event {k}: duplicate qubit in record set {ev.record_set}")
        stray = [q for q in ev.record_set if q not in ev.unitary_targets]
        if stray:
            out.append(f"event {k}: record qubits {stray} are not targets of the event unitary")
        not_env = [q for q in ev.record_set if q not in spec.omegas]
        if not_env:
            out.append(f"event {k}: record qubits {not_env} are not declared record qubits")
        for q in ev.record_set:
            if q in earlier_records:
                out.append(
                    f"record sets not disjoint: qubit {q} recorded by events {earlier_records[q]} and {k}"
                )
        for q in ev.record_set:
            earlier_records.setdefault(q, k)

    psi0 = schedule.initial_state
    if psi0 is not None:
        if psi0.n_qubits != n:
            out.append(f"initial state: {psi0.n_qubits} qubits, schedule has {n}")
        elif not psi0.is_normalized(TOL_NORM):
            out.append(f"initial state: norm^2 {psi0.norm2():.12g} is not 1")
    return out


def _preserves_bit(u: np.ndarray, pos: int) -> bool:
    """True if ``u`` commutes with Z on local qubit ``pos`` (never flips that bit)."""
    k = int(np.log2(u.shape[0]))
    z = 1 - 2 * ((np.arange(2**k) >> (k - 1 - pos)) & 1)
    return bool(np.max(np.abs(u * z[None, :] - z[:, None] * u)) <= TOL_UNITARY)


def _apply_gates(s: StateVector, gates: Sequence[Gate]) -> StateVector:
    for g in gates:
        s = apply_local_unitary(s, g.matrix, g.targets)
    return s


def apply_event(s: StateVector, event: SplittingEvent, schedule: EventSchedule, *, inverse: bool = False) -> StateVector:
    """Apply (or undo) one event's unitary at its scheduled time."""
    gates = [g.dagger() for g in reversed(event.gates)] if inverse else list(event.gates)
    if schedule.frame == "lab":
        return _apply_gates(s, gates)
    omegas = schedule.spec.omegas
    s = evolve_diagonal(s, omegas, -event.time)
    s = _apply_gates(s, gates)
    return evolve_diagonal(s, omegas, event.time)


def evolve_window(s: StateVector, t_from: float, t_to: float, schedule: EventSchedule) -> StateVector:
    """Evolve ``s`` from ``t_from`` to ``t_to``.

    Forward windows apply every event with t_from < t_k <= t_to; backward
    windows (t_to < t_from) undo the same events in reverse order, so the
    two directions are exact inverses.
    """
    schedule.check()
    omegas = schedule.spec.omegas
    if t_from == t_to:
        return s
    t = t_from
    if t_to > t_from:
        for ev in schedule.events:
            if t_from < ev.time <= t_to:
                s = evolve_diagonal(s, omegas, ev.time - t)
                s = apply_event(s, ev, schedule)
                t = ev.time
    else:
        for ev in reversed(schedule.events):
            if t_to < ev.time <= t_from:
                s = evolve_diagonal(s, omegas, ev.time - t)
                s = apply_event(s, ev, schedule, inverse=True)
                t = ev.time
    return evolve_diagonal(s, omegas, t_to - t)


def event_unitary_record(event: SplittingEvent, s: StateVector) -> dict[BitAssignment, StateVector]:
    """Split ``s`` by the value of ``event``'s record qubits."""
    return {r: project(s, r) for r in event.record_patterns()}


def iter_event_states(schedule: EventSchedule, s: StateVector) -> Iterator[tuple[int, SplittingEvent, StateVector]]:
    """Yield the state just after each event, starting from ``s`` at t=0."""
    t = 0.0
    for k, ev in enumerate(schedule.events):
        s = evolve_window(s, t, ev.time, schedule)
        t = ev.time
        yield k, ev, s
