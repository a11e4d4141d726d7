"""Histories, branch decomposition and history-operator weights.

A history assigns one record pattern to every event. Two routes lead from a
history to a weight:

* ``decompose`` evolves the initial state to the horizon and projects once
  onto the joint record pattern of all events;
* ``history_operator_apply`` interleaves free evolution with a projection
  right after each event, Q(h) = P(r_N) U(t_N, t_{N-1}) ... P(r_0) U(t_0, 0).

Because records are permanent the two agree; tests rely on that.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np

from .schedule import EventSchedule, ScheduleError, evolve_window
from .statevec import BitAssignment, StateVector, project, qubit_bits

if TYPE_CHECKING:
    from .ensemble import EnsembleEntry

MAX_HISTORIES = 2**20
PRUNE_WEIGHT = 1e-12


class TooManyHistories(RuntimeError):
    pass


@dataclass(frozen=True)
class History:
    """Per-event record patterns r_0 .. r_N."""

    results: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "results", tuple(tuple(int(b) for b in r) for r in self.results))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(b for r in self.results for b in r)

    def assignments(self, schedule: EventSchedule) -> list[BitAssignment]:
        return [BitAssignment(ev.record_set, r) for ev, r in zip(schedule.events, self.results)]

    def joint(self, schedule: EventSchedule) -> BitAssignment:
        qs = tuple(q for ev in schedule.events for q in ev.record_set)
        return BitAssignment(qs, self.bits)

    @classmethod
    def from_bits(cls, schedule: EventSchedule, bits: Sequence[int]) -> "History":
        sizes = [len(ev.record_set) for ev in schedule.events]
        if len(bits) != sum(sizes):
            raise ValueError(f"expected {sum(sizes)} record bits, got {len(bits)}")
        out, i = [], 0
        for k in sizes:
            out.append(tuple(bits[i : i + k]))
            i += k
        return cls(tuple(out))

    def __str__(self) -> str:
        return "(" + ",".join(str(b) for b in self.bits) + ")"


@dataclass(frozen=True, eq=False)
class Branch:
    history: History
    vector: StateVector
    weight: float


def _require_valid(schedule: EventSchedule) -> None:
    schedule.check()
    if schedule.initial_state is None:
        raise ScheduleError(["initial state: required for decomposition"])


def history_count(schedule: EventSchedule) -> int:
    return 2 ** sum(len(ev.record_set) for ev in schedule.events)


def enumerate_histories(schedule: EventSchedule, max_histories: int = MAX_HISTORIES) -> list[History]:
    """Every combination of per-event record patterns, lexicographic."""
    schedule.check()
    count = history_count(schedule)
    if count > max_histories:
        raise TooManyHistories(f"{count} histories exceeds the limit of {max_histories}")
    per_event = [list(itertools.product((0, 1), repeat=len(ev.record_set))) for ev in schedule.events]
    return [History(rs) for rs in itertools.product(*per_event)]


def _joint_keys(schedule: EventSchedule) -> np.ndarray:
    """Joint record pattern of every basis index, packed into an int."""
    n = schedule.n_qubits
    key = np.zeros(2**n, dtype=np.int64)
    for ev in schedule.events:
        for q in ev.record_set:
            key = (key << 1) | qubit_bits(n, q)
    return key


def decompose(
    schedule: EventSchedule,
    *,
    prune: float = PRUNE_WEIGHT,
    max_histories: int = MAX_HISTORIES,
) -> list[Branch]:
    """Split the state at the horizon into branches labelled by history."""
    _require_valid(schedule)
    n_records = sum(len(ev.record_set) for ev in schedule.events)
    if 2**n_records > max_histories:
        raise TooManyHistories(f"{2**n_records} histories exceeds the limit of {max_histories}")

    final = evolve_window(schedule.initial_state, 0.0, schedule.horizon, schedule)
    # only patterns present in the support can carry weight
    support = np.abs(final.amplitudes) > 0
    present = np.unique(_joint_keys(schedule)[support])

    branches = []
    for key in present:
        bits = [(int(key) >> (n_records - 1 - i)) & 1 for i in range(n_records)]
        h = History.from_bits(schedule, bits)
        vec = project(final, h.joint(schedule))
        w = vec.norm2()
        if w > prune:
            branches.append(Branch(h, vec, w))
    return branches


def history_operator_apply(psi0: StateVector, schedule: EventSchedule, h: History) -> StateVector:
    """Q(h)|psi0>, the state just after the last event."""
    schedule.check()
    if len(h.results) != len(schedule.events):
        raise ValueError(f"history has {len(h.results)} results for {len(schedule.events)} events")
    s, t = psi0, 0.0
    for ev, r in zip(schedule.events, h.assignments(schedule)):
        s = evolve_window(s, t, ev.time, schedule)
        s = project(s, r)
        t = ev.time
    return s


def born_weight(psi0: StateVector, schedule: EventSchedule, h: History) -> float:
    return history_operator_apply(psi0, schedule, h).norm2()


def iter_history_tree(psi0: StateVector, schedule: EventSchedule) -> Iterator[tuple[History, StateVector]]:
    """Q(h)|psi0> for every history, sharing the common prefix of the chain."""
    schedule.check()
    events = schedule.events

    def walk(k: int, s: StateVector, t: float, prefix: tuple):
        if k == len(events):
            yield History(prefix), s
            return
        ev = events[k]
        s = evolve_window(s, t, ev.time, schedule)
        for r in ev.record_patterns():
            yield from walk(k + 1, project(s, r), ev.time, prefix + (r.bits,))

    yield from walk(0, psi0, 0.0, ())


def check_annihilation(schedule: EventSchedule, ensemble: Sequence["EnsembleEntry"]) -> float:
    """max over h != h' of ||Q(h)|Psi(h', 0)>||."""
    worst = 0.0
    for entry in ensemble:
        for h, v in iter_history_tree(entry.initial_state, schedule):
            if h != entry.history:
                worst = max(worst, float(np.sqrt(v.norm2())))
    return worst
