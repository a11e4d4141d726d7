"""Randomized schedules and the property checks run against them."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .branching import (
    born_weight,
    check_annihilation,
    decompose,
    enumerate_histories,
    history_operator_apply,
)
from .ensemble import build_ensemble, replay
from .schedule import EventSchedule, Gate, SplittingEvent, SystemSpec, default_omegas, evolve_window
from .statevec import random_state

MAX_VERIFY_QUBITS = 6
MAX_VERIFY_EVENTS = 3
TOL = 1e-10

PROPERTIES = (
    "born_agreement",
    "annihilation",
    "completeness",
    "path_equivalence",
    "weight_normalization",
    "round_trip",
    "replay_leakage",
)


def random_schedule(n_qubits: int, n_events: int, rng: np.random.Generator) -> EventSchedule:
    """A valid schedule with Haar-random event unitaries and fresh records.

    At least one qubit stays a system qubit; every event owns at least one
    record qubit. Each event acts on the system qubits, its own records and a
    random subset of later events' (still unwritten) record qubits.
    """
    if not 1 <= n_qubits <= MAX_VERIFY_QUBITS:
        raise ValueError(f"n_qubits must lie in [1, {MAX_VERIFY_QUBITS}]")
    if not 0 <= n_events <= MAX_VERIFY_EVENTS:
        raise ValueError(f"n_events must lie in [0, {MAX_VERIFY_EVENTS}]")
    if n_qubits < n_events + 1:
        raise ValueError(f"{n_events} events need at least {n_events + 1} qubits")

    order = rng.permutation(n_qubits)
    n_sys = int(rng.integers(1, n_qubits - n_events + 1)) if n_events else n_qubits
    system = sorted(int(q) for q in order[:n_sys])
    rec_pool = [int(q) for q in order[n_sys:]]
    owner = list(range(n_events)) + [int(rng.integers(n_events)) for _ in range(len(rec_pool) - n_events)]
    rng.shuffle(owner)
    records = [sorted(q for q, o in zip(rec_pool, owner) if o == k) for k in range(n_events)]

    all_records = sorted(rec_pool)
    spec = SystemSpec(n_qubits, dict(zip(all_records, default_omegas(len(all_records)))))

    times = np.cumsum(rng.uniform(0.2, 1.5, size=n_events + 1))
    events = []
    for k in range(n_events):
        later = [q for j in range(k + 1, n_events) for q in records[j] if rng.random() < 0.5]
        targets = tuple(system + records[k] + later)
        u = unitary_group.rvs(2 ** len(targets), random_state=rng)
        events.append(SplittingEvent(float(times[k]), (Gate(u, targets),), tuple(records[k])))

    psi0 = random_state(n_qubits, rng)
    frame = "memory" if rng.random() < 0.5 else "lab"
    return EventSchedule(spec, tuple(events), float(times[-1]), psi0, frame)


def _maxabs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def verify_schedule(schedule: EventSchedule) -> dict[str, float]:
    """Largest deviation observed for each property in ``PROPERTIES``.

    Raises ScheduleError before any check if the schedule is invalid.
    """
    schedule.check()
    psi0 = schedule.initial_state
    branches = decompose(schedule)
    ensemble = build_ensemble(schedule, branches)
    ens_weight = {e.history: e.weight for e in ensemble}

    born = {h: born_weight(psi0, schedule, h) for h in enumerate_histories(schedule)}
    born_dev = max(abs(ens_weight.get(h, 0.0) - w) for h, w in born.items())

    total = sum((e.initial_state for e in ensemble[1:]), ensemble[0].initial_state) if ensemble else None
    completeness = _maxabs(total.amplitudes, psi0.amplitudes) if total is not None else 1.0

    t_last = schedule.events[-1].time if schedule.events else 0.0
    path = 0.0
    for b in branches:
        q = history_operator_apply(psi0, schedule, b.history)
        q = evolve_window(q, t_last, schedule.horizon, schedule)
        path = max(path, _maxabs(q.amplitudes, b.vector.amplitudes))

    there = evolve_window(psi0, 0.0, schedule.horizon, schedule)
    back = evolve_window(there, schedule.horizon, 0.0, schedule)

    leak = 0.0
    for e in ensemble:
        rep = replay(e, schedule)
        # a misread history counts as full leakage
        leak = max(leak, rep.max_leakage if rep.observed_history == e.history else 1.0)

    return {
        "born_agreement": born_dev,
        "annihilation": check_annihilation(schedule, ensemble),
        "completeness": completeness,
        "path_equivalence": path,
        "weight_normalization": abs(sum(born.values()) - 1.0),
        "round_trip": _maxabs(back.amplitudes, psi0.amplitudes),
        "replay_leakage": leak,
    }
