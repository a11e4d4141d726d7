"""The toy spin model and the Bell correlation experiment.

Spin bit 0 is |up> and 1 is |down> along z. Toy-model qubits are
(s, e0, e1, e2, e3); a Bell subsystem is (s0, s1, e0, e1, e2, e3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .branching import born_weight, enumerate_histories
from .ensemble import build_ensemble, sample_many
from .gates import u1_z, u2_theta, u2_x
from .schedule import EventSchedule, Gate, SplittingEvent, SystemSpec, default_omegas
from .statevec import StateVector, tensor

TOY_TIMES = (1.0, 2.0)
TOY_HORIZON = 3.0
BELL_TIME = 1.0
BELL_HORIZON = 2.0


def build_toy(
    t1: float = TOY_TIMES[0],
    t2: float = TOY_TIMES[1],
    horizon: float = TOY_HORIZON,
    omegas=None,
    frame: str = "memory",
) -> tuple[StateVector, EventSchedule]:
    """Spin up with a blank environment; z recorded on (e0, e1), then x on (e2, e3)."""
    omegas = list(omegas) if omegas is not None else default_omegas(4)
    spec = SystemSpec(5, dict(zip((1, 2, 3, 4), omegas)))
    events = (
        SplittingEvent(t1, (Gate(u1_z(), (0, 1, 2), "U1_z"),), (1, 2)),
        SplittingEvent(t2, (Gate(u2_x(), (0, 3, 4), "U2_x"),), (3, 4)),
    )
    psi0 = StateVector.basis([0, 0, 0, 0, 0])
    return psi0, EventSchedule(spec, events, horizon, psi0, frame)


def singlet() -> StateVector:
    return StateVector(np.array([0, 1, -1, 0]) / math.sqrt(2))


def _bell_gates(theta: float, offset: int) -> tuple[Gate, Gate]:
    s0, s1, e0, e1, e2, e3 = range(offset, offset + 6)
    return (
        Gate(u1_z(), (s0, e0, e1), "U1_z"),
        Gate(u2_theta(theta), (s1, e2, e3), "U2_theta", (theta,)),
    )


def build_bell_subsystem(
    theta: float, time: float = BELL_TIME, horizon: float = BELL_HORIZON, frame: str = "memory"
) -> tuple[StateVector, EventSchedule]:
    """Singlet on (s0, s1); one event records s0 along z and s1 along theta."""
    return build_bell_system(theta, 1, time=time, horizon=horizon, frame=frame)


def build_bell_system(
    theta: float, n_subsystems: int, time: float = BELL_TIME, horizon: float = BELL_HORIZON, frame: str = "memory"
) -> tuple[StateVector, EventSchedule]:
    """``n_subsystems`` independent Bell subsystems materialized in one state.

    Each subsystem gets its own frequencies so the joint record basis stays
    non-degenerate. All recordings happen in one composite event.
    """
    if n_subsystems < 1:
        raise ValueError("need at least one subsystem")
    omegas, gates, records = {}, [], []
    psi0 = None
    block = tensor(singlet(), StateVector.basis([0, 0, 0, 0]))
    for i in range(n_subsystems):
        off = 6 * i
        env = tuple(range(off + 2, off + 6))
        omegas.update(zip(env, default_omegas(4, offset=4 * i)))
        gates.extend(_bell_gates(theta, off))
        records.extend(env)
        psi0 = block if psi0 is None else tensor(psi0, block)
    spec = SystemSpec(6 * n_subsystems, omegas)
    event = SplittingEvent(time, tuple(gates), tuple(records))
    return psi0, EventSchedule(spec, (event,), horizon, psi0, frame)


def bell_outcome(bits) -> int:
    """(e1 - e0)(e3 - e2) for one subsystem's record bits (e0, e1, e2, e3)."""
    e0, e1, e2, e3 = bits
    return (e1 - e0) * (e3 - e2)


def bell_exact(theta: float) -> float:
    """Born-weighted mean of the outcome over all subsystem histories."""
    psi0, sched = build_bell_subsystem(theta)
    total = 0.0
    for h in enumerate_histories(sched):
        total += born_weight(psi0, sched, h) * bell_outcome(h.bits)
    return total


@dataclass(frozen=True)
class BellConfig:
    theta: float
    n_subsystems: int
    seed: int

    def __post_init__(self):
        if not 0 <= self.theta < 2 * math.pi:
            raise ValueError(f"theta must lie in [0, 2pi), got {self.theta}")
        if self.n_subsystems < 1:
            raise ValueError("n_subsystems must be at least 1")


@dataclass(frozen=True)
class CorrelationResult:
    theta: float
    estimate: float
    stderr: float
    exact: float
    n: int
    seed: int
    empirical_stderr: float

    def within(self, k: float) -> bool:
        return abs(self.estimate - self.exact) <= k * self.stderr


def bell_correlation(config: BellConfig, workers: int = 1) -> CorrelationResult:
    """Mean outcome over N independent subsystems, each drawn from the
    single-subsystem ensemble (the N-subsystem ensemble is a product)."""
    _, sched = build_bell_subsystem(config.theta)
    entries = build_ensemble(sched)
    outcomes = np.array([bell_outcome(e.history.bits) for e in entries], dtype=float)
    idx = sample_many(entries, config.seed, config.n_subsystems, workers=workers)
    values = outcomes[idx]
    n = config.n_subsystems
    exact = -math.cos(config.theta)
    estimate = float(values.mean())
    emp = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    stderr = math.sqrt(max(0.0, 1.0 - exact * exact) / n)
    return CorrelationResult(config.theta, estimate, stderr, exact, n, config.seed, emp)
