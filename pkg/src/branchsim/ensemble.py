"""Initial-state ensembles obtained by running horizon branches backwards.

Random streams: ``substream(seed, *key)`` derives an independent PCG64
generator from a 64-bit seed and an integer key. ``sample`` uses the bare
seed (key ``()``); ``sample_many`` draws in fixed-size blocks and gives block
``b`` of stream ``s`` the key ``(s, b)``, so the draws do not depend on how
blocks are distributed over workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .branching import Branch, History, decompose
from .schedule import EventSchedule, event_unitary_record, evolve_window, iter_event_states
from .statevec import StateVector

WEIGHT_SUM_TOL = 1e-8
SAMPLE_BLOCK = 8192


@dataclass(frozen=True, eq=False)
class EnsembleEntry:
    history: History
    initial_state: StateVector
    weight: float
    # True once initial_state has been rescaled to unit norm for forward use;
    # weight still holds the Born weight of the unscaled member.
    normalized: bool = False


@dataclass(frozen=True)
class ReplayReport:
    observed_history: History
    per_event_leakage: tuple[float, ...]
    max_leakage: float


def build_ensemble(schedule: EventSchedule, branches: Sequence[Branch] | None = None) -> list[EnsembleEntry]:
    """|Psi(h, 0)> = exp(iHt)|Psi(h, t)> for every branch at the horizon."""
    if branches is None:
        branches = decompose(schedule)
    entries = []
    for b in branches:
        psi_h0 = evolve_window(b.vector, schedule.horizon, 0.0, schedule)
        entries.append(EnsembleEntry(b.history, psi_h0, psi_h0.norm2()))
    return entries


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _weights(entries: Sequence[EnsembleEntry]) -> np.ndarray:
    if not entries:
        raise ValueError("cannot sample from an empty ensemble")
    w = np.array([e.weight for e in entries], dtype=float)
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"ensemble weights sum to {total!r}, expected 1")
    return np.cumsum(w / total)


def _draw(cdf: np.ndarray, rng: np.random.Generator, size: int | None = None):
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, len(cdf) - 1)


def sample(entries: Sequence[EnsembleEntry], seed: int) -> EnsembleEntry:
    """Pick one member with probability equal to its weight."""
    cdf = _weights(entries)
    chosen = entries[int(_draw(cdf, substream(seed)))]
    return replace(chosen, initial_state=chosen.initial_state.normalized(), normalized=True)


def sample_many(
    entries: Sequence[EnsembleEntry],
    seed: int,
    n: int,
    *,
    stream: int = 0,
    workers: int = 1,
    block: int = SAMPLE_BLOCK,
) -> np.ndarray:
    """Indices into ``entries`` for ``n`` independent draws."""
    cdf = _weights(entries)
    n_blocks = -(-n // block)

    def run(b: int) -> np.ndarray:
        size = min(block, n - b * block)
        return _draw(cdf, substream(seed, stream, b), size)

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    else:
        parts = [run(b) for b in range(n_blocks)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def replay(entry: EnsembleEntry, schedule: EventSchedule) -> ReplayReport:
    """Run an ensemble member forward and read out each event's record.

    The observed pattern at each event is the one carrying the most norm;
    leakage is the fraction of norm found on the other patterns of that event
    (the specified pattern, not the observed one, is the reference).
    """
    psi = entry.initial_state if entry.normalized else entry.initial_state.normalized()
    observed, leakage = [], []
    for k, ev, s in iter_event_states(schedule, psi):
        parts = event_unitary_record(ev, s)
        norms = {r.bits: v.norm2() for r, v in parts.items()}
        total = sum(norms.values())
        observed.append(max(norms, key=norms.get))
        wanted = entry.history.results[k]
        leakage.append(max(0.0, (total - norms[wanted]) / total))
    return ReplayReport(History(tuple(observed)), tuple(leakage), max(leakage, default=0.0))
