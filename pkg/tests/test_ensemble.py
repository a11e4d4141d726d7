import math

import numpy as np
import pytest

from branchsim.branching import History, born_weight, decompose
from branchsim.ensemble import (
    EnsembleEntry,
    build_ensemble,
    replay,
    sample,
    sample_many,
    substream,
)
from branchsim.experiments import build_toy
from branchsim.schedule import EventSchedule, SystemSpec, evolve_window
from branchsim.statevec import StateVector, random_state
from branchsim.verify import random_schedule

H0101 = History(((0, 1), (0, 1)))
H0110 = History(((0, 1), (1, 0)))


def toy_entries():
    _, sched = build_toy()
    return sched, {e.history: e for e in build_ensemble(sched)}


def paper_initial(sign):
    v = np.zeros(32, dtype=complex)
    v[0b00000] = 1 / math.sqrt(2)
    v[0b11100] = sign / math.sqrt(2)
    return v


@pytest.mark.parametrize("hist, sign", [(H0101, +1), (H0110, -1)])
def test_toy_ensemble_states(hist, sign):
    _, entries = toy_entries()
    e = entries[hist]
    assert abs(e.weight - 0.5) < 1e-10
    np.testing.assert_allclose(e.initial_state.normalized().amplitudes, paper_initial(sign), atol=1e-10)


def test_lab_frame_ensemble_differs_by_relative_phase():
    _, sched = build_toy(frame="lab")
    entries = {e.history: e for e in build_ensemble(sched)}
    v = entries[H0101].initial_state.normalized().amplitudes
    om = sched.spec.omegas
    rel = v[0b11100] / v[0b00000]
    assert abs(rel - np.exp(1j * (om[1] + om[2]) * 1.0)) < 1e-12


def test_no_event_ensemble():
    rng = np.random.default_rng(1)
    psi0 = random_state(2, rng)
    sched = EventSchedule(SystemSpec(2, {1: 1.0}), (), 2.0, psi0)
    (e,) = build_ensemble(sched)
    assert e.history == History(())
    assert abs(e.weight - 1.0) < 1e-12
    np.testing.assert_allclose(e.initial_state.amplitudes, psi0.amplitudes, atol=1e-14)


def test_entries_sum_to_initial_state():
    rng = np.random.default_rng(2)
    for _ in range(20):
        sched = random_schedule(5, 2, rng)
        ens = build_ensemble(sched)
        total = sum(e.initial_state.amplitudes for e in ens)
        assert np.max(np.abs(total - sched.initial_state.amplitudes)) < 1e-10
        assert abs(sum(e.weight for e in ens) - 1.0) < 1e-10
        for e in ens:
            assert abs(e.weight - e.initial_state.norm2()) < 1e-12


def test_forward_round_trip_reproduces_branch():
    rng = np.random.default_rng(3)
    sched = random_schedule(5, 3, rng)
    branches = decompose(sched)
    for b, e in zip(branches, build_ensemble(sched, branches)):
        fwd = evolve_window(e.initial_state, 0.0, sched.horizon, sched)
        assert np.max(np.abs(fwd.amplitudes - b.vector.amplitudes)) < 1e-10


def test_entry_weight_equals_chain_weight():
    rng = np.random.default_rng(4)
    for _ in range(10):
        sched = random_schedule(4, 2, rng)
        for e in build_ensemble(sched):
            assert abs(e.weight - born_weight(sched.initial_state, sched, e.history)) < 1e-10


def test_sample_single_entry():
    e = EnsembleEntry(History(()), StateVector.basis([0, 1]), 1.0)
    for seed in (0, 1, 2**63 + 5):
        out = sample([e], seed)
        assert out.history == e.history
        assert out.normalized


def test_sample_renormalizes():
    _, entries = toy_entries()
    out = sample(list(entries.values()), 3)
    assert abs(out.initial_state.norm2() - 1.0) < 1e-12
    assert abs(out.weight - 0.5) < 1e-10


def test_sample_is_deterministic():
    _, entries = toy_entries()
    ens = list(entries.values())
    assert sample(ens, 42).history == sample(ens, 42).history


def test_sample_covers_both_toy_histories():
    _, entries = toy_entries()
    ens = list(entries.values())
    seen = {sample(ens, s).history for s in range(40)}
    assert seen == {H0101, H0110}


def test_sample_errors():
    with pytest.raises(ValueError):
        sample([], 1)
    bad = EnsembleEntry(History(()), StateVector.basis([0]), 0.5)
    with pytest.raises(ValueError):
        sample([bad], 1)


def test_toy_sampling_frequency():
    _, entries = toy_entries()
    ens = list(entries.values())
    n = 100_000
    idx = sample_many(ens, seed=2024, n=n)
    assert len(idx) == n
    # binomial CLT, p = 1/2: 3 sigma = 3 * sqrt(0.25 / n) = 0.0047
    freq = np.mean(idx == 0)
    assert abs(freq - 0.5) <= 0.005


def test_sample_many_independent_of_workers():
    _, entries = toy_entries()
    ens = list(entries.values())
    a = sample_many(ens, 9, 50_000, workers=1, block=4096)
    b = sample_many(ens, 9, 50_000, workers=4, block=4096)
    np.testing.assert_array_equal(a, b)


def test_sample_many_streams_differ():
    _, entries = toy_entries()
    ens = list(entries.values())
    a = sample_many(ens, 9, 1000, stream=0)
    b = sample_many(ens, 9, 1000, stream=1)
    assert not np.array_equal(a, b)


def test_substream_reproducible():
    assert substream(5, 1, 2).random() == substream(5, 1, 2).random()
    assert substream(5, 1, 2).random() != substream(5, 2, 1).random()


@pytest.mark.parametrize("hist", [H0101, H0110])
def test_toy_replay(hist):
    sched, entries = toy_entries()
    rep = replay(entries[hist], sched)
    assert rep.observed_history == hist
    assert rep.max_leakage < 1e-10
    assert len(rep.per_event_leakage) == 2


def test_replay_no_events():
    sched = EventSchedule(SystemSpec(1, {}), (), 1.0, StateVector.basis([1]))
    (e,) = build_ensemble(sched)
    rep = replay(e, sched)
    assert rep.observed_history == History(())
    assert rep.max_leakage == 0.0


def test_replay_reports_leakage_for_a_foreign_state():
    # the true initial state is not an ensemble member: it spreads over both branches
    sched, _ = toy_entries()
    fake = EnsembleEntry(H0101, sched.initial_state, 1.0)
    rep = replay(fake, sched)
    assert rep.per_event_leakage[0] < 1e-12
    assert abs(rep.per_event_leakage[1] - 0.5) < 1e-10


def test_replay_random_schedules():
    rng = np.random.default_rng(5)
    for _ in range(15):
        sched = random_schedule(6, 3, rng)
        for e in build_ensemble(sched):
            rep = replay(e, sched)
            assert rep.observed_history == e.history
            assert rep.max_leakage < 1e-10
