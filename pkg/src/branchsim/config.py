"""Schedule files.

A schedule file is YAML (JSON is accepted too, being a subset)::

    n_qubits: 5
    frame: memory            # or "lab"; default memory
    record_qubits:           # qubit -> frequency omega
      1: 1.0
      2: 1.4142135623730951
    initial_state:
      basis: [0, 0, 0, 0, 0] # or amplitudes: [[re, im], ...]
    events:
      - time: 1.0
        gate: U1_z           # catalog name, or matrix: rows of [re, im]
        targets: [0, 1, 2]
        record: [1, 2]
      - time: 2.0
        gates:               # several gates applied in order in one event
          - {gate: U2_theta, params: [0.5], targets: [0, 3, 4]}
        record: [3, 4]
    horizon: 3.0

Qubit 0 is the most significant bit of an amplitude index. Complex numbers
are [re, im] pairs and matrices are row-major.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import yaml

from .gates import CATALOG, named_gate
from .schedule import EventSchedule, Gate, SplittingEvent, SystemSpec
from .statevec import StateVector


class ConfigError(ValueError):
    pass


def _complex_list(data, what: str) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: expected [re, im] pairs ({exc})") from None
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ConfigError(f"{what}: expected [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _pairs(z: np.ndarray) -> list:
    z = np.asarray(z)
    # + 0.0 folds -0.0 into 0.0 so equal states hash equally
    return np.stack([z.real + 0.0, z.imag + 0.0], axis=-1).tolist()


def _parse_matrix(data, n_targets: int, what: str) -> np.ndarray:
    m = _complex_list(data, what)
    dim = 2**n_targets
    if m.size != dim * dim:
        raise ConfigError(f"{what}: {m.size} entries, expected {dim}x{dim} for {n_targets} targets")
    if m.ndim == 2 and m.shape != (dim, dim):
        raise ConfigError(f"{what}: matrix rows have shape {m.shape}, expected ({dim}, {dim})")
    return m.reshape(dim, dim)


def _parse_gate(d: dict, what: str) -> Gate:
    if not isinstance(d, dict):
        raise ConfigError(f"{what}: expected a mapping")
    if "targets" not in d:
        raise ConfigError(f"{what}: missing 'targets'")
    targets = tuple(int(q) for q in d["targets"])
    if "matrix" in d:
        return Gate(_parse_matrix(d["matrix"], len(targets), what + " matrix"), targets)
    name = d.get("gate")
    if name not in CATALOG:
        raise ConfigError(f"{what}: unknown gate {name!r}; use one of {sorted(CATALOG)} or 'matrix'")
    params = tuple(float(p) for p in d.get("params", ()))
    try:
        m = named_gate(name, *params)
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    if m.shape[0] != 2 ** len(targets):
        raise ConfigError(f"{what}: gate {name} acts on {m.shape[0].bit_length() - 1} qubits, got targets {targets}")
    return Gate(m, targets, name, params)


def _event_lines(text: str) -> list[int]:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return []
    if not isinstance(root, yaml.MappingNode):
        return []
    for k, v in root.value:
        if k.value == "events" and isinstance(v, yaml.SequenceNode):
            return [item.start_mark.line + 1 for item in v.value]
    return []


def schedule_from_dict(d: dict, event_lines: list[int] | None = None) -> EventSchedule:
    if not isinstance(d, dict):
        raise ConfigError("schedule: top level must be a mapping")
    for key in ("n_qubits", "horizon"):
        if key not in d:
            raise ConfigError(f"schedule: missing required key {key!r}")
    n = int(d["n_qubits"])
    omegas = {int(q): float(w) for q, w in (d.get("record_qubits") or {}).items()}
    spec = SystemSpec(n, omegas)

    events = []
    for k, ev in enumerate(d.get("events") or []):
        where = f"event {k}"
        if event_lines and k < len(event_lines):
            where += f" (line {event_lines[k]})"
        if not isinstance(ev, dict) or "time" not in ev:
            raise ConfigError(f"{where}: expected a mapping with 'time'")
        if "gates" in ev:
            gates = tuple(_parse_gate(g, f"{where} gate {j}") for j, g in enumerate(ev["gates"]))
        else:
            gates = (_parse_gate(ev, where),)
        record = ev.get("record")
        if record is None:
            raise ConfigError(f"{where}: missing 'record'")
        events.append(SplittingEvent(float(ev["time"]), gates, tuple(int(q) for q in record)))

    psi0 = None
    init = d.get("initial_state")
    if init is not None:
        if "basis" in init:
            bits = [int(b) for b in init["basis"]]
            if len(bits) != n:
                raise ConfigError(f"initial_state: basis has {len(bits)} bits for {n} qubits")
            psi0 = StateVector.basis(bits)
        elif "amplitudes" in init:
            amps = _complex_list(init["amplitudes"], "initial_state amplitudes")
            if amps.shape != (2**n,):
                raise ConfigError(f"initial_state: {amps.size} amplitudes for {n} qubits")
            psi0 = StateVector(amps)
        else:
            raise ConfigError("initial_state: give 'basis' or 'amplitudes'")

    return EventSchedule(spec, tuple(events), float(d["horizon"]), psi0, str(d.get("frame", "memory")))


def load_schedule(path: str | Path) -> EventSchedule:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return schedule_from_dict(data, _event_lines(text))


def schedule_to_dict(schedule: EventSchedule) -> dict:
    events = []
    for ev in schedule.events:
        gates = []
        for g in ev.gates:
            if g.name is not None:
                gd = {"gate": g.name, "targets": list(g.targets)}
                if g.params:
                    gd["params"] = list(g.params)
            else:
                gd = {"matrix": _pairs(g.matrix), "targets": list(g.targets)}
            gates.append(gd)
        events.append({"time": ev.time, "gates": gates, "record": list(ev.record_set)})
    out = {
        "n_qubits": schedule.n_qubits,
        "frame": schedule.frame,
        "record_qubits": {int(q): w for q, w in sorted(schedule.spec.omegas.items())},
        "events": events,
        "horizon": schedule.horizon,
    }
    if schedule.initial_state is not None:
        out["initial_state"] = {"amplitudes": _pairs(schedule.initial_state.amplitudes)}
    return out


def dump_schedule(schedule: EventSchedule, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(schedule_to_dict(schedule), sort_keys=False))


def schedule_hash(schedule: EventSchedule) -> str:
    blob = json.dumps(schedule_to_dict(schedule), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
