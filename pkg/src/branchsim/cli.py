"""Command-line entry point.

    branchsim toy [--out PATH]
    branchsim bell --theta 0,pi/3,pi/2 --n 100000 --seed 1 [--format csv|json]
    branchsim verify-born --qubits 4 --events 2 --trials 100 --seed 1
    branchsim decompose --config schedule.yaml
    branchsim sample-replay [--config schedule.yaml] --seed 7

Exit status is 0 when every checked invariant holds, 1 when one fails and 2
for unusable input (parse or validation errors).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .branching import decompose
from .config import ConfigError, dump_schedule, load_schedule, schedule_hash
from .ensemble import build_ensemble, replay, sample, substream
from .experiments import BellConfig, bell_correlation, build_toy
from .schedule import EventSchedule, ScheduleError
from .statevec import TOL_NORM, TOL_UNITARY
from .verify import PROPERTIES, TOL, random_schedule, verify_schedule

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
BELL_SIGMAS = 4.0
CSV_COLUMNS = ("theta", "n", "estimate", "stderr", "exact", "seed")
TOLERANCES = {"norm": TOL_NORM, "unitary": TOL_UNITARY, "property": TOL}

_ANGLE = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


class InputError(Exception):
    pass


def parse_angle(text: str) -> float:
    """'0.5', 'pi', 'pi/3', '2pi/3', '2*pi/3'."""
    m = _ANGLE.match(text)
    if m:
        coef = m.group(1)
        value = math.pi * (float(coef) if coef not in ("", "+", "-") else (-1.0 if coef == "-" else 1.0))
        return value / float(m.group(2)) if m.group(2) else value
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


def parse_angles(text: str) -> list[float]:
    return [parse_angle(t) for t in text.split(",") if t.strip()]


def u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits: {text}")
    return v


def _pairs(amps) -> list:
    return [[float(z.real), float(z.imag)] for z in amps]


def envelope(command: str, seed: int | None, schedule: EventSchedule | None, result: dict, failures: list[str]) -> dict:
    return {
        "command": command,
        "seed": seed,
        "tolerances": TOLERANCES,
        "schedule_hash": schedule_hash(schedule) if schedule is not None else None,
        "ok": not failures,
        "failures": failures,
        "result": result,
        "metadata": {
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    }


def analyze_schedule(schedule: EventSchedule, amplitudes: bool = True) -> tuple[dict, list[str]]:
    """Branch table, ensemble dump, replays and invariant checks for one schedule."""
    branches = decompose(schedule)
    ensemble = build_ensemble(schedule, branches)
    checks = verify_schedule(schedule)
    failures = [f"{name}: max deviation {checks[name]:.3e} >= {TOL:g}" for name in PROPERTIES if not checks[name] < TOL]

    ens_rows, replays = [], []
    for e in ensemble:
        row = {"history": list(e.history.bits), "weight": e.weight}
        if amplitudes:
            row["amplitudes"] = _pairs(e.initial_state.amplitudes)
        ens_rows.append(row)
        rep = replay(e, schedule)
        replays.append(
            {
                "history": list(e.history.bits),
                "observed": list(rep.observed_history.bits),
                "per_event_leakage": list(rep.per_event_leakage),
                "max_leakage": rep.max_leakage,
            }
        )
        if rep.observed_history != e.history:
            failures.append(f"replay: entry {e.history} observed {rep.observed_history}")

    result = {
        "n_qubits": schedule.n_qubits,
        "frame": schedule.frame,
        "branches": [{"history": list(b.history.bits), "weight": b.weight} for b in branches],
        "ensemble": ens_rows,
        "replays": replays,
        "checks": {name: {"max_deviation": checks[name], "ok": checks[name] < TOL} for name in PROPERTIES},
    }
    return result, failures


def run_toy(seed: int = 0) -> tuple[dict, int]:
    _, schedule = build_toy()
    result, failures = analyze_schedule(schedule)
    return envelope("toy", seed, schedule, result, failures), EXIT_FAIL if failures else EXIT_OK


def run_decompose(config: str | Path, seed: int = 0, amplitudes: bool = True) -> tuple[dict, int]:
    schedule = _load_valid(config, need_state=True)
    result, failures = analyze_schedule(schedule, amplitudes)
    return envelope("decompose", seed, schedule, result, failures), EXIT_FAIL if failures else EXIT_OK


def run_bell(thetas: list[float], n: int, seed: int, workers: int = 1) -> tuple[list, list[str]]:
    rows, failures = [], []
    for theta in thetas:
        res = bell_correlation(BellConfig(theta % (2 * math.pi), n, seed), workers=workers)
        rows.append(res)
        if not res.within(BELL_SIGMAS):
            failures.append(
                f"theta={theta!r}: estimate {res.estimate:.6f} is more than {BELL_SIGMAS:g} stderr "
                f"({res.stderr:.3g}) from {res.exact:.6f}"
            )
    return rows, failures


def run_verify_born(n_qubits: int, n_events: int, trials: int, seed: int) -> tuple[dict, int, EventSchedule | None]:
    """Check the property suite on ``trials`` random schedules.

    Returns the report, the exit code and the first failing schedule, if any.
    """
    if trials < 1:
        raise InputError("trials must be at least 1")
    worst = {name: 0.0 for name in PROPERTIES}
    counterexample, failures = None, []
    for i in range(trials):
        schedule = random_schedule(n_qubits, n_events, substream(seed, i))
        devs = verify_schedule(schedule)
        bad = [name for name in PROPERTIES if not devs[name] < TOL]
        for name in PROPERTIES:
            worst[name] = max(worst[name], devs[name])
        if bad and counterexample is None:
            counterexample = schedule
            failures.append(f"trial {i}: {', '.join(bad)}")
    result = {
        "n_qubits": n_qubits,
        "n_events": n_events,
        "trials": trials,
        "max_deviation": worst,
    }
    report = envelope("verify-born", seed, None, result, failures)
    return report, EXIT_FAIL if failures else EXIT_OK, counterexample


def run_sample_replay(schedule: EventSchedule, seed: int) -> tuple[dict, int]:
    ensemble = build_ensemble(schedule)
    entry = sample(ensemble, seed)
    rep = replay(entry, schedule)
    failures = []
    if rep.observed_history != entry.history:
        failures.append(f"replay: drew {entry.history}, observed {rep.observed_history}")
    if not rep.max_leakage < TOL:
        failures.append(f"replay: leakage {rep.max_leakage:.3e} >= {TOL:g}")
    result = {
        "drawn_history": list(entry.history.bits),
        "weight": entry.weight,
        "initial_state": _pairs(entry.initial_state.amplitudes),
        "observed_history": list(rep.observed_history.bits),
        "per_event_leakage": list(rep.per_event_leakage),
        "max_leakage": rep.max_leakage,
    }
    return envelope("sample-replay", seed, schedule, result, failures), EXIT_FAIL if failures else EXIT_OK


def _load_valid(path, need_state: bool) -> EventSchedule:
    try:
        schedule = load_schedule(path)
    except (OSError, ConfigError) as exc:
        raise InputError(str(exc)) from None
    if schedule.violations:
        raise InputError("validation rejected the schedule: " + "; ".join(schedule.violations))
    if need_state and schedule.initial_state is None:
        raise InputError(f"{path}: schedule has no initial_state")
    return schedule


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def bell_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([repr(r.theta), r.n, repr(r.estimate), repr(r.stderr), repr(r.exact), r.seed])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="branchsim", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default=0):
        sp.add_argument("--out", help="write the result here instead of stdout")
        sp.add_argument("--seed", type=u64, default=seed_default)

    sp = sub.add_parser("toy", help="spin toy model: branches, ensemble, replays")
    common(sp)
    sp.add_argument("--format", choices=["json"], default="json")

    sp = sub.add_parser("bell", help="sampled and exact Bell correlations")
    common(sp)
    sp.add_argument("--theta", type=parse_angles, default=parse_angles("0,pi/6,pi/4,pi/3,pi/2,2pi/3,pi"),
                    help="comma-separated angles, e.g. 0,pi/3,1.2")
    sp.add_argument("--n", type=int, default=100_000, help="subsystems (draws) per angle")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")

    sp = sub.add_parser("verify-born", help="Born equivalence on random schedules")
    common(sp)
    sp.add_argument("--qubits", type=int, default=4)
    sp.add_argument("--events", type=int, default=2)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--config", help="verify this schedule instead of random ones")
    sp.add_argument("--format", choices=["json"], default="json")

    sp = sub.add_parser("decompose", help="branch table and ensemble dump for a schedule file")
    common(sp)
    sp.add_argument("--config", required=True)
    sp.add_argument("--no-amplitudes", action="store_true", help="omit initial-state amplitudes")
    sp.add_argument("--format", choices=["json"], default="json")

    sp = sub.add_parser("sample-replay", help="draw one ensemble member and replay it")
    common(sp)
    sp.add_argument("--config", help="schedule file (default: the toy model)")
    sp.add_argument("--format", choices=["json"], default="json")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = _dispatch(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


def _dispatch(args) -> int:
    if args.command == "toy":
        report, code = run_toy(args.seed)
        _write(_json(report), args.out)

    elif args.command == "decompose":
        report, code = run_decompose(args.config, args.seed, amplitudes=not args.no_amplitudes)
        _write(_json(report), args.out)

    elif args.command == "bell":
        if args.n < 1:
            raise InputError("--n must be at least 1")
        rows, failures = run_bell(args.theta, args.n, args.seed, args.workers)
        if args.format == "csv":
            _write(bell_csv(rows), args.out)
        else:
            result = {"rows": [dict(zip(CSV_COLUMNS, (r.theta, r.n, r.estimate, r.stderr, r.exact, r.seed))) for r in rows]}
            _write(_json(envelope("bell", args.seed, None, result, failures)), args.out)
        for f in failures:
            print(f"FAIL {f}", file=sys.stderr)
        code = EXIT_FAIL if failures else EXIT_OK

    elif args.command == "verify-born":
        if args.config:
            schedule = _load_valid(args.config, need_state=True)
            devs = verify_schedule(schedule)
            failures = [name for name in PROPERTIES if not devs[name] < TOL]
            report = envelope("verify-born", args.seed, schedule, {"max_deviation": devs}, failures)
            code, counterexample = (EXIT_FAIL if failures else EXIT_OK), None
        else:
            try:
                report, code, counterexample = run_verify_born(args.qubits, args.events, args.trials, args.seed)
            except ValueError as exc:
                raise InputError(str(exc)) from None
        _write(_json(report), args.out)
        if counterexample is not None:
            path = Path(args.out).with_suffix(".counterexample.yaml") if args.out else Path("counterexample.yaml")
            dump_schedule(counterexample, path)
            print(f"counterexample schedule written to {path}", file=sys.stderr)

    elif args.command == "sample-replay":
        schedule = _load_valid(args.config, need_state=True) if args.config else build_toy()[1]
        try:
            report, code = run_sample_replay(schedule, args.seed)
        except ScheduleError as exc:
            raise InputError(str(exc)) from None
        _write(_json(report), args.out)

    else:  # pragma: no cover - argparse enforces the choices
        raise InputError(f"unknown command {args.command}")
    return code


if __name__ == "__main__":
    sys.exit(main())
