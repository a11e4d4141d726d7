import csv
import io
import json
import math
from pathlib import Path

import pytest

from branchsim import cli
from branchsim.cli import main, parse_angle, run_decompose, run_toy

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def payload(text):
    d = json.loads(text)
    d.pop("metadata")
    return d


@pytest.mark.parametrize(
    "text, value",
    [("0", 0.0), ("pi", math.pi), ("pi/3", math.pi / 3), ("2pi/3", 2 * math.pi / 3),
     ("2*pi/3", 2 * math.pi / 3), ("-pi/4", -math.pi / 4), ("0.25", 0.25)],
)
def test_parse_angle(text, value):
    assert abs(parse_angle(text) - value) < 1e-15


def test_toy_command(capsys):
    code, out, _ = run(capsys, "toy", "--seed", "5")
    assert code == 0
    d = json.loads(out)
    assert d["ok"] and d["seed"] == 5
    assert [b["weight"] for b in d["result"]["branches"]] == pytest.approx([0.5, 0.5], abs=1e-10)
    assert [r["observed"] for r in d["result"]["replays"]] == [[0, 1, 0, 1], [0, 1, 1, 0]]
    assert max(r["max_leakage"] for r in d["result"]["replays"]) < 1e-10
    assert len(d["result"]["ensemble"][0]["amplitudes"]) == 32
    assert set(d["tolerances"]) == {"norm", "unitary", "property"}
    assert len(d["schedule_hash"]) == 64


def test_toy_output_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["toy", "--out", str(a)]) == 0
    assert main(["toy", "--out", str(b)]) == 0
    assert json.dumps(payload(a.read_text()), sort_keys=True) == json.dumps(payload(b.read_text()), sort_keys=True)


def test_decompose_toy_file_matches_toy():
    toy, _ = run_toy()
    dec, code = run_decompose(CONFIGS / "toy.yaml")
    assert code == 0
    assert dec["result"] == toy["result"]
    assert dec["schedule_hash"] == toy["schedule_hash"]


def test_decompose_free_schedule(capsys):
    code, out, _ = run(capsys, "decompose", "--config", str(CONFIGS / "free.yaml"), "--no-amplitudes")
    assert code == 0
    branches = json.loads(out)["result"]["branches"]
    assert len(branches) == 1
    assert branches[0]["history"] == [] and abs(branches[0]["weight"] - 1) < 1e-12


def test_decompose_malformed_matrix(capsys, tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text(
        "n_qubits: 2\nrecord_qubits: {1: 1.0}\nhorizon: 2\nevents:\n"
        "  - time: 1\n    matrix: [[[1,0],[0,0]],[[0,0]]]\n    targets: [0]\n    record: [1]\n"
    )
    code, _, err = run(capsys, "decompose", "--config", str(p))
    assert code == 2
    assert "event 0" in err


def test_bell_zero_angle(capsys):
    code, out, _ = run(capsys, "bell", "--theta", "0", "--n", "1000", "--seed", "1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["theta", "n", "estimate", "stderr", "exact", "seed"]
    assert float(rows[0]["estimate"]) == -1.0


def test_bell_pi(capsys):
    code, out, _ = run(capsys, "bell", "--theta", "pi", "--n", "333", "--seed", "2")
    assert code == 0
    assert float(next(csv.DictReader(io.StringIO(out)))["estimate"]) == 1.0


def test_bell_third_pi(capsys):
    code, out, _ = run(capsys, "bell", "--theta", "pi/3", "--n", "100000", "--seed", "3")
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert abs(float(row["estimate"]) + 0.5) <= 4 * float(row["stderr"])
    assert row["seed"] == "3"


def test_bell_json(capsys):
    code, out, _ = run(capsys, "bell", "--theta", "0,pi/2", "--n", "2000", "--format", "json", "--seed", "9")
    assert code == 0
    d = json.loads(out)
    assert d["seed"] == 9 and len(d["result"]["rows"]) == 2


def test_bell_failure_names_theta(capsys, monkeypatch):
    from branchsim.experiments import CorrelationResult

    def off(config, workers=1):
        return CorrelationResult(config.theta, 0.9, 0.001, -math.cos(config.theta), config.n_subsystems, config.seed, 0.001)

    monkeypatch.setattr(cli, "bell_correlation", off)
    code, _, err = run(capsys, "bell", "--theta", "0.5", "--n", "10")
    assert code == 1
    assert "theta=0.5" in err


def test_verify_born_random(capsys):
    code, out, _ = run(capsys, "verify-born", "--qubits", "4", "--events", "2", "--trials", "100", "--seed", "11")
    assert code == 0
    devs = json.loads(out)["result"]["max_deviation"]
    for name in ("born_agreement", "annihilation", "completeness", "path_equivalence"):
        assert devs[name] < 1e-10


def test_verify_born_zero_events(capsys):
    code, out, _ = run(capsys, "verify-born", "--qubits", "2", "--events", "0", "--trials", "1")
    assert code == 0


def test_verify_born_rejects_overlapping_records(capsys, tmp_path):
    p = tmp_path / "corrupt.yaml"
    p.write_text((CONFIGS / "toy.yaml").read_text().replace("record: [3, 4]", "record: [2, 3]").replace(
        "targets: [0, 3, 4]", "targets: [0, 2, 3]"))
    code, _, err = run(capsys, "verify-born", "--config", str(p))
    assert code == 2
    assert "validation rejected" in err and "not disjoint" in err


def test_verify_born_counterexample_written(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "verify_schedule", lambda s: {name: 1.0 for name in cli.PROPERTIES})
    out = tmp_path / "report.json"
    code = main(["verify-born", "--trials", "2", "--out", str(out)])
    assert code == 1
    ce = out.with_suffix(".counterexample.yaml")
    assert ce.exists()
    from branchsim.config import load_schedule

    assert load_schedule(ce).violations == []


def test_verify_born_bad_sizes(capsys):
    code, _, err = run(capsys, "verify-born", "--qubits", "9", "--events", "1", "--trials", "1")
    assert code == 2


def test_sample_replay(capsys):
    code, out, _ = run(capsys, "sample-replay", "--seed", "42")
    assert code == 0
    d = json.loads(out)["result"]
    assert d["drawn_history"] == d["observed_history"]
    assert d["max_leakage"] < 1e-10
    code2, out2, _ = run(capsys, "sample-replay", "--seed", "42")
    assert payload(out) == payload(out2)


def test_sample_replay_config(capsys):
    code, out, _ = run(capsys, "sample-replay", "--config", str(CONFIGS / "bell_pi_3.yaml"), "--seed", "7")
    assert code == 0


def test_missing_config_file(capsys):
    code, _, err = run(capsys, "decompose", "--config", "/nonexistent.yaml")
    assert code == 2
