from __future__ import annotations

import json
import os
import stat

import pytest

from robocomm.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main


def test_simulate_both(tmp_path, capsys):
    assert main(["simulate", "--runs", "2", "--steps", "5", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "metrics_baseline.csv").exists() and (tmp_path / "metrics_robocomm.csv").exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["runs"] == 2
    assert "deliveries robocomm >= baseline" in capsys.readouterr().out


def test_simulate_same_seed_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", "--mode", "robocomm", "--runs", "2", "--seed", "7", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "metrics_robocomm.csv").read_bytes() == (tmp_path / "b" / "metrics_robocomm.csv").read_bytes()


def test_simulate_config_errors(tmp_path):
    assert main(["simulate", "--runs", "0", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["simulate", "--set", "colour=red", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_simulate_config_file(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("# small run\nruns = 1\nsteps = 4\nn_robots = 3\n")
    assert main(["simulate", "--mode", "baseline", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "metrics_baseline.csv").read_text().splitlines()
    assert len(lines) == 1 + 4


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("ROBOCOMM_SEED", "not-a-number")
    assert main(["simulate", "--runs", "1", "--steps", "1", "--out", str(tmp_path)]) == EXIT_USAGE


def test_bench_single_iteration(capsys):
    assert main(["bench", "--iterations", "1", "--format", "json"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert [t["name"] for t in report["timings"]] == ["TxSign", "TxVerify", "DidDocGen"]
    assert all(t["std_ms"] == 0.0 for t in report["timings"])
    assert {s["name"] for s in report["sizes"]} == {"DidDocument", "SignedOffChainTx"}


def test_bench_rejects_zero_iterations():
    assert main(["bench", "--iterations", "0"]) == EXIT_USAGE


@pytest.mark.parametrize("scenario", ["honest", "buyer-withholds", "seller-stale-close", "peer-offline"])
def test_demo_trade(scenario, capsys):
    assert main(["demo-trade", scenario]) == EXIT_OK
    assert "balances match expected: yes" in capsys.readouterr().out


def test_demo_trade_errors():
    assert main(["demo-trade", "bribery"]) == EXIT_USAGE
    assert main(["demo-trade", "honest", "--units", "9"]) == EXIT_RUNTIME


def test_keygen(tmp_path, capsys):
    assert main(["keygen", "--out", str(tmp_path), "--seed", "r1"]) == EXIT_OK
    did = (tmp_path / "robot.did").read_text().strip()
    assert did.startswith("did:robo:0x")
    assert stat.S_IMODE(os.stat(tmp_path / "robot.key").st_mode) == 0o600
    assert json.loads((tmp_path / "robot.did.json").read_text())["id"] == did
    # existing files are kept without --force
    assert main(["keygen", "--out", str(tmp_path), "--seed", "r1"]) == EXIT_RUNTIME
    assert main(["keygen", "--out", str(tmp_path), "--seed", "r1", "--force"]) == EXIT_OK
    assert (tmp_path / "robot.did").read_text().strip() == did


def test_keygen_random_differs(tmp_path):
    main(["keygen", "--out", str(tmp_path / "a")])
    main(["keygen", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "robot.did").read_text() != (tmp_path / "b" / "robot.did").read_text()


def test_unknown_flag_and_missing_command():
    assert main(["simulate", "--bogus"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
