import json
from pathlib import Path

import pytest

from rampsim.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INVARIANT, EXIT_OK, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_plan_worked_example(capsys):
    code, out, _ = run(capsys, "plan", "--op", "reduce-scatter", "--x", "3", "--J", "3", "--lambda", "6",
                       "--msg", "54")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 5
    assert [ln.split(",")[4] for ln in lines[1:]] == ["1/3", "1/9", "1/27", "1/54"]


def test_plan_json_and_detail(capsys):
    code, out, _ = run(capsys, "plan", "--op", "ag", "--msg", "54", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["op"] == "all-gather" and len(doc["steps"]) == 4
    code, out, _ = run(capsys, "plan", "--op", "ag", "--msg", "54", "--detail")
    assert code == 0 and out.strip()


def test_schedule(capsys):
    code, out, _ = run(capsys, "schedule", "--op", "a2a", "--msg", "2916")
    assert code == EXIT_OK and out.startswith("step,src,dst")


def test_verify_small_grid(capsys):
    code, out, _ = run(capsys, "verify", "--all", "--max-x", "2", "--baselines")
    assert code == EXIT_OK
    assert out.splitlines()[-1].startswith("# ")
    assert "FAIL" not in out


def test_estimate(capsys):
    code, out, _ = run(capsys, "estimate", "--system", "fat-tree", "--op", "ar", "--msg", "1MB",
                       "--workers", "256")
    assert code == 0
    head, row = out.splitlines()
    assert head.startswith("scenario,system,op") and ",256,1000000," in row


def test_estimate_steps_json(capsys):
    code, out, _ = run(capsys, "estimate", "--system", "torus", "--op", "rs", "--msg", "1MB",
                       "--workers", "64", "--steps", "--format", "json")
    assert code == 0 and json.loads(out)[0]["label"].startswith("rs")


def test_sweep_deterministic(capsys, tmp_path):
    args = ["sweep", "--op", "ar,rs", "--strategies", "ring,hier,ramp", "--msg", "1MB,10MB", "--n", "16..64"]
    c1, a, _ = run(capsys, *args)
    c2, b, _ = run(capsys, *args, "--jobs", "2")
    assert c1 == c2 == 0 and a == b
    assert len(a.splitlines()) == 1 + 2 * 3 * 2 * 3
    gold = tmp_path / "gold.csv"
    gold.write_text(a)
    assert run(capsys, *args, "--golden", str(gold))[0] == EXIT_OK
    gold.write_text(a.replace("ring", "rink", 1))
    code, _, err = run(capsys, *args, "--golden", str(gold))
    assert code == EXIT_INVARIANT and "differs" in err


def test_sweep_scenario_file(capsys):
    code, out, _ = run(capsys, "sweep", "--scenario", str(CONFIGS / "scenarios" / "matched-bandwidth.ini"),
                       "--msg", "100MB")
    assert code == 0
    systems = [ln.split(",")[1] for ln in out.splitlines()[1:]]
    assert systems == ["ramp-2.4T/ramp", "fat-tree-2.4T/ring", "fat-tree-2.4T/hier"]


def test_scenario_unknown_key(capsys, tmp_path):
    f = tmp_path / "s.ini"
    f.write_text("[scenario]\nop = all-reduce\nmessage = 1MB\n")
    code, _, err = run(capsys, "sweep", "--scenario", str(f))
    assert code == EXIT_CONFIG
    assert f"{f}:3:1: unknown key 'message'" in err


def test_unsupported_combination(capsys):
    code, _, err = run(capsys, "sweep", "--strategies", "torus", "--n", "32", "--msg", "1MB", "--op", "rs")
    assert code == 0
    code, _, err = run(capsys, "estimate", "--system", "torus", "--strategy", "hier", "--op", "rs",
                       "--msg", "1MB", "--workers", "16")
    assert code == EXIT_CONFIG and "unsupported" in err
    code, _, err = run(capsys, "plan", "--op", "allsum", "--msg", "1")
    assert code == EXIT_CONFIG


def test_unknown_system(capsys):
    code, _, err = run(capsys, "estimate", "--system", "mesh", "--op", "rs", "--msg", "1MB")
    assert code == EXIT_CONFIG and "unknown system" in err


def test_budget_exit_codes(capsys):
    assert run(capsys, "budget")[0] == EXIT_OK
    code, out, _ = run(capsys, "budget", "--drop", "2", "--format", "json")
    assert code == EXIT_INFEASIBLE and json.loads(out)["feasible"] is False
    code, _, _ = run(capsys, "budget", "--chain", str(CONFIGS / "chains" / "bs-no-rx-soa.ini"))
    assert code == EXIT_INFEASIBLE
    assert run(capsys, "budget", "--drop", "99")[0] == EXIT_CONFIG


def test_cost_power(capsys):
    code, out, _ = run(capsys, "cost", "--system", "hpc", "--format", "json")
    assert code == 0 and json.loads(out)["cost_per_gbps"] == "19.81"
    code, out, _ = run(capsys, "power", "--system", "ramp", "--format", "csv")
    assert code == 0 and "pj_per_bit_path,8.5-9.5" in out


def test_workload_file(capsys):
    code, out, _ = run(capsys, "workload", "--file", str(CONFIGS / "workloads" / "example.ini"),
                       "--system", "fat-tree")
    assert code == 0
    assert out.splitlines()[1].startswith("gpt-small,fat-tree,512,")


def test_config_dir_env(capsys, tmp_path, monkeypatch):
    (tmp_path / "systems.ini").write_text("[tiny]\nkind = ring\nnodes = 8\n")
    monkeypatch.setenv("RAMPSIM_CONFIG_DIR", str(tmp_path))
    code, out, _ = run(capsys, "estimate", "--system", "tiny", "--op", "ar", "--msg", "1MB")
    assert code == 0 and ",8,1000000," in out


def test_output_file(capsys, tmp_path):
    target = tmp_path / "sub" / "p.csv"
    assert run(capsys, "plan", "--op", "rs", "--msg", "54", "-o", str(target))[0] == 0
    assert target.read_text().startswith("pos,step")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["plan"])
    assert ei.value.code == 2
