"""CLI behaviour: exit codes, JSON output, reproducibility."""

import json

from conftest import net_path
from nestpn.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_valid(capsys):
    code, out, err = run(capsys, "parse", net_path("factorial"))
    assert code == 0 and "valid" in out


def test_parse_missing_file(capsys):
    code, out, err = run(capsys, "parse", "/no/such/file.npn")
    assert code == 2 and "error" in err


def test_parse_invalid_net(tmp_path, capsys):
    bad = tmp_path / "bad.npn"
    bad.write_text('npn "b" { component SN system { place p: dots; '
                   "trans t label nope { in p: 1; } } }")
    code, out, err = run(capsys, "parse", str(bad))
    assert code == 2 and "unknown label" in err


def test_check_termination_factorial(capsys):
    code, out, _ = run(capsys, "check", "termination", net_path("factorial"))
    assert code == 0 and "Terminating" in out


def test_check_termination_pingpong(capsys):
    code, out, _ = run(capsys, "check", "termination", net_path("pingpong"))
    assert code == 1 and "InfiniteRun" in out


def test_check_bounded(capsys):
    code, out, _ = run(capsys, "check", "bounded", net_path("factorial"),
                       "--bound", "p5=5")
    assert code == 0 and "Bounded" in out
    code, out, _ = run(capsys, "check", "bounded", net_path("factorial"),
                       "--bound", "p5=3")
    assert code == 1 and "CounterExample" in out


def test_check_predicate_json(capsys):
    code, out, _ = run(
        capsys, "check", "predicate", net_path("agents3_unsound"),
        "--mode", "AtDead", "--pred", "Results==3", "--json",
    )
    assert code == 1
    payload = json.loads(out)
    assert payload["verdict"] == "CounterExample"
    assert payload["trace"]["steps"]


def test_empty_script_prints_initial_only(capsys):
    code, out, _ = run(capsys, "simulate", net_path("factorial"), "--script", "")
    assert code == 0
    assert out.strip() == "<p1:4,p2:1,p3:{},p4:0,p5:0>"


def test_script_replay(capsys):
    code, out, _ = run(capsys, "simulate", net_path("factorial"),
                       "--script", "t1,t4,t3|t5,t2|t6")
    assert code == 0
    assert out.strip().endswith("<p1:3,p2:0,p3:{},p4:1,p5:2>")


def test_script_rejects_disabled_step(capsys):
    code, out, err = run(capsys, "simulate", net_path("factorial"), "--script", "t4")
    assert code == 2 and "not enabled" in err


def test_random_simulation_reproducible(capsys):
    a = run(capsys, "simulate", net_path("agents3"), "--steps", "50", "--seed", "7")
    b = run(capsys, "simulate", net_path("agents3"), "--steps", "50", "--seed", "7")
    assert a == b and a[0] == 0


def test_simulate_trace_export(tmp_path, capsys):
    out_file = tmp_path / "trace.json"
    code, _, _ = run(capsys, "simulate", net_path("factorial"),
                     "--script", "t1,t3|t2", "-o", str(out_file))
    assert code == 0
    trace = json.loads(out_file.read_text())
    assert trace["initial"]["p1"] == 4
    assert len(trace["steps"]) == 2
    assert trace["steps"][-1]["result"]["p4"] == 1


def test_explore_json(capsys):
    code, out, _ = run(capsys, "explore", net_path("factorial"), "--json")
    assert code == 0
    graph = json.loads(out)
    assert len(graph["nodes"]) == 21
    assert len(graph["edges"]) == 20
    assert sum(1 for n in graph["nodes"] if n["dead"]) == 5


def test_explore_truncation_exit(capsys):
    code, out, _ = run(capsys, "explore", net_path("factorial_unbounded"),
                       "--max-net-tokens", "5")
    assert code == 1 and "truncated" in out


def test_translate_stdout_and_file(tmp_path, capsys):
    code, out, _ = run(capsys, "translate", net_path("factorial"),
                       "--variant", "no-priorities")
    assert code == 0 and "proctype EN_F()" in out
    target = tmp_path / "f.pml"
    code, out, _ = run(capsys, "translate", net_path("factorial"),
                       "--variant", "no-priorities", "-o", str(target))
    assert code == 0 and target.exists()


def test_translate_bad_opt(capsys):
    code, _, err = run(capsys, "translate", net_path("factorial"), "--opt", "warp")
    assert code == 2 and "unknown optimization" in err


def test_translate_with_properties(tmp_path, capsys):
    target = tmp_path / "f.pml"
    code, _, _ = run(
        capsys, "translate", net_path("factorial"), "-o", str(target),
        "--ltl", "<>[](p4==1)", "--counters", "p1", "--bound", "p5=5",
        "--acceptance",
    )
    assert code == 0
    src = target.read_text()
    assert "ltl req" in src and "byte f;" in src and "assert(p5 <= 5);" in src


def test_verify_without_spin(capsys, monkeypatch):
    monkeypatch.setenv("PATH", "/nonexistent")
    monkeypatch.delenv("NESTPN_SPIN", raising=False)
    code, _, err = run(capsys, "verify", net_path("factorial"))
    assert code == 2 and "spin" in err.lower()
