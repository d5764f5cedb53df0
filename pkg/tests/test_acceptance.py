"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line and enforcing its stated time budget.

Run with  pytest tests/test_acceptance.py -v -s
"""

import json
import os
import threading
import time
import urllib.request
from itertools import permutations

import pytest

from conftest import factorial_with, load, net_path
from netgen import random_spec
from oracle import engine_step_descs, oracle_step_descs
from test_model import KILL_SUITE
from nestpn.explore import (
    AT_DEAD, BOUND_EXCEEDED, COUNTER_EXAMPLE, HOLDS,
    ExploreLimits, check_predicate, explore, find_lasso,
)
from nestpn.model import validate
from nestpn.promela import ALL_OPTIMIZATIONS, CodegenOptions, translate
from nestpn.semantics import (
    apply_step, check_marking, enabled_steps, initial_marking, render_marking,
)
from nestpn.spinrun import crosscheck, spin_available


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.monotonic()
        return self

    def __exit__(self, exc_type, *rest):
        took = time.monotonic() - self.t0
        status = "PASS" if exc_type is None and took < self.seconds else "FAIL"
        print(f"[{status}] {self.name} ({took:.2f}s / {self.seconds:.0f}s budget)")
        if exc_type is None:
            assert took < self.seconds, f"{self.name} exceeded its time budget"


def fire(spec, m, names):
    want = sorted(names)
    hits = [s for s in enabled_steps(spec, m) if sorted(s.transition_names()) == want]
    assert len(hits) == 1
    return apply_step(spec, m, hits[0])


def test_criterion_1_example2_replay():
    with Budget("criterion 1: Example-2 replay", 1.0):
        spec = load("factorial")
        main_sequence = [
            (["t1"], "<p1:4,p2:0,p3:{(F,<p6:1,p7:{},p8:0>)},p4:0,p5:0>"),
            (["t4"], "<p1:3,p2:0,p3:{(F,<p6:0,p7:{(F,<p6:1,p7:{},p8:0>)},p8:0>)},p4:0,p5:0>"),
            (["t3", "t5"], "<p1:3,p2:0,p3:{(F,<p6:0,p7:{},p8:1>)},p4:0,p5:1>"),
            (["t6", "t2"], "<p1:3,p2:0,p3:{},p4:1,p5:2>"),
        ]
        m = initial_marking(spec)
        assert render_marking(spec, m) == "<p1:4,p2:1,p3:{},p4:0,p5:0>"
        for names, expected in main_sequence:
            m = fire(spec, m, names)
            assert render_marking(spec, m) == expected
        assert enabled_steps(spec, m) == []
        alt = fire(spec, fire(spec, initial_marking(spec), ["t1"]), ["t3", "t2"])
        assert render_marking(spec, alt) == "<p1:4,p2:0,p3:{},p4:1,p5:1>"


def test_criterion_2_dead_marking_law():
    with Budget("criterion 2: factorial dead-marking law a=0..6", 5.0):
        for a in range(0, 7):
            spec = factorial_with(a)
            graph = explore(spec)
            assert graph.complete, a
            assert find_lasso(graph) is None, a
            got = {render_marking(spec, m) for m in graph.dead_markings()}
            want = {
                f"<p1:{a - b},p2:0,p3:{{}},p4:1,p5:{b + 1}>" for b in range(a + 1)
            }
            assert got == want, a
            assert len(got) == a + 1


def test_criterion_3_nontermination_witness():
    with Budget("criterion 3: non-termination detection", 1.0):
        spec = load("factorial_unbounded")
        from nestpn.explore import check_termination

        verdict = check_termination(spec, ExploreLimits(max_net_tokens=8))
        assert verdict.kind == BOUND_EXCEEDED
        names = [s.transition_names() for s in verdict.trace]
        assert names[0] == ["t1"]
        assert len(names) > 1 and all(n == ["t4"] for n in names[1:])


def test_criterion_4_validator_kill_suite():
    with Budget("criterion 4: validator kill-suite", 5.0):
        assert len(KILL_SUITE) >= 7
        covered = set()
        for net, mutate, code in KILL_SUITE:
            spec = mutate(load(net))
            diags = validate(spec)
            assert diags, f"{mutate.__name__} went undetected"
            assert {d.code for d in diags} == {code}, mutate.__name__
            covered.add(code)
        assert {"cond-8a", "cond-8b", "cond-8c", "cond-8d", "cond-8e",
                "cond-6", "cond-7"} <= covered


def test_criterion_5_semantics_property_suite():
    import random

    with Budget("criterion 5: 200-net semantics property suite", 60.0):
        def all_tokens(marking):
            total = 0
            for toks in marking.places:
                for t in toks:
                    total += 1
                    if not isinstance(t, str):
                        total += all_tokens(t.marking)
            return total

        rng = random.Random(2024)
        nets = 0
        while nets < 200:
            spec = random_spec(rng)
            m = initial_marking(spec)
            if all_tokens(m) > 12 or len(spec.components) > 4:
                continue
            nets += 1
            for depth in range(3):
                assert oracle_step_descs(spec, m) == engine_step_descs(spec, m)
                steps = enabled_steps(spec, m)
                if not steps:
                    break
                for s in steps:
                    movable = len(s.firings) - (1 if s.kind == "vertical" else 0)
                    if s.kind in ("vertical", "horizontal") and 2 <= movable <= 4:
                        base = apply_step(spec, m, s).key
                        for order in permutations(range(movable)):
                            assert apply_step(spec, m, s, order=list(order)).key == base
                m = apply_step(spec, m, steps[rng.randrange(len(steps))])
                assert check_marking(spec, m) == []


def test_criterion_6_multi_agent_scenarios():
    with Budget("criterion 6: multi-agent soundness scenarios", 30.0):
        assert load("agents3").label("c").arity == 3
        assert load("agents2").label("c").arity == 2
        assert check_predicate(load("agents3"), None, AT_DEAD, "Results==3").kind == HOLDS
        assert check_predicate(load("agents2"), None, AT_DEAD, "Results==2").kind == HOLDS
        unsound = load("agents3_unsound")
        verdict = check_predicate(unsound, None, AT_DEAD, "Results==3")
        assert verdict.kind == COUNTER_EXAMPLE
        m = initial_marking(unsound)
        for step in verdict.trace:
            live = {s.skey: s for s in enabled_steps(unsound, m)}
            assert step.skey in live
            m = apply_step(unsound, m, live[step.skey])
        assert enabled_steps(unsound, m) == []


def test_criterion_7_codegen_determinism_and_goldens():
    with Budget("criterion 7: codegen determinism and goldens", 60.0):
        goldens = os.path.join(os.path.dirname(__file__), "goldens")
        for net in ("factorial", "factorial_unbounded", "pingpong",
                    "agents3", "agents2", "agents3_unsound"):
            spec = load(net)
            for variant in ("priorities", "no-priorities", "improved"):
                options = CodegenOptions(variant=variant, optimizations=ALL_OPTIMIZATIONS)
                one = translate(spec, options).source
                two = translate(spec, options).source
                assert one == two, (net, variant)
                with open(os.path.join(goldens, f"{net}--{variant}.pml")) as fh:
                    assert one == fh.read(), (net, variant)
        src = translate(
            load("factorial"),
            CodegenOptions(variant="priorities", optimizations=ALL_OPTIMIZATIONS),
        ).source
        assert "p6 > 0 && p1 > 0" in src
        assert "!pc ?? [eval(_pid),1,3,0]" in src


@pytest.mark.skipif(not spin_available(), reason="no spin binary on PATH")
def test_criterion_8_spin_crosscheck():
    with Budget("criterion 8: SPIN crosscheck", 300.0):
        for a in (1, 2, 3, 4):
            report = crosscheck(factorial_with(a))
            assert report.agree, f"factorial a={a}:\n{report}"
        for net in ("agents2", "agents3", "agents3_unsound"):
            report = crosscheck(load(net))
            assert report.agree, f"{net}:\n{report}"
        report = crosscheck(load("factorial"), optimizations=ALL_OPTIMIZATIONS)
        assert report.agree, f"optimized factorial:\n{report}"


def test_criterion_9_ui_session_equivalence(tmp_path):
    with Budget("criterion 9: serve-API session equivalence", 30.0):
        from nestpn.cli import main
        from nestpn.serve import make_server

        spec = load("factorial")
        httpd = make_server(spec, 0)
        port = httpd.server_address[1]
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{port}"
        try:
            for want in (["t1"], ["t4"], ["t3", "t5"], ["t2", "t6"]):
                with urllib.request.urlopen(base + "/steps") as resp:
                    steps = json.loads(resp.read())["steps"]
                match = [
                    s for s in steps
                    if sorted(f["transition"] for f in s["firings"]) == sorted(want)
                ]
                assert len(match) == 1
                req = urllib.request.Request(
                    base + "/fire",
                    data=json.dumps({"stepId": match[0]["id"]}).encode(),
                    method="POST",
                )
                urllib.request.urlopen(req).read()
            with urllib.request.urlopen(base + "/trace") as resp:
                api_text = json.dumps(json.loads(resp.read()), indent=2) + "\n"
        finally:
            httpd.shutdown()
            httpd.server_close()

        out = tmp_path / "cli.json"
        assert main(["simulate", net_path("factorial"),
                     "--script", "t1,t4,t3|t5,t2|t6", "-o", str(out)]) == 0
        assert api_text == out.read_text()
