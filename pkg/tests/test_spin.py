"""Verifier harness: output parsing and trail lifting are testable offline;
everything that needs the external binary is skipped when it is absent."""

import pytest

from conftest import load
from nestpn.explore import explore
from nestpn.promela import ALL_OPTIMIZATIONS, CodegenOptions, translate
from nestpn.semantics import apply_step, initial_marking, render_marking
from nestpn.spinrun import (
    ACCEPTANCE_CYCLE,
    INVALID_END_STATE,
    NO_ERRORS,
    TOOL_ERROR,
    crosscheck,
    lift_markers,
    parse_pan_output,
    run_verification,
    spin_available,
    system_valuation,
)

needs_spin = pytest.mark.skipif(not spin_available(), reason="no spin binary on PATH")


CLEAN_RUN = """
(Spin Version 6.5.2 -- 6 December 2019)
\t+ Partial Order Reduction

State-vector 100 byte, depth reached 42, errors: 0
      120 states, stored
       40 states, matched

Stats on memory usage (in Megabytes):
  128.730\ttotal actual memory usage

unreached in proctype EN_F
\tmodel.pml:42, state 37, "-end-"
\t(1 of 37 states)
unreached in init
\t(0 of 20 states)
"""

BAD_END = """
pan:1: invalid end state (at depth 12)
pan: wrote model.pml.trail
State-vector 96 byte, depth reached 18, errors: 1
       55 states, stored
"""

CYCLE = """
pan:1: acceptance cycle (at depth 9)
pan: wrote model.pml.trail
State-vector 80 byte, depth reached 14, errors: 1
"""

ASSERT = """
pan:1: assertion violated (p5<=3) (at depth 7)
pan: wrote model.pml.trail
State-vector 80 byte, depth reached 9, errors: 1
"""

GARBAGE = "sh: ./pan: segmentation fault"


def test_parse_clean_run():
    rep = parse_pan_output(CLEAN_RUN)
    assert rep.outcome == NO_ERRORS
    assert rep.states_stored == 120
    assert rep.memory_mb == 128.730
    assert any("state 37" in u for u in rep.unreached)


def test_parse_violations():
    assert parse_pan_output(BAD_END).outcome == INVALID_END_STATE
    assert parse_pan_output(BAD_END).states_stored == 55
    assert parse_pan_output(CYCLE).outcome == ACCEPTANCE_CYCLE
    assert parse_pan_output(ASSERT).outcome == "AssertionViolation"


def test_parse_garbage_is_tool_error():
    assert parse_pan_output(GARBAGE).outcome == TOOL_ERROR


# --- trail lifting (no binary needed) -----------------------------------------


def test_lift_example2_markers(factorial):
    markers = [
        ("SN", "t1"),
        ("F", "t4"),
        ("F", "t5"), ("F", "t3"),
        ("SN", "t2"), ("F", "t6"),
    ]
    steps = lift_markers(factorial, markers)
    assert [sorted(s.transition_names()) for s in steps] == [
        ["t1"], ["t4"], ["t3", "t5"], ["t2", "t6"],
    ]
    m = initial_marking(factorial)
    for s in steps:
        m = apply_step(factorial, m, s)
    assert render_marking(factorial, m) == "<p1:3,p2:0,p3:{},p4:1,p5:2>"


def test_lift_recursive_witness(factorial_unbounded):
    markers = [("SN", "t1")] + [("F", "t4")] * 4
    steps = lift_markers(factorial_unbounded, markers)
    assert len(steps) == 5
    assert steps[0].transition_names() == ["t1"]
    assert all(s.transition_names() == ["t4"] for s in steps[1:])


def test_lift_tolerates_truncated_tail(factorial):
    # a trail that stops mid-step still lifts the replayable prefix
    markers = [("SN", "t1"), ("F", "t4"), ("F", "t5")]
    steps = lift_markers(factorial, markers)
    assert [s.transition_names() for s in steps][:2] == [["t1"], ["t4"]]


def test_native_valuation_counts_pending_requests(agents3_unsound):
    g = explore(agents3_unsound)
    dead = g.dead_markings()
    vals = [system_valuation(agents3_unsound, m) for m in dead]
    assert all(v["Results"] == 2 for v in vals)
    # the stuck agent sits at L2 with its collaboration request pending:
    # one at-place message plus one request = channel length 2
    assert all(v["L2"] == 2 for v in vals)
    assert all(v["Home"] == 2 for v in vals)


# --- binary-gated end-to-end runs ----------------------------------------------


@needs_spin
def test_factorial_safety_clean(factorial):
    model = translate(factorial, CodegenOptions())
    rep = run_verification(factorial, model)
    assert rep.outcome == NO_ERRORS


@needs_spin
def test_unbounded_factorial_reports_invalid_end(factorial_unbounded):
    model = translate(factorial_unbounded, CodegenOptions())
    rep = run_verification(factorial_unbounded, model)
    assert rep.outcome == INVALID_END_STATE
    names = [t for _, t in rep.trail_markers]
    assert names[0] == "t1" and "t4" in names


@needs_spin
def test_garbage_model_is_tool_error(factorial):
    model = translate(factorial, CodegenOptions())
    model.source = "this is not promela {"
    rep = run_verification(factorial, model)
    assert rep.outcome == TOOL_ERROR


@needs_spin
@pytest.mark.parametrize("net", ["factorial", "agents2", "agents3", "agents3_unsound"])
def test_crosscheck_all_variants(net):
    spec = load(net)
    report = crosscheck(spec)
    assert report.agree, f"\n{report}"


@needs_spin
def test_crosscheck_with_optimizations(factorial):
    report = crosscheck(factorial, optimizations=ALL_OPTIMIZATIONS)
    assert report.agree, f"\n{report}"


@needs_spin
def test_crosscheck_detects_broken_codegen(agents3_unsound, monkeypatch):
    # dropping the request-cleanup code must surface as a disagreement
    import nestpn.promela as promela

    monkeypatch.setattr(promela._Emitter, "rm_confs", lambda self, t, chan: [])
    report = crosscheck(agents3_unsound, variants=("priorities",))
    assert not report.agree


@needs_spin
@pytest.mark.parametrize("net", ["factorial", "factorial_unbounded", "pingpong",
                                 "agents3", "agents2", "agents3_unsound"])
@pytest.mark.parametrize("variant", ["priorities", "no-priorities", "improved"])
def test_spin_accepts_every_generated_model(net, variant, tmp_path):
    # the parse step alone: spin -a must take every net x variant, plus the
    # fully optimized and property-annotated forms
    import subprocess
    from nestpn.spinrun import find_spin

    spec = load(net)
    spin = find_spin()
    sources = [
        translate(spec, CodegenOptions(variant=variant)).source,
        translate(spec, CodegenOptions(variant=variant,
                                       optimizations=ALL_OPTIMIZATIONS)).source,
        translate(spec, CodegenOptions(variant=variant, dead_dump=True,
                                       acceptance_label=True)).source,
    ]
    for i, source in enumerate(sources):
        pml = tmp_path / f"m{i}.pml"
        pml.write_text(source)
        proc = subprocess.run([spin, "-a", pml.name], cwd=tmp_path,
                              capture_output=True, text=True, timeout=60)
        out = proc.stdout + proc.stderr
        assert proc.returncode == 0 and "Error" not in out, (net, variant, i, out)
