"""State-space exploration, verdicts and predicates."""

import random

import pytest

from conftest import factorial_with, load
from netgen import random_spec
from oracle import oracle_dfs_explore
from nestpn import dsl
from nestpn.explore import (
    AG,
    AT_DEAD,
    BOUND_EXCEEDED,
    BOUNDED,
    COUNTER_EXAMPLE,
    EF,
    HOLDS,
    INFINITE_RUN,
    TERMINATING,
    ExploreLimits,
    StatePredicate,
    check_bounded,
    check_predicate,
    check_termination,
    explore,
    find_lasso,
)
from nestpn.semantics import apply_step, enabled_steps, initial_marking, render_marking


def replay(spec, trace, start=None):
    m = start if start is not None else initial_marking(spec)
    for step in trace:
        live = {s.skey: s for s in enabled_steps(spec, m)}
        assert step.skey in live, "trace step not enabled at replay point"
        m = apply_step(spec, m, live[step.skey])
    return m


# --- graphs -----------------------------------------------------------------


def test_factorial_a1_graph_matches_oracle():
    spec = factorial_with(1)
    g = explore(spec)
    assert g.complete
    assert g.node_count() == 6 and g.edge_count() == 5
    assert len(g.dead_markings()) == 2
    nodes, edges, dead = oracle_dfs_explore(spec)
    assert {m.key for m in g.markings} == nodes
    assert {(g.markings[a].key, s.skey, g.markings[b].key) for a, s, b in g.edges()} == edges
    assert {m.key for m in g.dead_markings()} == dead


def test_graph_oracle_equivalence_shipped_and_random():
    names = ["factorial", "pingpong", "agents3", "agents2", "agents3_unsound"]
    specs = [load(n) for n in names]
    rng = random.Random(71)
    specs += [random_spec(rng) for _ in range(20)]
    for spec in specs:
        g = explore(spec, ExploreLimits(max_states=1500, max_depth=40,
                                        max_net_tokens=16, max_tokens_per_place=24))
        if not g.complete:
            continue
        nodes, edges, dead = oracle_dfs_explore(spec)
        assert {m.key for m in g.markings} == nodes
        assert {(g.markings[a].key, s.skey, g.markings[b].key) for a, s, b in g.edges()} == edges


def test_single_dead_node():
    spec = dsl.parse('npn "x" { component SN system { place p: dots init 2; } }')
    g = explore(spec)
    assert g.node_count() == 1 and g.edge_count() == 0
    assert len(g.dead_markings()) == 1


def test_exploration_is_deterministic(agents3):
    g1, g2 = explore(agents3), explore(agents3)
    assert [m.key for m in g1.markings] == [m.key for m in g2.markings]
    assert [(a, s.skey, b) for a, s, b in g1.edges()] == [
        (a, s.skey, b) for a, s, b in g2.edges()
    ]


def test_truncation_witness_factorial_unbounded(factorial_unbounded):
    g = explore(factorial_unbounded, ExploreLimits(max_net_tokens=5))
    assert not g.complete
    tr = g.truncations[0]
    assert tr.limit == "max_net_tokens"
    names = ["|".join(s.transition_names()) for s in tr.trace]
    assert names == ["t1", "t4", "t4", "t4", "t4"]
    replay(factorial_unbounded, tr.trace)


def test_max_depth_truncates(pingpong):
    g = explore(pingpong, ExploreLimits(max_depth=1))
    assert not g.complete and g.truncations[0].limit == "max_depth"


def test_max_states_truncates():
    spec = factorial_with(4)
    g = explore(spec, ExploreLimits(max_states=3))
    assert not g.complete and g.truncations[0].limit == "max_states"
    assert g.node_count() == 3


# --- termination ----------------------------------------------------------------


def test_factorial_terminates(factorial):
    assert check_termination(factorial).kind == TERMINATING


def test_factorial_dead_marking_law():
    for a in range(0, 7):
        spec = factorial_with(a)
        g = explore(spec)
        assert g.complete and find_lasso(g) is None
        dead = g.dead_markings()
        got = {render_marking(spec, m) for m in dead}
        want = {
            f"<p1:{a - b},p2:0,p3:{{}},p4:1,p5:{b + 1}>" for b in range(a + 1)
        }
        assert got == want and len(dead) == a + 1


def test_unbounded_factorial_bound_exceeded(factorial_unbounded):
    v = check_termination(factorial_unbounded, ExploreLimits(max_net_tokens=8))
    assert v.kind == BOUND_EXCEEDED and v.limit == "max_net_tokens"
    names = [s.transition_names() for s in v.trace]
    assert names[0] == ["t1"] and all(n == ["t4"] for n in names[1:])


def test_pingpong_infinite_run(pingpong):
    v = check_termination(pingpong)
    assert v.kind == INFINITE_RUN
    assert len(v.cycle) == 2
    # the lasso replays: stem from the initial marking, cycle back to its start
    anchor = replay(pingpong, v.trace)
    back = replay(pingpong, v.cycle, start=anchor)
    assert back.key == anchor.key


# --- boundedness ------------------------------------------------------------------


def test_factorial_p5_bounds(factorial):
    assert check_bounded(factorial, None, "p5", 5).kind == BOUNDED
    v = check_bounded(factorial, None, "p5", 3)
    assert v.kind == COUNTER_EXAMPLE
    end = replay(factorial, v.trace)
    assert render_marking(factorial, end).count("p5:4") == 1


def test_bound_zero_on_marked_place(factorial):
    v = check_bounded(factorial, None, "p1", 0)
    assert v.kind == COUNTER_EXAMPLE and v.trace == ()


def test_bound_unknown_place(factorial):
    with pytest.raises(KeyError):
        check_bounded(factorial, None, "nope", 1)


def test_bound_exceeded_before_verdict(factorial_unbounded):
    v = check_bounded(factorial_unbounded, ExploreLimits(max_net_tokens=5), "p4", 99)
    assert v.kind == BOUND_EXCEEDED


# --- predicates --------------------------------------------------------------------


def test_paper_final_state_property(factorial):
    pred = "p4==1 && p2==0 && size(p3)==0 && p1==init(p1)-created+1 && p5==created"
    assert check_predicate(factorial, None, AT_DEAD, pred).kind == HOLDS


def test_ef_with_witness(factorial):
    v = check_predicate(factorial, None, EF, "p4==1")
    assert v.kind == HOLDS and len(v.trace) == 2
    end = replay(factorial, v.trace)
    assert "p4:1" in render_marking(factorial, end)


def test_ag_false_immediate_counterexample(factorial):
    v = check_predicate(factorial, None, AG, "false")
    assert v.kind == COUNTER_EXAMPLE and v.trace == ()


def test_ag_holds(factorial):
    assert check_predicate(factorial, None, AG, "p4 <= 1 && p2+p4 <= 1").kind == HOLDS


def test_atdead_inapplicable_on_cycles(pingpong):
    v = check_predicate(pingpong, None, AT_DEAD, "p==0")
    assert v.kind == BOUND_EXCEEDED and "cycle" in v.reason


def test_atdead_agents(agents3, agents2, agents3_unsound):
    assert check_predicate(agents3, None, AT_DEAD, "Results==3").kind == HOLDS
    assert check_predicate(agents2, None, AT_DEAD, "Results==2").kind == HOLDS
    v = check_predicate(agents3_unsound, None, AT_DEAD, "Results==3")
    assert v.kind == COUNTER_EXAMPLE
    end = replay(agents3_unsound, v.trace)
    assert enabled_steps(agents3_unsound, end) == []


def test_predicate_functions(agents3):
    g = explore(agents3)
    pred = StatePredicate("nets(Home)==3 && count(Results, dot) == Results")
    m = g.dead_markings()[0]
    assert pred.eval(agents3, m, init=g.markings[0], created=0)


def test_predicate_unknown_place(factorial):
    from nestpn.explore import PredicateError
    with pytest.raises(PredicateError):
        check_predicate(factorial, None, AG, "zz == 1")


def test_counterexample_traces_replay_everywhere(agents3_unsound, factorial):
    for spec, mode, pred in [
        (agents3_unsound, AT_DEAD, "Results==3"),
        (factorial, EF, "p5==3"),
    ]:
        v = check_predicate(spec, None, mode, pred)
        assert v.trace is not None
        replay(spec, v.trace)
