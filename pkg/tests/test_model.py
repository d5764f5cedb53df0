"""Well-formedness validation and static conflict sets."""

import random
from dataclasses import replace

import pytest

from conftest import load
from netgen import random_spec
from nestpn.model import ArcExpr, Const, NetConst, Var, conflict_set, validate


def swap_component(spec, comp):
    comps = tuple(comp if c.index == comp.index else c for c in spec.components)
    return replace(spec, components=comps)


def swap_transition(spec, cname, t):
    comp = spec.component(cname)
    trans = tuple(t if u.name == t.name else u for u in comp.transitions)
    return swap_component(spec, replace(comp, transitions=trans))


def get_trans(spec, cname, tname):
    return next(t for t in spec.component(cname).transitions if t.name == tname)


def test_shipped_nets_are_valid():
    for name in ("factorial", "factorial_unbounded", "pingpong",
                 "agents3", "agents2", "agents3_unsound"):
        assert validate(load(name)) == [], name


def test_empty_component_vacuously_valid(factorial):
    spec = load("pingpong")
    comp = spec.components[0]
    spec = swap_component(spec, replace(comp, transitions=()))
    assert validate(spec) == []


def test_validate_is_pure_and_stable(factorial):
    bad = swap_transition(
        factorial, "SN",
        replace(get_trans(factorial, "SN", "t2"),
                inputs=(("p3", ArcExpr((NetConst("F"),))),)),
    )
    first = validate(bad)
    assert first == validate(bad)


# one targeted mutation per condition; each must fire exactly its diagnostic
def _mut_8a(spec):
    t = get_trans(spec, "SN", "t2")
    return swap_transition(
        spec, "SN", replace(t, inputs=(("p3", ArcExpr((Var("x"), NetConst("F")))),))
    )


def _mut_8b_input(spec):
    t = get_trans(spec, "SN", "t2")
    return swap_transition(spec, "SN", replace(t, inputs=(("p3", ArcExpr((Var("x"), Var("x")))),)))


def _mut_8b_output(spec):
    t = get_trans(spec, "SN", "t2")
    out = (("p4", ArcExpr((Const("dot"),))), ("p3", ArcExpr((Var("x"), Var("x")))))
    return swap_transition(spec, "SN", replace(t, outputs=out))


def _mut_8c(spec):
    comp = spec.component("AgentX")
    t = next(u for u in comp.transitions if u.name == "tc")
    t = replace(t, inputs=(("p2", ArcExpr((Var("xx"),))), ("p3", ArcExpr((Var("xx"),)))))
    comp = replace(comp, variables=comp.variables + (("xx", "Task"),),
                   transitions=tuple(t if u.name == "tc" else u for u in comp.transitions))
    return swap_component(spec, comp)


def _mut_8d_free_output_var(spec):
    comp = spec.component("SN")
    t = next(u for u in comp.transitions if u.name == "t1")
    t = replace(t, outputs=t.outputs + (("p4", ArcExpr((Var("w"),))),))
    comp = replace(comp, variables=comp.variables + (("w", "dots"),),
                   transitions=tuple(t if u.name == "t1" else u for u in comp.transitions))
    return swap_component(spec, comp)


def _mut_8d_net_var_twice(spec):
    t = get_trans(spec, "SN", "couple")
    out = (("L2", ArcExpr((Var("x"), Var("y")))), ("Home", ArcExpr((Var("x"),))))
    return swap_transition(spec, "SN", replace(t, outputs=out))


def _mut_8e(spec):
    t = get_trans(spec, "SN", "t1")
    return swap_transition(spec, "SN", replace(t, outputs=(("p3", ArcExpr((Var("_1", anon=True),))),)))


def _mut_cond6(spec):
    t = get_trans(spec, "SN", "t1")
    return swap_transition(spec, "SN", replace(t, label="~lambda"))


def _mut_cond7_shared_input(spec):
    t = get_trans(spec, "F", "t3")
    return swap_transition(spec, "F", replace(t, inputs=t.inputs + (("p1", ArcExpr((Const("dot"),))),)))


def _mut_cond7_segment(spec):
    t = next(u for u in spec.component("AgentX").transitions if u.name == "te")
    return swap_transition(spec, "AgentX", replace(t, outputs=(("Results", ArcExpr((Const("dot"),))),)))


def _mut_lower_without_net(spec):
    t = get_trans(spec, "SN", "t2")
    return swap_transition(spec, "SN", replace(t, inputs=(("p2", ArcExpr((Const("dot"),))),)))


KILL_SUITE = [
    ("factorial", _mut_8a, "cond-8a"),
    ("factorial", _mut_8b_input, "cond-8b"),
    ("factorial", _mut_8b_output, "cond-8b"),
    ("agents3", _mut_8c, "cond-8c"),
    ("factorial", _mut_8d_free_output_var, "cond-8d"),
    ("agents3", _mut_8d_net_var_twice, "cond-8d"),
    ("factorial", _mut_8e, "cond-8e"),
    ("factorial", _mut_cond6, "cond-6"),
    ("factorial", _mut_cond7_shared_input, "cond-7"),
    ("agents3", _mut_cond7_segment, "cond-7"),
    ("factorial", _mut_lower_without_net, "lower-net-input"),
]


@pytest.mark.parametrize("net,mutate,code", KILL_SUITE,
                         ids=[f"{c}-{m.__name__}" for _, m, c in KILL_SUITE])
def test_validator_kill_suite(net, mutate, code):
    spec = mutate(load(net))
    diags = validate(spec)
    assert diags, "mutation went undetected"
    assert {d.code for d in diags} == {code}


def test_label_arity_checked():
    spec = load("agents3")
    labels = tuple(
        replace(l, arity=1) if l.name == "c" else l for l in spec.labels
    )
    diags = validate(replace(spec, labels=labels))
    assert {d.code for d in diags} == {"label-arity"}


def test_vertical_pair_bijection():
    spec = load("factorial")
    labels = tuple(
        replace(l, complement="nope") if l.name == "lambda" else l for l in spec.labels
    )
    diags = validate(replace(spec, labels=labels))
    assert any(d.code == "label-pair" for d in diags)


def test_shared_net_place_must_host_basic_segment():
    # retype the shared p5 of the factorial net to host F, which is recursive
    spec = load("factorial")
    comp = spec.components[0]
    from nestpn.model import NetType
    places = tuple(
        replace(p, ptype=NetType(("F",))) if p.name == "p5" else p for p in comp.places
    )
    diags = validate(swap_component(spec, replace(comp, places=places)))
    assert any(d.code == "shared-net-type" for d in diags)


# --- conflict sets ----------------------------------------------------------


def test_conflict_factorial_t4_clears_t3(factorial):
    names = [t.name for t in conflict_set(factorial, get_trans(factorial, "F", "t4"))]
    assert names == ["t3"]


def test_conflict_factorial_t5_clears_nothing(factorial):
    assert conflict_set(factorial, get_trans(factorial, "F", "t5")) == []


def test_conflict_disjoint_net(pingpong):
    for t in pingpong.components[0].transitions:
        assert conflict_set(pingpong, t) == []


def test_conflict_inhibitor_blocks_every_task_consumer(agents3):
    # the home transition (inhibitor on p2) conflicts with every p2 consumer
    comp = agents3.component("AgentX")
    for name in ("ta", "tc", "tr"):
        t = next(u for u in comp.transitions if u.name == name)
        assert "te" in {u.name for u in conflict_set(agents3, t)}


def test_conflict_symmetry_on_guard_overlap():
    rng = random.Random(5)
    from nestpn.model import HORIZONTAL, UPPER
    for _ in range(40):
        spec = random_spec(rng)
        for comp in spec.components:
            labeled = [
                t for t in comp.transitions
                if t.label and spec.label(t.label).kind in (HORIZONTAL, UPPER)
                and not t.inhibitors
            ]
            for t in labeled:
                for u in labeled:
                    if t is u or t.inhibitors or u.inhibitors:
                        continue
                    if (u in conflict_set(spec, t)) != (t in conflict_set(spec, u)):
                        pytest.fail(f"asymmetric conflict between {t.name} and {u.name}")


def test_def1_symbols_recoverable(factorial):
    # every Def. 1 ingredient is derivable from the spec object
    assert {ct.name for ct in factorial.color_types} == {"dots"}
    assert {l.name for l in factorial.labels} == {"lambda", "~lambda"}
    assert [p.name for p in factorial.shared_places()] == ["p1", "p5"]
    assert factorial.basic_segment() == frozenset()
    assert [c.name for c in factorial.components] == ["SN", "F"]
    agents = load("agents3")
    assert sorted(agents.basic_segment()) == [1, 2]
    c = agents.label("c")
    assert c.arity == 3 and c.kind == "horizontal"
