"""Boundedness and state predicates, natively checked on the explored graph.

Run:  python demos/03_properties.py
"""

from nestpn import (
    apply_step, check_bounded, check_predicate, dsl, enabled_steps,
    initial_marking, render_marking,
)

print("== factorial boundedness of the result place p5")
spec = dsl.parse_file("nets/factorial.npn")
print("bound 5:", check_bounded(spec, None, "p5", 5))
print("bound 3:", check_bounded(spec, None, "p5", 3))

print()
print("== the paper's final-state law as an AtDead predicate")
law = "p4==1 && p2==0 && size(p3)==0 && p1==init(p1)-created+1 && p5==created"
print(law)
print("verdict:", check_predicate(spec, None, "AtDead", law))

print()
print("== multi-agent scenarios: does every agent make it home?")
for net, agents in (("agents3", 3), ("agents2", 2), ("agents3_unsound", 3)):
    s = dsl.parse_file(f"nets/{net}.npn")
    verdict = check_predicate(s, None, "AtDead", f"Results=={agents}")
    print(f"{net:17} Results=={agents}: {verdict.kind}")
    if verdict.trace:
        m = initial_marking(s)
        for step in verdict.trace:
            live = {x.skey: x for x in enabled_steps(s, m)}
            m = apply_step(s, m, live[step.skey])
            print(f"   [{'|'.join(step.transition_names())}>")
        print("   stuck at:", render_marking(s, m))
