"""Bounded exploration: reachability graphs, dead markings, termination.

Run:  python demos/02_state_space.py
"""

from nestpn import ExploreLimits, check_termination, dsl, explore, render_marking

print("== factorial: the dead-marking law")
spec = dsl.parse_file("nets/factorial.npn")
graph = explore(spec)
print(f"{graph.node_count()} states, {graph.edge_count()} edges, complete={graph.complete}")
print("dead markings (one per number of recursive calls):")
for m in graph.dead_markings():
    print("  ", render_marking(spec, m))
print("verdict:", check_termination(spec))

print()
print("== remove the shared pool: an infinite recursive run")
unbounded = dsl.parse_file("nets/factorial_unbounded.npn")
verdict = check_termination(unbounded, ExploreLimits(max_net_tokens=8))
print("verdict:", verdict)
print("witness:", ", ".join("|".join(s.transition_names()) for s in verdict.trace))

print()
print("== a cyclic net: lasso evidence instead of a bound")
pingpong = dsl.parse_file("nets/pingpong.npn")
verdict = check_termination(pingpong)
print("verdict:", verdict)
print(f"stem of {len(verdict.trace)} steps, cycle of {len(verdict.cycle)} steps:",
      ", ".join("|".join(s.transition_names()) for s in verdict.cycle))
