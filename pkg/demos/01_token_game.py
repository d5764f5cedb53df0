"""Walk the factorial net through both firing sequences of the running example.

The net spawns one F call token; each call either returns at once (upper sync
t3 with its parent) or consumes a unit of the shared pool p1 and spawns a
deeper call at p7.  Every completed call adds a token to the shared place p5.

Run:  python demos/01_token_game.py
"""

from nestpn import apply_step, dsl, enabled_steps, initial_marking, render_marking

spec = dsl.parse_file("nets/factorial.npn")


def fire(m, names):
    for step in enabled_steps(spec, m):
        if sorted(step.transition_names()) == sorted(names):
            return apply_step(spec, m, step)
    raise SystemExit(f"step {names} not enabled")


print("== main sequence: spawn, recurse once, unwind twice")
m = initial_marking(spec)
print("   ", render_marking(spec, m))
for names in (["t1"], ["t4"], ["t3", "t5"], ["t6", "t2"]):
    m = fire(m, names)
    print(f"[{'|'.join(names)}>".rjust(9), render_marking(spec, m))
print("enabled steps now:", enabled_steps(spec, m) or "none (dead marking)")

print()
print("== alternative: the first call returns immediately")
m = fire(initial_marking(spec), ["t1"])
m = fire(m, ["t3", "t2"])
print("   ", render_marking(spec, m))

print()
print("== what the semantics offers after the spawn")
m = fire(initial_marking(spec), ["t1"])
for step in enabled_steps(spec, m):
    print(f"  {step.kind:11}", " + ".join(step.transition_names()))
