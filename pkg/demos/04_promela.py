"""Compile nets to PROMELA in all three translation variants.

With a spin binary on the PATH (or NESTPN_SPIN set) this also runs the
external verifier and crosschecks it against the native explorer.

Run:  python demos/04_promela.py
"""

from nestpn import CodegenOptions, dsl, spin_available, translate
from nestpn.promela import ALL_OPTIMIZATIONS

spec = dsl.parse_file("nets/factorial.npn")

print("== the three variants at a glance")
for variant in ("priorities", "no-priorities", "improved"):
    model = translate(spec, CodegenOptions(variant=variant))
    lines = model.source.count("\n")
    print(f"{variant:14} {lines:4} lines, MaxTok={model.max_tok}, MaxMsg={model.max_msg}")

print()
print("== the optimized priorities element net (compare with the paper's listing)")
model = translate(spec, CodegenOptions(optimizations=ALL_OPTIMIZATIONS))
src = model.source
print(src[src.index("proctype EN_F"):src.index("init{")])

print("== properties ride along as labels, asserts, counters and a claim")
model = translate(spec, CodegenOptions(
    acceptance_label=True,
    bound_asserts=(("p5", 5),),
    counters=True,
    counter_init_place="p1",
    ltl="<>[](p4==1 && p2==0 && len(p3.d)==0 && p1==a-f+1 && p5==f)",
))
for line in model.source.splitlines():
    if "assert" in line or line.startswith("ltl") or "accept_step" in line:
        print(" ", line.strip())

print()
if spin_available():
    from nestpn import crosscheck

    print("== crosschecking the explorer against the external verifier")
    report = crosscheck(spec)
    print(report)
else:
    print("(no spin binary found: skipping the live crosscheck;"
          " install spin or set NESTPN_SPIN to enable it)")
