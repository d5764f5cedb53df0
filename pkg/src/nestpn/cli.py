"""Command-line front end: parse, simulate, explore, check, translate, verify,
and a small JSON API server that backs the browser token game.

Exit codes: 0 success (property holds), 1 violation found (trace on stdout),
2 usage or tool errors (diagnostics on stderr).
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import dsl, jsonio
from .explore import (
    AG, AT_DEAD, BOUNDED, EF, HOLDS, TERMINATING,
    ExploreLimits, check_bounded, check_predicate, check_termination, explore,
)
from .model import validate
from .promela import ALL_OPTIMIZATIONS, CodegenError, CodegenOptions, translate
from .semantics import apply_step, enabled_steps, initial_marking, render_marking
from .spinrun import (
    ACCEPTANCE_CYCLES, NO_ERRORS, SAFETY, SpinNotFound, SpinRunConfig,
    run_verification,
)

OK, VIOLATION, USAGE = 0, 1, 2


def _load(path):
    try:
        spec = dsl.parse_file(path)
    except (OSError, dsl.ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        raise SystemExit(USAGE)
    problems = validate(spec)
    if problems:
        for d in problems:
            print(str(d), file=sys.stderr)
        raise SystemExit(USAGE)
    return spec


def _limits(args) -> ExploreLimits:
    return ExploreLimits(
        max_states=args.max_states,
        max_depth=args.max_depth,
        max_net_tokens=args.max_net_tokens,
        max_tokens_per_place=args.max_tokens_per_place,
    )


def _print_trace(spec, verdict):
    m = initial_marking(spec)
    print(f"  {render_marking(spec, m)}")
    for step in verdict.trace:
        m = apply_step(spec, m, step)
        print(f"  [{'|'.join(step.transition_names())}>  {render_marking(spec, m)}")
    if verdict.cycle:
        print("  -- cycle --")
        for step in verdict.cycle:
            m = apply_step(spec, m, step)
            print(f"  [{'|'.join(step.transition_names())}>  {render_marking(spec, m)}")


def _verdict_out(spec, verdict, as_json):
    if as_json:
        out = {"verdict": verdict.kind}
        if verdict.limit:
            out["limit"] = verdict.limit
        if verdict.place:
            out["place"] = verdict.place
        if verdict.reason:
            out["reason"] = verdict.reason
        if verdict.trace:
            m = initial_marking(spec)
            pairs = []
            for s in verdict.trace:
                m = apply_step(spec, m, s)
                pairs.append((s, m))
            out["trace"] = jsonio.trace_json(spec, initial_marking(spec), pairs)
        print(json.dumps(out, indent=2))
    else:
        print(str(verdict))
        if verdict.trace or verdict.cycle:
            _print_trace(spec, verdict)
    good = verdict.kind in (TERMINATING, HOLDS, BOUNDED)
    return OK if good else VIOLATION


# --- subcommands -----------------------------------------------------------------


def cmd_parse(args):
    try:
        spec = dsl.parse_file(args.net)
    except (OSError, dsl.ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE
    problems = validate(spec)
    if args.json:
        print(json.dumps(
            {"name": spec.name,
             "valid": not problems,
             "diagnostics": [
                 {"code": d.code, "where": d.where, "message": d.message}
                 for d in problems
             ]},
            indent=2,
        ))
    else:
        for d in problems:
            print(str(d), file=sys.stderr)
        if not problems:
            comps = ", ".join(c.name for c in spec.components)
            print(f"{spec.name}: valid ({comps})")
    return OK if not problems else VIOLATION


def _match_script_item(steps, item):
    want = sorted(x.strip() for x in item.split("|") if x.strip())
    hits = [s for s in steps if sorted(s.transition_names()) == want]
    return hits[0] if hits else None


def cmd_simulate(args):
    spec = _load(args.net)
    rng = random.Random(args.seed)
    m = initial_marking(spec)
    history = []
    print(render_marking(spec, m))
    script = [x for x in (args.script.split(",") if args.script else []) if x.strip()]
    if args.interactive:
        return _interactive(spec, m)
    steps_left = args.steps if not script else len(script)
    i = 0
    while i < steps_left:
        steps = enabled_steps(spec, m)
        if not steps:
            print("dead marking reached")
            break
        if script:
            step = _match_script_item(steps, script[i])
            if step is None:
                print(f"error: script step {script[i]!r} not enabled", file=sys.stderr)
                return USAGE
        else:
            step = steps[rng.randrange(len(steps))]
        m = apply_step(spec, m, step)
        history.append((step, m))
        print(f"[{'|'.join(step.transition_names())}>  {render_marking(spec, m)}")
        i += 1
    if args.json or args.out:
        text = jsonio.export_trace(spec, initial_marking(spec), history)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            print(text, end="")
    return OK


def _interactive(spec, m):
    history = []
    while True:
        steps = enabled_steps(spec, m)
        print()
        print(render_marking(spec, m))
        if not steps:
            print("dead marking: no step enabled")
        for i, s in enumerate(steps):
            bindings = "; ".join(
                f"{f.transition}" + (
                    "{" + ",".join(
                        f"{v}={tok if isinstance(tok, str) else '#%d' % tok.rtid}"
                        for v, tok in sorted(f.binding.assignments.items())
                    ) + "}"
                    if f.binding.assignments else ""
                )
                for f in s.firings
            )
            print(f"  {i}: {s.kind:10} {bindings}")
        try:
            line = input("step (number, u=undo, q=quit)> ").strip()
        except EOFError:
            return OK
        if line == "q":
            return OK
        if line == "u":
            if history:
                history.pop()
                m = history[-1][1] if history else initial_marking(spec)
            continue
        if line.isdigit() and int(line) < len(steps):
            step = steps[int(line)]
            m = apply_step(spec, m, step)
            history.append((step, m))


def cmd_explore(args):
    spec = _load(args.net)
    graph = explore(spec, _limits(args))
    if args.json or args.out:
        text = jsonio.export_graph(spec, graph)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            print(text, end="")
    else:
        dead = len(graph.dead_markings())
        status = "complete" if graph.complete else (
            f"truncated ({graph.truncations[0].limit})"
        )
        print(
            f"{graph.node_count()} states, {graph.edge_count()} edges, "
            f"{dead} dead, {status}"
        )
    return OK if graph.complete else VIOLATION


def cmd_check(args):
    spec = _load(args.net)
    limits = _limits(args)
    if args.what == "termination":
        verdict = check_termination(spec, limits)
    elif args.what == "bounded":
        if not args.bound or "=" not in args.bound:
            print("error: bounded needs --bound place=N", file=sys.stderr)
            return USAGE
        place, bound = args.bound.split("=", 1)
        try:
            verdict = check_bounded(spec, limits, place.strip(), int(bound))
        except (KeyError, ValueError) as err:
            print(f"error: {err}", file=sys.stderr)
            return USAGE
    elif args.what == "predicate":
        if not args.pred:
            print("error: predicate needs --pred EXPR", file=sys.stderr)
            return USAGE
        verdict = check_predicate(spec, limits, args.mode, args.pred)
    else:
        return USAGE
    return _verdict_out(spec, verdict, args.json)


def _codegen_options(args, spec=None) -> CodegenOptions:
    def check_place(name):
        if spec is not None and spec.system.place(name) is None:
            print(f"error: unknown system place {name}", file=sys.stderr)
            raise SystemExit(USAGE)

    opts = frozenset()
    if args.opt:
        if args.opt == "all":
            opts = ALL_OPTIMIZATIONS
        else:
            opts = frozenset(x.strip() for x in args.opt.split(",") if x.strip())
            unknown = opts - ALL_OPTIMIZATIONS
            if unknown:
                print(f"error: unknown optimizations {sorted(unknown)}", file=sys.stderr)
                raise SystemExit(USAGE)
    bound_asserts = ()
    if args.bound:
        if "=" not in args.bound:
            print("error: --bound needs place=N", file=sys.stderr)
            raise SystemExit(USAGE)
        place, bound = args.bound.split("=", 1)
        check_place(place.strip())
        bound_asserts = ((place.strip(), int(bound)),)
    if args.counters:
        check_place(args.counters)
    return CodegenOptions(
        variant=args.variant,
        optimizations=opts,
        max_tok=args.max_tok,
        max_msg=args.max_msg,
        acceptance_label=args.acceptance,
        bound_asserts=bound_asserts,
        ltl=args.ltl or "",
        counters=bool(args.counters),
        counter_init_place=args.counters or "",
        dead_dump=args.dead_dump,
    )


def cmd_translate(args):
    spec = _load(args.net)
    try:
        model = translate(spec, _codegen_options(args, spec))
    except CodegenError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(model.source)
        print(f"wrote {args.out} ({model.variant}, MaxTok={model.max_tok}, "
              f"MaxMsg={model.max_msg})")
    else:
        print(model.source, end="")
    return OK


def cmd_verify(args):
    spec = _load(args.net)
    try:
        model = translate(spec, _codegen_options(args, spec))
    except CodegenError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE
    mode = ACCEPTANCE_CYCLES if (args.acceptance or args.ltl) else SAFETY
    config = SpinRunConfig(
        spin_path=args.spin or "",
        cc_path=args.cc or "",
        compile_flags=tuple(args.cflag or ()),
        run_mode=mode,
        timeout_seconds=args.timeout,
    )
    try:
        rep = run_verification(spec, model, config)
    except SpinNotFound as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE
    if args.json:
        out = {
            "outcome": rep.outcome,
            "errors": rep.errors,
            "statesStored": rep.states_stored,
            "depthReached": rep.depth_reached,
            "memoryMb": rep.memory_mb,
            "unreached": rep.unreached,
        }
        if rep.trail is not None:
            m = initial_marking(spec)
            pairs = []
            for s in rep.trail:
                m = apply_step(spec, m, s)
                pairs.append((s, m))
            out["trail"] = jsonio.trace_json(spec, initial_marking(spec), pairs)
        print(json.dumps(out, indent=2))
    else:
        print(f"{rep.outcome} (states={rep.states_stored}, "
              f"depth={rep.depth_reached}, mem={rep.memory_mb}MB)")
        if rep.trail:
            print("lifted counterexample:")
            m = initial_marking(spec)
            for s in rep.trail:
                m = apply_step(spec, m, s)
                print(f"  [{'|'.join(s.transition_names())}>  {render_marking(spec, m)}")
        if rep.outcome == "ToolError":
            print(rep.raw[-2000:], file=sys.stderr)
    if rep.outcome == NO_ERRORS:
        return OK
    return VIOLATION if rep.is_violation else USAGE


def cmd_serve(args):
    spec = _load(args.net)
    from .serve import serve

    serve(spec, args.port, static_dir=args.static)
    return OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="nestpn",
        description="Nested Petri net workbench: simulate, explore, translate, verify.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, limits=True):
        sp.add_argument("net", help="net system source file (.npn)")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        if limits:
            sp.add_argument("--max-states", type=int, default=1_000_000)
            sp.add_argument("--max-depth", type=int, default=10_000)
            sp.add_argument("--max-net-tokens", type=int, default=254)
            sp.add_argument("--max-tokens-per-place", type=int, default=255)

    sp = sub.add_parser("parse", help="parse and validate a net")
    common(sp, limits=False)
    sp.set_defaults(fn=cmd_parse)

    sp = sub.add_parser("simulate", help="scripted, random or interactive runs")
    common(sp, limits=False)
    sp.add_argument("--script", help="comma list of steps, sync steps as 't3|t5'")
    sp.add_argument("--steps", type=int, default=0, help="random steps to take")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--interactive", action="store_true")
    sp.add_argument("-o", "--out", help="write the trace JSON here")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("explore", help="build the reachability graph")
    common(sp)
    sp.add_argument("-o", "--out", help="write the graph JSON here")
    sp.set_defaults(fn=cmd_explore)

    sp = sub.add_parser("check", help="termination / boundedness / predicates")
    sp.add_argument("what", choices=["termination", "bounded", "predicate"])
    common(sp)
    sp.add_argument("--bound", help="place=N for bounded checks")
    sp.add_argument("--mode", choices=[AG, EF, AT_DEAD], default=AG)
    sp.add_argument("--pred", help="state predicate, e.g. 'p4==1 && p5==created'")
    sp.set_defaults(fn=cmd_check)

    def translate_flags(sp):
        sp.add_argument("--variant", default="priorities",
                        choices=["priorities", "no-priorities", "improved"])
        sp.add_argument("--opt", help="comma list of optimizations, or 'all'")
        sp.add_argument("--ltl", help="LTL body to append as a claim")
        sp.add_argument("--bound", help="place=N: emit a boundedness assertion")
        sp.add_argument("--acceptance", action="store_true",
                        help="acceptance label on the system-net loop")
        sp.add_argument("--counters", metavar="PLACE",
                        help="emit created counter f and snapshot a of PLACE")
        sp.add_argument("--dead-dump", action="store_true",
                        help="instrument dead states to print their valuation")
        sp.add_argument("--max-tok", type=int, default=0)
        sp.add_argument("--max-msg", type=int, default=0)

    sp = sub.add_parser("translate", help="compile the net to PROMELA")
    common(sp, limits=False)
    translate_flags(sp)
    sp.add_argument("-o", "--out", help="output .pml path")
    sp.set_defaults(fn=cmd_translate)

    sp = sub.add_parser("verify", help="translate and run the external verifier")
    common(sp, limits=False)
    translate_flags(sp)
    sp.add_argument("--spin", help="spin binary (default: $NESTPN_SPIN or PATH)")
    sp.add_argument("--cc", help="C compiler (default: $NESTPN_CC or PATH)")
    sp.add_argument("--cflag", action="append", help="extra pan compile flag")
    sp.add_argument("--timeout", type=int, default=300)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("serve", help="JSON API + web UI for the token game")
    common(sp, limits=False)
    sp.add_argument("--port", type=int, default=8351)
    sp.add_argument("--static", help="directory of web UI assets to serve at /")
    sp.set_defaults(fn=cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        return OK
    except SystemExit as err:  # diagnostics already printed at the raise site
        return err.code if isinstance(err.code, int) else USAGE


if __name__ == "__main__":
    sys.exit(main())
