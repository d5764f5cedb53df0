"""External verifier client: generate, compile, run, parse, replay, lift.

Every run works in its own temporary directory and owns its subprocesses, so
runs can proceed concurrently.  Output parsing targets stable substrings of
the verifier's report rather than its full format; anything unrecognized comes
back as a ToolError with the raw capture attached.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field

from .model import NpnSpec
from .promela import CodegenOptions, PromelaModel, translate
from .semantics import Marking, Step, apply_step, enabled_steps, initial_marking

NO_ERRORS = "NoErrors"
INVALID_END_STATE = "InvalidEndState"
ASSERTION_VIOLATION = "AssertionViolation"
ACCEPTANCE_CYCLE = "AcceptanceCycle"
LTL_VIOLATION = "LtlViolation"
TIMEOUT = "Timeout"
TOOL_ERROR = "ToolError"

SAFETY = "safety"
ACCEPTANCE_CYCLES = "acceptance-cycles"


class SpinNotFound(Exception):
    pass


@dataclass(frozen=True)
class SpinRunConfig:
    spin_path: str = ""
    cc_path: str = ""
    compile_flags: tuple = ()  # e.g. ("-DVECTORSZ=2048", "-DCOLLAPSE")
    run_mode: str = SAFETY
    run_options: tuple = ()
    timeout_seconds: int = 300


@dataclass
class SpinReport:
    outcome: str
    errors: int = 0
    states_stored: int = 0
    depth_reached: int = 0
    memory_mb: float = 0.0
    trail: list | None = None  # lifted steps, present for violation outcomes
    trail_markers: list = field(default_factory=list)
    dead_valuations: list = field(default_factory=list)
    unreached: list = field(default_factory=list)
    raw: str = ""

    @property
    def is_violation(self) -> bool:
        return self.outcome in (
            INVALID_END_STATE, ASSERTION_VIOLATION, ACCEPTANCE_CYCLE, LTL_VIOLATION
        )


def find_spin() -> str | None:
    return os.environ.get("NESTPN_SPIN") or shutil.which("spin")


def find_cc() -> str | None:
    return os.environ.get("NESTPN_CC") or shutil.which("cc") or shutil.which("gcc")


def spin_available() -> bool:
    return find_spin() is not None and find_cc() is not None


def _run(cmd, cwd, timeout):
    proc = subprocess.run(
        cmd, cwd=cwd, stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
        timeout=timeout, text=True,
    )
    return proc.returncode, proc.stdout


_FIRE_RE = re.compile(r"@FIRE (\S+) (\S+)")
_DEAD_RE = re.compile(r"@DEAD (.+)")


def parse_pan_output(text: str) -> SpinReport:
    rep = SpinReport(outcome=TOOL_ERROR, raw=text)
    m = re.search(r"errors:\s*(\d+)", text)
    if m:
        rep.errors = int(m.group(1))
    m = re.search(r"(\d+)\s+states,\s+stored", text)
    if m:
        rep.states_stored = int(m.group(1))
    m = re.search(r"Depth\s*=\s*(\d+)", text)
    if m:
        rep.depth_reached = int(m.group(1))
    m = re.search(r"([\d.]+)\s+total actual memory usage", text)
    if m:
        rep.memory_mb = float(m.group(1))
    block = re.search(r"unreached in [\s\S]*", text)
    if block:
        rep.unreached = [
            line.strip()
            for line in block.group(0).splitlines()
            if line.startswith("unreached in") or "state" in line
        ]
    if "pan: out of memory" in text:
        rep.outcome = TOOL_ERROR
    elif "acceptance cycle" in text:
        rep.outcome = ACCEPTANCE_CYCLE
    elif "invalid end state" in text:
        rep.outcome = INVALID_END_STATE
    elif "assertion violated" in text:
        rep.outcome = ASSERTION_VIOLATION
    elif "claim violated" in text:
        rep.outcome = LTL_VIOLATION
    elif "errors:" in text and rep.errors == 0:
        rep.outcome = NO_ERRORS
    return rep


def run_verification(
    spec: NpnSpec,
    model: PromelaModel,
    config: SpinRunConfig | None = None,
    keep_dir: str | None = None,
) -> SpinReport:
    """generate -> compile -> run -> parse; on violations the first trail is
    replayed and its firing markers lifted back to a step sequence."""
    config = config or SpinRunConfig()
    spin = config.spin_path or find_spin()
    cc = config.cc_path or find_cc()
    if spin is None or cc is None:
        raise SpinNotFound("no spin/cc on PATH; set NESTPN_SPIN / NESTPN_CC")

    own_dir = keep_dir is None
    workdir = keep_dir or tempfile.mkdtemp(prefix="nestpn-spin-")
    try:
        pml = os.path.join(workdir, "model.pml")
        with open(pml, "w") as fh:
            fh.write(model.source)

        code, out = _run([spin, "-a", "model.pml"], workdir, config.timeout_seconds)
        if code != 0 or "Error" in out or not os.path.exists(
            os.path.join(workdir, "pan.c")
        ):
            return SpinReport(outcome=TOOL_ERROR, raw=f"spin -a failed:\n{out}")

        flags = list(config.compile_flags)
        if model.needs_noreduce and "-DNOREDUCE" not in flags:
            flags.append("-DNOREDUCE")
        code, out = _run(
            [cc, "-O2", "-o", "pan", "pan.c", *flags], workdir, config.timeout_seconds
        )
        if code != 0:
            return SpinReport(outcome=TOOL_ERROR, raw=f"compile failed:\n{out}")

        run_opts = list(config.run_options)
        if config.run_mode == ACCEPTANCE_CYCLES and "-a" not in run_opts:
            run_opts.append("-a")
        try:
            code, out = _run(["./pan", *run_opts], workdir, config.timeout_seconds)
        except subprocess.TimeoutExpired:
            return SpinReport(outcome=TIMEOUT, raw="pan timed out")
        rep = parse_pan_output(out)

        trails = sorted(
            f for f in os.listdir(workdir) if f.endswith(".trail")
        )
        if rep.is_violation and trails:
            markers, deads = replay_trail(spin, workdir, trails[0], config)
            rep.trail_markers = markers
            rep.dead_valuations.extend(deads)
            rep.trail = lift_markers(spec, markers)
        for extra in trails[1:]:
            _, deads = replay_trail(spin, workdir, extra, config)
            rep.dead_valuations.extend(deads)
        return rep
    finally:
        if own_dir:
            shutil.rmtree(workdir, ignore_errors=True)


def replay_trail(spin, workdir, trail, config):
    """Guided replay of one trail; returns firing markers and dead dumps."""
    m = re.match(r"model\.pml(\d*)\.trail", trail)
    n = m.group(1) if m else ""
    cmd = [spin, f"-t{n}" if n else "-t", "model.pml"]
    try:
        _, out = _run(cmd, workdir, config.timeout_seconds)
    except subprocess.TimeoutExpired:
        return [], []
    markers = [(c, t) for c, t in _FIRE_RE.findall(out)]
    deads = [_parse_valuation(s) for s in _DEAD_RE.findall(out)]
    return markers, deads


def _parse_valuation(text: str) -> dict:
    out = {}
    for part in text.split():
        if "=" in part:
            k, v = part.split("=", 1)
            try:
                out[k] = int(v)
            except ValueError:
                pass
    return out


def lift_markers(spec: NpnSpec, markers: list) -> list[Step]:
    """Map a sequence of (component, transition) firing markers back to steps.

    Steps print their firings consecutively, so the trail is segmented
    greedily with backtracking over ambiguous bindings; an unliftable tail is
    dropped (trails may stop mid-step at the failure point)."""
    want = [(c, t) for c, t in markers]

    best_prefix: list[Step] = []

    def rec(marking, idx, acc):
        nonlocal best_prefix
        if len(acc) > len(best_prefix):
            best_prefix = list(acc)
        if idx == len(want):
            return list(acc)
        for step in enabled_steps(spec, marking):
            k = len(step.firings)
            window = want[idx : idx + k]
            if len(window) < k:
                continue
            names = sorted(
                (spec.components[f.component].name, f.transition)
                for f in step.firings
            )
            if names != sorted(window):
                continue
            acc.append(step)
            done = rec(apply_step(spec, marking, step), idx + k, acc)
            if done is not None:
                return done
            acc.pop()
        return None

    full = rec(initial_marking(spec), 0, [])
    return full if full is not None else best_prefix


# --- native/spin agreement ------------------------------------------------------


def system_valuation(spec: NpnSpec, marking: Marking) -> dict:
    """The valuation the dead-state dump prints, computed natively: uncolored
    counts, and channel lengths for the rest (tokens plus pending requests,
    one per locally enabled request-posting transition of each token)."""
    from .model import HORIZONTAL, UPPER
    from .semantics import enabled_bindings

    comp = spec.components[0]
    out = {}
    for pos, p in enumerate(comp.places):
        toks = marking.places[pos]
        if not p.is_net:
            out[p.name] = len(toks)
            continue
        total = 0
        for tok in toks:
            total += 1
            sub = spec.components[tok.component]
            path = ((p.name, tok.rtid),)
            for t in sub.transitions:
                lab = spec.label(t.label) if t.label else None
                if lab is None or lab.kind not in (UPPER, HORIZONTAL):
                    continue
                if enabled_bindings(spec, marking, path, t):
                    total += 1
        out[p.name] = total
    return out


@dataclass
class Crosscheck:
    agree: bool
    details: list  # (check name, variant, native, spin, ok)

    def __str__(self):
        lines = []
        for name, variant, native, spin_, ok in self.details:
            mark = "ok " if ok else "XX "
            lines.append(f"{mark}{variant:13} {name}: native={native!r} spin={spin_!r}")
        return "\n".join(lines)


def crosscheck(
    spec: NpnSpec,
    variants=("priorities", "no-priorities", "improved"),
    optimizations=frozenset(),
    limits=None,
    config: SpinRunConfig | None = None,
    bound: tuple | None = None,
) -> Crosscheck:
    """Run the native explorer and the external verifier on the same net and
    compare termination class, dead-state valuations, and bound verdicts."""
    from .explore import check_termination, explore

    graph = explore(spec, limits)
    native_term = check_termination(spec, limits, graph=graph)
    native_deads = sorted(
        (tuple(sorted(system_valuation(spec, m).items())) for m in graph.dead_markings()),
    )

    import dataclasses

    base_cfg = config or SpinRunConfig()
    details = []
    for variant in variants:
        base = CodegenOptions(variant=variant, optimizations=optimizations)
        # phase 1: default (safety) verification with valid end states
        rep1 = run_verification(spec, translate(spec, base), base_cfg)
        # phase 2: acceptance-cycle search (invalid ends already covered above)
        acc = CodegenOptions(
            variant=variant, optimizations=optimizations, acceptance_label=True
        )
        cfg2 = dataclasses.replace(
            base_cfg, run_mode=ACCEPTANCE_CYCLES, run_options=("-a", "-E")
        )
        rep2 = run_verification(spec, translate(spec, acc), cfg2)
        if rep1.outcome == TOOL_ERROR or rep2.outcome == TOOL_ERROR:
            details.append(("toolerror", variant, "", rep1.raw[-400:] or rep2.raw[-400:], False))
            continue
        spin_term = (
            "Terminating"
            if rep1.outcome == NO_ERRORS and rep2.outcome in (NO_ERRORS,)
            else ("InfiniteRun" if rep2.outcome == ACCEPTANCE_CYCLE else "BoundExceeded")
        )
        native_class = native_term.kind
        details.append(
            ("termination", variant, native_class, spin_term, native_class == spin_term)
        )

        # dead-state valuations from the timeout-instrumented model
        dump = CodegenOptions(
            variant=variant, optimizations=optimizations, dead_dump=True,
            valid_end_states=False,
        )
        cfg3 = dataclasses.replace(base_cfg, run_options=("-e", "-c0", "-E"))
        rep3 = run_verification(spec, translate(spec, dump), cfg3)
        spin_deads = sorted(set(tuple(sorted(v.items())) for v in rep3.dead_valuations))
        ok = spin_deads == native_deads if graph.complete else True
        details.append(("dead-valuations", variant, native_deads, spin_deads, ok))

        if bound is not None:
            place, limit = bound
            from .explore import check_bounded

            native_b = check_bounded(spec, limits, place, limit, graph=graph).kind
            withassert = CodegenOptions(
                variant=variant, optimizations=optimizations,
                bound_asserts=((place, limit),),
            )
            rep4 = run_verification(spec, translate(spec, withassert), base_cfg)
            spin_b = "Bounded" if rep4.outcome == NO_ERRORS else (
                "CounterExample" if rep4.outcome == ASSERTION_VIOLATION else rep4.outcome
            )
            details.append(("bound", variant, native_b, spin_b, native_b == spin_b))

    return Crosscheck(agree=all(d[4] for d in details), details=details)
