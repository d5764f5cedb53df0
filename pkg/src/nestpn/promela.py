"""PROMELA code generation.

Each element net becomes a proctype, each net token a process.  Net places are
channels that hold one at-place message per token plus one pending request per
(token, sync label); basic colored places are channels of constant codes;
uncolored places are numeric variables.  Three variants are supported:

* ``priorities``    -- process priorities order the firings of one step;
  element nets run an inner request/firing loop escaped by an ``unless`` when
  a response arrives.
* ``no-priorities`` -- a single loop per element net; every response travels
  through the global channel, whose sorted insertion fixes the order instead
  of priorities, and new firings wait for it to drain.
* ``improved``      -- priorities plus the sorted global channel, pinning the
  in-step execution order to cut interleavings.

Generation is deterministic: identical (spec, options) give identical bytes.
Where the source tables guard on the static label class of a transition, the
tests are resolved here at generation time rather than emitted as runtime
conditionals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    Const,
    HORIZONTAL,
    LOWER,
    NetConst,
    NpnSpec,
    PlaceDecl,
    TransitionDecl,
    UPPER,
    Var,
    conflict_set,
    label_bytes,
    transition_ids,
)

PRIORITIES = "priorities"
NO_PRIORITIES = "no-priorities"
IMPROVED = "improved"
VARIANTS = (PRIORITIES, NO_PRIORITIES, IMPROVED)

ALL_OPTIMIZATIONS = frozenset(
    {"initAtDecl", "elideLabelTest", "labelAsId", "dropTransportField", "dropConsumeField"}
)

_RESERVED = {
    "nt", "lt", "it", "rm", "pc", "cha", "v0", "v1", "v2", "gbChan",
    "BasicPlace", "NetPlace", "MaxTok", "MaxMsg", "init", "chan", "byte",
    "bit", "do", "od", "if", "fi", "run", "len", "timeout", "skip", "unless",
    "atomic", "d_step", "proctype", "else", "break", "assert", "printf",
    "rmConf", "recMsg", "consNetTok", "consNetsAtPlace", "transpNetTok",
    "numTok", "numMsg",
}


class CodegenError(Exception):
    pass


@dataclass(frozen=True)
class CodegenOptions:
    variant: str = PRIORITIES
    optimizations: frozenset = frozenset()
    max_tok: int = 0  # 0 = size from a bounded native exploration
    max_msg: int = 0
    valid_end_states: bool = True
    acceptance_label: bool = False
    bound_asserts: tuple = ()  # ((place, bound), ...)
    ltl: str = ""
    counters: bool = False  # global f (tokens created) and a (init snapshot)
    counter_init_place: str = ""
    dead_dump: bool = False  # timeout-guarded valuation dump for crosschecks
    narrow_types: bool = False

    def opt(self, name: str) -> bool:
        return name in self.optimizations


@dataclass
class PromelaModel:
    source: str
    variant: str
    transition_ids: dict
    label_bytes: dict
    step_map: dict  # "@FIRE <comp> <trans>" -> (component name, transition name)
    max_tok: int = 0
    max_msg: int = 0

    @property
    def needs_noreduce(self) -> bool:
        return self.variant in (PRIORITIES, IMPROVED)


def decide_channel_sizes(spec: NpnSpec, max_tok: int = 0, max_msg: int = 0):
    """Channel capacities: observed place maxima from a bounded exploration,
    times one at-place message plus one request per sync label hostable at the
    place.  Falls back to modest defaults when exploration is truncated."""
    from .explore import ExploreLimits, explore
    from .semantics import NetToken

    caps_basic: dict[str, int] = {}
    caps_net: dict[str, int] = {}

    def scan(marking):
        comp = spec.components[marking.component]
        for pos, p in enumerate(comp.places):
            toks = marking.places[pos]
            store = caps_net if p.is_net else caps_basic
            key = f"{comp.name}.{p.name}"
            store[key] = max(store.get(key, 0), len(toks))
            for t in toks:
                if isinstance(t, NetToken):
                    scan(t.marking)

    graph = explore(
        spec,
        ExploreLimits(max_states=20000, max_depth=2000,
                      max_net_tokens=60, max_tokens_per_place=60),
    )
    for m in graph.markings:
        scan(m)
    fallback = not graph.complete

    # worst case per token: its at-place message plus one pending request per
    # request-posting transition of its component
    requests_of = {}
    for comp in spec.components:
        requests_of[comp.name] = sum(
            1
            for t in comp.transitions
            if t.label and spec.label(t.label).kind in (UPPER, HORIZONTAL)
        )

    tok = 1
    msg = 1
    for comp in spec.components:
        for p in comp.places:
            key = f"{comp.name}.{p.name}"
            if p.is_net:
                census = 4 if fallback else caps_net.get(key, 0)
                per_token = 1 + max(
                    (requests_of[en] for en in p.ptype.components), default=0
                )
                msg = max(msg, census * per_token)
            elif p.ptype.name != "dots":
                census = 4 if fallback else caps_basic.get(key, 0)
                tok = max(tok, census)
    return (max_tok or tok, max_msg or msg)


# --- layout ------------------------------------------------------------------


class _Layout:
    """Field layout of net-place messages and of the global channel."""

    def __init__(self, spec: NpnSpec, options: CodegenOptions):
        self.variant = options.variant
        transports = conss = False
        splits = False
        label_once = True
        for comp in spec.components:
            seen = set()
            for t in comp.transitions:
                in_net = {
                    v.name for p, e in t.inputs for v in e.variables()
                    if _net_var(spec, comp, v)
                }
                out_net = {
                    v.name for p, e in t.outputs for v in e.variables()
                    if _net_var(spec, comp, v)
                }
                if in_net & out_net:
                    transports = True
                if in_net - out_net:
                    conss = True
                if comp.index > 0 and _creates(t) and _kind(spec, t) in ("", LOWER):
                    splits = True
                if t.label and spec.label(t.label).kind in (UPPER, HORIZONTAL):
                    if t.label in seen:
                        label_once = False
                    seen.add(t.label)
        self.has_transports = transports
        self.has_consumes = conss
        self.label_as_id = (
            options.opt("labelAsId") and label_once and not splits
        )
        if self.variant == PRIORITIES:
            # pid, label [, tid] , req [, rm]
            self.has_req = True
            self.drop_rm = (options.opt("dropTransportField") and not transports) or (
                options.opt("dropConsumeField") and not conss
            )
        else:
            # responses travel on gbChan (which keeps its own rm field);
            # place channels carry requests and at-place messages only
            self.has_req = False
            self.drop_rm = False
        self.has_tid = not self.label_as_id
        self.use_gbchan = self.variant != PRIORITIES or self.has_transports

    def net_fields(self):
        fields = [("byte", "pid"), ("byte", "label")]
        if self.has_tid:
            fields.append(("byte", "tid"))
        if self.has_req:
            fields.append(("bit", "req"))
            if not self.drop_rm:
                fields.append(("bit", "rm"))
        return fields

    def net_typedef(self) -> str:
        types = ",".join(t for t, _ in self.net_fields())
        return f"typedef NetPlace {{ chan d = [MaxMsg] of {{{types}}} }}"

    def msg(self, pid, label, tid, req, rm) -> str:
        vals = [pid, label]
        if self.has_tid:
            vals.append(tid)
        if self.has_req:
            vals.append(req)
            if not self.drop_rm:
                vals.append(rm)
        return ",".join(str(v) for v in vals)

    def req_width(self) -> int:
        return len(self.net_fields())


# response classes on the sorted global channel: Appendix B fixes its own
# byte order; the improved variant encodes 6 - priority so the drain order
# matches the priority scheme
_GB_CLASS = {
    NO_PRIORITIES: {"create": 2, "nosync": 3, "horiz_init": 4, "horiz": 4, "sync": 5, "open": 2},
    IMPROVED: {"create": 4, "nosync": 3, "horiz_init": 0, "horiz": 2, "sync": 1, "open": 4},
}


def _kind(spec: NpnSpec, t: TransitionDecl) -> str:
    if not t.label:
        return ""
    return spec.label(t.label).kind


def _net_var(spec, comp, v: Var) -> bool:
    vt = dict(comp.variables).get(v.name)
    return vt is not None and spec.component(vt) is not None


def _creates(t: TransitionDecl) -> bool:
    return any(isinstance(term, NetConst) for _, e in t.outputs for term in e.terms)


# --- emitter -------------------------------------------------------------------


class _Emitter:
    def __init__(self, spec: NpnSpec, options: CodegenOptions):
        self.spec = spec
        self.o = options
        self.layout = _Layout(spec, options)
        self.tids = transition_ids(spec)
        self.lbytes = label_bytes(spec)
        self.max_tok, self.max_msg = decide_channel_sizes(
            spec, options.max_tok, options.max_msg
        )
        self.color_codes = {}
        for ct in spec.color_types:
            for i, v in enumerate(ct.values):
                self.color_codes.setdefault(v, i + 1)
        self.step_map = {}
        self.uses_c_numtok = False
        self.uses_c_nummsg = False
        self.lines: list[str] = []
        self._check_ranges()
        self.elidable = self._elidable_labels()

    # -- static checks ---------------------------------------------------------

    def _check_ranges(self):
        if len(self.tids) > 253:
            raise CodegenError("more than 253 transitions do not fit byte identities")
        if self.lbytes and max(self.lbytes.values()) > 254:
            raise CodegenError("sync labels do not fit in a byte")
        for comp in self.spec.components:
            names = [comp.name] + [p.name for p in comp.places] + [
                t.name for t in comp.transitions
            ] + [v for v, _ in comp.variables]
            for n in names:
                if n in _RESERVED:
                    raise CodegenError(
                        f"identifier {n!r} collides with generated runtime names"
                    )

    def _elidable_labels(self):
        """(component, label) pairs whose response dispatch may skip the enable
        test: the label occurs once, or all its transitions are mutually
        exclusive by a one-token place invariant."""
        out = set()
        if not self.o.opt("elideLabelTest"):
            return out
        for comp in self.spec.components:
            by_label: dict[str, list[TransitionDecl]] = {}
            for t in comp.transitions:
                if t.label and _kind(self.spec, t) in (UPPER, HORIZONTAL):
                    by_label.setdefault(t.label, []).append(t)
            for label, group in by_label.items():
                if len(group) == 1 or self._mutually_exclusive(comp, group):
                    out.add((comp.index, label))
        return out

    def _mutually_exclusive(self, comp, group) -> bool:
        """A one-token place invariant covering every guard place of the group
        proves at most one of its transitions can be enabled at a time."""
        support = set()
        for t in group:
            if not t.inputs:
                return False
            places = {p for p, _ in t.inputs if comp.place(p) is not None}
            if not places:
                return False
            support |= places
        pairwise = all(
            not ({p for p, _ in a.inputs} & {p for p, _ in b.inputs})
            for i, a in enumerate(group)
            for b in group[i + 1 :]
        )
        if not pairwise:
            return False
        cover = set(support)
        for _ in range(len(comp.places) + 1):
            grew = False
            for t in comp.transitions:
                produced = sum(len(e.terms) for p, e in t.outputs if p in cover)
                consumed = sum(len(e.terms) for p, e in t.inputs if p in cover)
                if produced > consumed:
                    ins = {p for p, _ in t.inputs if comp.place(p) is not None}
                    if not ins:
                        return False
                    before = len(cover)
                    cover |= ins
                    grew = grew or len(cover) != before
            if not grew:
                break
        for t in comp.transitions:
            produced = sum(len(e.terms) for p, e in t.outputs if p in cover)
            consumed = sum(len(e.terms) for p, e in t.inputs if p in cover)
            if produced > consumed:
                return False
        initial = sum(len(comp.initial_terms(p)) for p in cover)
        return initial <= 1

    # -- helpers ----------------------------------------------------------------

    def emit(self, line=""):
        self.lines.append(line)

    def lvl(self, t: TransitionDecl) -> int:
        """Byte of the complementary upper label for lower transitions, 255
        otherwise (which is what at-place messages carry)."""
        if _kind(self.spec, t) == LOWER:
            return self.lbytes[self.spec.label(t.label).complement]
        return 255

    def tid(self, t: TransitionDecl) -> int:
        return self.tids[(t.owner, t.name)]

    def code(self, value: str) -> int:
        return self.color_codes[value]

    def is_uncolored(self, p: PlaceDecl) -> bool:
        return not p.is_net and p.ptype.name == "dots"

    def chan(self, owner: int, p: PlaceDecl) -> str:
        return f"{p.name}.d"

    def cscope(self, owner: int, p: PlaceDecl) -> str:
        """C-side lvalue prefix for a place channel in a c_expr."""
        if p.owner == 0:
            return f"now.{p.name}.d"
        return f"P{self.pname(self.spec.components[owner])}->{p.name}.d"

    def pname(self, comp) -> str:
        return f"EN_{comp.name}"

    def resolved_arcs(self, t: TransitionDecl, arcs):
        out = []
        for pname, expr in arcs:
            p = self.spec.resolve_place(t.owner, pname)
            out.append((p, expr))
        return out

    def sorted_arcs(self, t: TransitionDecl, arcs):
        """Uncolored own, uncolored shared, colored own/shared, net own/shared."""
        resolved = self.resolved_arcs(t, arcs)

        def rank(item):
            p, _ = item
            group = 0 if self.is_uncolored(p) else (1 if not p.is_net else 2)
            return (group, 1 if p.shared else 0)

        return sorted(resolved, key=rank)

    def marker(self, comp, t) -> str:
        key = f"@FIRE {comp.name} {t.name}"
        self.step_map[key] = (comp.name, t.name)
        return f'printf("{key}\\n");'

    # -- enable tests --------------------------------------------------------------

    def enable_test(self, t: TransitionDecl) -> str:
        parts = []
        for p, expr in self.sorted_arcs(t, t.inputs):
            if self.is_uncolored(p):
                n = len(expr.terms)
                parts.append(f"{p.name} > 0" if n == 1 else f"{p.name} >= {n}")
            elif not p.is_net:
                n = len(expr.terms)
                parts.append(f"len({p.name}.d) >= {n}")
                consts: dict[str, int] = {}
                for term in expr.terms:
                    if isinstance(term, Const):
                        consts[term.value] = consts.get(term.value, 0) + 1
                for value in sorted(consts, key=self.code):
                    k = consts[value]
                    if k == 1:
                        parts.append(f"{p.name}.d ?? [{self.code(value)}]")
                    else:
                        self.uses_c_numtok = True
                        parts.append(
                            "c_expr { numTok(qptr(%s-1), %d) >= %d }"
                            % (self.cscope(t.owner, p), self.code(value), k)
                        )
            else:
                k = len(expr.terms)
                lab = self.lvl(t)
                if k == 1:
                    pat = self.layout.msg("_", lab, "_", 0, 0)
                    parts.append(f"{p.name}.d ?? [{pat}]")
                else:
                    self.uses_c_nummsg = True
                    parts.append(
                        "c_expr { numMsg(qptr(%s-1), %d) >= %d }"
                        % (self.cscope(t.owner, p), lab, k)
                    )
        for pname in t.inhibitors:
            p = self.spec.resolve_place(t.owner, pname)
            if self.is_uncolored(p):
                parts.append(f"{p.name} == 0")
            elif not p.is_net:
                parts.append(f"len({p.name}.d) == 0")
            else:
                pat = self.layout.msg("_", 255, "_", 0, 0)
                parts.append(f"!({p.name}.d ?? [{pat}])")
        return " && ".join(parts) if parts else "true"

    # -- consume / produce ------------------------------------------------------------

    def consume_actions(self, t: TransitionDecl) -> list[str]:
        self._transported = {
            v.name
            for _, e in t.outputs
            for v in e.variables()
            if _net_var(self.spec, self.spec.components[t.owner], v)
        }
        out = []
        for p, expr in self.sorted_arcs(t, t.inputs):
            if self.is_uncolored(p):
                n = len(expr.terms)
                out.append(f"{p.name}--;" if n == 1 else f"{p.name} = {p.name} - {n};")
            elif not p.is_net:
                for term in expr.terms:
                    if isinstance(term, Const):
                        out.append(f"{p.name}.d ?? {self.code(term.value)};")
                for term in expr.terms:
                    if isinstance(term, Var):
                        tgt = "_" if term.anon else term.name
                        out.append(f"{p.name}.d ?? {tgt};")
            else:
                for term in expr.terms:
                    out.extend(self.net_consume(t, p, term))
        return out

    def net_consume(self, t, p, term) -> list[str]:
        """Consume or transport one net token bound at place ``p``."""
        lab = self.lvl(t)
        moved_to = None
        for q, e in t.outputs:
            if any(v.name == term.name for v in e.variables()):
                moved_to = self.spec.resolve_place(t.owner, q)
        lay = self.layout
        out = [f"{p.name}.d ?? {lay.msg('nt', lab, 'it' if lay.has_tid else 0, 0, 0)};"]
        lower = _kind(self.spec, t) == LOWER
        if moved_to is None:
            out.append(f"consNetTok({p.name}.d,nt);")
            if self.o.variant == PRIORITIES:
                out.append(f"{p.name}.d ! {lay.msg('nt', lab, 'it' if lay.has_tid else 0, 1, 1)};")
                out.append(f"set_priority(nt, {5 if lower else 3});")
            else:
                n = 5 if lower else 3
                cls = _GB_CLASS[self.o.variant]["sync" if lower else "nosync"]
                out.append(f"gbChan !! {cls},nt,{lab},{p.name}.d,1;")
                if self.o.variant == IMPROVED:
                    out.append(f"set_priority(nt, {n});")
        elif moved_to.name == p.name:
            # staying put: only synchronized transports need a response at all
            if lower:
                if self.o.variant == PRIORITIES:
                    out.append(f"{p.name}.d ! {lay.msg('nt', lab, 'it' if lay.has_tid else 0, 1, 0)};")
                    out.append("set_priority(nt, 5);")
                else:
                    cls = _GB_CLASS[self.o.variant]["sync"]
                    out.append(f"gbChan !! {cls},nt,{lab},{p.name}.d,0;")
                    if self.o.variant == IMPROVED:
                        out.append("set_priority(nt, 5);")
            else:
                out.pop()  # unlabeled same-place transport: nothing to do
        else:
            out.append(f"transpNetTok({p.name}.d,{moved_to.name}.d,nt);")
            if self.o.variant == PRIORITIES:
                out.append(f"gbChan ! nt,{moved_to.name}.d,{lab},{'it' if lay.has_tid else 0};")
                if lower:
                    out.append("set_priority(nt, 5);")
                else:
                    out.append("set_priority(nt, 3);")
                    out.append(f"{moved_to.name}.d ! {lay.msg('nt', 255, 0, 0, 0)};")
            else:
                n = 5 if lower else 3
                cls = _GB_CLASS[self.o.variant]["sync" if lower else "nosync"]
                if not lower:
                    out.append(f"{moved_to.name}.d ! {lay.msg('nt', 255, 0, 0, 0)};")
                out.append(f"gbChan !! {cls},nt,{lab},{moved_to.name}.d,0;")
                if self.o.variant == IMPROVED:
                    out.append(f"set_priority(nt, {n});")
        return out

    def produce_actions(self, t: TransitionDecl, skip_creations=False) -> list[str]:
        out = []
        for p, expr in self.sorted_arcs(t, t.outputs):
            if self.is_uncolored(p):
                n = len(expr.terms)
                out.append(f"{p.name}++;" if n == 1 else f"{p.name} = {p.name} + {n};")
            elif not p.is_net:
                for term in expr.terms:
                    if isinstance(term, Const):
                        out.append(f"{p.name}.d ! {self.code(term.value)};")
                    elif term.anon:
                        ct = self.spec.color_type(p.ptype.name)
                        opts = " ".join(
                            f":: {p.name}.d ! {self.code(v)}" for v in ct.values
                        )
                        out.append(f"if {opts} fi;")
                    else:
                        out.append(f"{p.name}.d ! {term.name};")
            else:
                for term in expr.terms:
                    if isinstance(term, NetConst) and not skip_creations:
                        out.extend(self.net_create(p, term.component))
        for place, bound in self.o.bound_asserts:
            if any(q == place for q, _ in t.outputs):
                p = self.spec.resolve_place(t.owner, place)
                if self.is_uncolored(p):
                    out.append(f"assert({place} <= {bound});")
                else:
                    out.append(f"assert(len({place}.d) <= {bound});")
        return out

    def net_create(self, p, comp_name) -> list[str]:
        comp = self.spec.component(comp_name)
        lay = self.layout
        at_place = f"{p.name}.d ! {lay.msg('nt', 255, 0, 0, 0)};"
        if self.o.variant == PRIORITIES:
            prio = "" if self._init_at_decl(comp) else " priority 2"
            return [f"nt = run {self.pname(comp)}({p.name}.d){prio};", at_place]
        run = f"nt = run {self.pname(comp)}()"
        run += " priority 2;" if self.o.variant == IMPROVED else ";"
        cls = _GB_CLASS[self.o.variant]["create"]
        return [run, at_place, f"gbChan !! {cls},nt,255,{p.name}.d,0;"]

    def _init_at_decl(self, comp) -> bool:
        """True when the whole initial marking fits variable initializers."""
        if not self.o.opt("initAtDecl") or self.o.variant != PRIORITIES:
            return False
        return all(
            self.is_uncolored(comp.place(p)) for p, _ in comp.initial
        )

    def rm_confs(self, t: TransitionDecl, chan: str) -> list[str]:
        out = []
        for u in conflict_set(self.spec, t):
            ident = (
                self.lbytes[u.label] if self.layout.label_as_id else self.tid(u)
            )
            out.append(f"rmConf({chan},{ident});")
        return out

    # -- top-level sections -----------------------------------------------------------

    def header(self):
        o = self.o
        self.emit(f"/* PROMELA model generated from net system \"{self.spec.name}\" */")
        self.emit(f"/* variant: {o.variant}")
        if o.optimizations:
            self.emit(" * optimizations: " + ", ".join(sorted(o.optimizations)))
        if o.variant in (PRIORITIES, IMPROVED):
            self.emit(" * process priorities in use: compile pan without partial")
            self.emit(" * order reduction, e.g.  cc -DNOREDUCE -o pan pan.c")
        self.emit(" */")
        self.emit(f"#define MaxTok {self.max_tok}")
        self.emit(f"#define MaxMsg {self.max_msg}")
        self.emit()
        named = [ct for ct in self.spec.color_types if ct.name != "dots"]
        if named:
            for ct in named:
                codes = " ".join(f"{v}={self.code(v)}" for v in ct.values)
                self.emit(f"/* type {ct.name}: {codes} */")
        if self.lbytes:
            codes = " ".join(f"{l}={b}" for l, b in self.lbytes.items())
            self.emit(f"/* sync labels: {codes} */")
        tids = " ".join(
            f"{self.spec.components[c].name}.{t}={n}"
            for (c, t), n in self.tids.items()
        )
        self.emit(f"/* transitions: {tids} */")
        self.emit()
        if any(not p.is_net and p.ptype.name != "dots"
               for c in self.spec.components for p in c.places):
            self.emit("typedef BasicPlace { chan d = [MaxTok] of {byte} }")
        if any(p.is_net for c in self.spec.components for p in c.places):
            self.emit(self.layout.net_typedef())
        if self.layout.use_gbchan:
            if self.o.variant == PRIORITIES:
                self.emit("chan gbChan = [MaxMsg] of {byte, chan, byte, byte};")
            else:
                self.emit("chan gbChan = [MaxMsg] of {byte, byte, byte, chan, bit};")
        self.emit()

    def aux_code(self):
        lay = self.layout
        has_net_places = any(p.is_net for c in self.spec.components for p in c.places)
        has_elements = len(self.spec.components) > 1
        if has_elements or has_net_places:
            self.emit("byte nt,lt,it; bit rm;")
        if not has_net_places:
            if self.uses_c_numtok:
                self._c_helpers()
            return
        msg = lay.msg
        tid = "f2" if lay.has_tid else 0
        vtid = "v2" if lay.has_tid else 0
        params = "ch,f0,f1" + (",f2" if lay.has_tid else "")
        self.emit("NetPlace cha;")
        self.emit("byte v0,v1,v2;")
        self.emit()
        self.emit("/* nondeterministic receive of a request-shaped message */")
        self.emit(f"inline recMsg({params}){{")
        self.emit(f" do:: ch ?? [{msg('f0', 'f1', tid, 0, 0)}] ->")
        self.emit(f"        ch ?? {msg('f0', 'f1', tid, 0, 0)};")
        self.emit(f"        cha.d ! {msg('f0', 'f1', tid, 0, 0)};")
        self.emit("   :: else -> break")
        self.emit(" od;")
        self.emit(f" cha.d ? {msg('f0', 'f1', tid, 0, 0)};")
        wild = ",".join("_" * lay.req_width())
        self.emit(f" do:: cha.d ?? [{wild}]->")
        self.emit(f"      if :: cha.d ? {msg('v0', 'v1', vtid, 0, 0)};")
        self.emit(f"              ch  ! {msg('v0', 'v1', vtid, 0, 0)};")
        self.emit(f"         ::   ch  ! {msg('f0', 'f1', tid, 0, 0)};")
        self.emit(f"            cha.d ? {msg('f0', 'f1', tid, 0, 0)};")
        self.emit("      fi")
        self.emit("   :: else -> break")
        self.emit("  od; skip }")
        self.emit()
        self.emit("inline consNetTok(ch, p){")
        self.emit(f"  do:: ch ?? [{msg('eval(p)', '_', '_' if lay.has_tid else 0, 0, 0)}] ->")
        self.emit(f"       ch ?? {msg('eval(p)', '_', '_' if lay.has_tid else 0, 0, 0)};")
        self.emit("    :: else -> break")
        self.emit("  od; skip }")
        self.emit()
        self.emit("inline consNetsAtPlace(ch){")
        self.emit(f" do:: ch ?? [{msg('_', 255, 0, 0, 0)}] ->")
        self.emit(f"      ch ?? {msg('nt', 255, 0, 0, 0)};")
        self.emit("      consNetTok(ch, nt);")
        if self.o.variant == PRIORITIES:
            self.emit(f"      ch ! {msg('nt', 255, 0, 1, 1)};")
            self.emit("      set_priority(nt, 3);")
        else:
            cls = _GB_CLASS[self.o.variant]["nosync"]
            self.emit(f"      gbChan !! {cls},nt,255,ch,1;")
            if self.o.variant == IMPROVED:
                self.emit("      set_priority(nt, 3);")
        self.emit("   :: else -> break")
        self.emit(" od; skip }")
        self.emit()
        self.emit("inline transpNetTok(ch, och, p){")
        self.emit(f"  do:: ch ?? [{msg('eval(p)', '_', '_' if lay.has_tid else 0, 0, 0)}] ->")
        self.emit(f"       ch ?? {msg('eval(p)', 'v1', vtid, 0, 0)};")
        self.emit(f"       och ! {msg('p', 'v1', vtid, 0, 0)};")
        self.emit("    :: else -> break")
        self.emit("  od; skip }")
        self.emit()
        self.emit("inline rmConf(ch, t){")
        if lay.label_as_id:
            pat = msg("eval(_pid)", "t", 0, 0, 0)
        else:
            pat = msg("eval(_pid)", "_", "t", 0, 0)
        self.emit(f"  if :: ch ?? [{pat}] -> ch ?? {pat}")
        self.emit("     :: else")
        self.emit("  fi }")
        self.emit()
        if self.uses_c_numtok or self.uses_c_nummsg:
            self._c_helpers()

    def _c_helpers(self):
        lay = self.layout
        fields = lay.net_fields()
        names = [f"fld{i}" for i in range(len(fields))]
        bytes_ = [n for (ty, _), n in zip(fields, names) if ty == "byte"]
        bits = [n for (ty, _), n in zip(fields, names) if ty == "bit"]
        decl = f"uchar {', '.join(bytes_)};"
        if bits:
            decl += " unsigned " + ", ".join(f"{b} : 1" for b in bits) + ";"
        label_f = names[1]
        req_f = names[3] if lay.has_req and lay.has_tid else (
            names[2] if lay.has_req else None
        )
        req_test = f" &&\n           ( ((QNP *)z)->contents[k].{req_f} == 0 )" if req_f else ""
        self.emit("c_code{  typedef struct QNP {")
        self.emit("             uchar Qlen; /* q_size */")
        self.emit("             uchar _t;   /* q_type */")
        self.emit("             struct {")
        self.emit(f"                 {decl}")
        self.emit("             } contents[MaxMsg]; } QNP;")
        self.emit()
        self.emit("         typedef struct QBP {")
        self.emit("             uchar Qlen;")
        self.emit("             uchar _t;")
        self.emit("             struct { uchar fld0; } contents[MaxTok]; } QBP;")
        self.emit()
        self.emit("         int numMsg(uchar *z, int lab){")
        self.emit("             int n = ((Q0 *)z)->Qlen, c = 0, k;")
        self.emit("             for (k = 0; k<n; k++)")
        self.emit(f"               if ( ( ((QNP *)z)->contents[k].{label_f} == lab ){req_test} )   c++;")
        self.emit("             return c; }")
        self.emit()
        self.emit("         int numTok(uchar *z, int v){")
        self.emit("             int n = ((Q0 *)z)->Qlen, c = 0, k;")
        self.emit("             for (k = 0; k<n; k++)")
        self.emit("               if ( ((QBP *)z)->contents[k].fld0 == v )   c++;")
        self.emit("             return c; }")
        self.emit("};")
        self.emit()
        self.emit("/* numMsg/numTok count channel entries matching a label or value;")
        self.emit('   call as numMsg(qptr(PProcName->c - 1), v), with "now." for globals. */')
        self.emit()

    def globals_and_counters(self):
        comp = self.spec.components[0]
        self.emit("/* system-net places (globals so properties can observe them) */")
        for p in comp.places:
            init = comp.initial_terms(p.name)
            if self.is_uncolored(p):
                n = len(init)
                if self.o.narrow_types:
                    width = max(1, (max(n, self.max_tok)).bit_length())
                    suffix = f" = {n}" if n else ""
                    self.emit(f"unsigned {p.name} : {width}{suffix};")
                else:
                    self.emit(f"byte {p.name}{f' = {n}' if n else ''};")
            elif not p.is_net:
                self.emit(f"BasicPlace {p.name};")
            else:
                self.emit(f"NetPlace {p.name};")
        if self.o.counters:
            self.emit("byte f;  /* net tokens created */")
            if self.o.counter_init_place:
                self.emit("byte a;  /* initial marking snapshot */")
        self.emit()

    # -- element nets -----------------------------------------------------------------

    def element_net(self, comp):
        lay = self.layout
        o = self.o
        if o.variant == PRIORITIES:
            self.emit(f"proctype {self.pname(comp)}(chan pc){{")
        else:
            self.emit(f"proctype {self.pname(comp)}(){{")
            self.emit("chan pc;")
        decls = []
        for p in comp.places:
            init = comp.initial_terms(p.name)
            if self.is_uncolored(p):
                decls.append(f"byte {p.name}{f'={len(init)}' if init else ''};")
            elif not p.is_net:
                decls.append(f"BasicPlace {p.name};")
            else:
                decls.append(f"NetPlace {p.name};")
        for v, ty in comp.variables:
            if self.spec.component(ty) is None:
                decls.append(f"byte {v};")
        if decls:
            self.emit(" ".join(decls))
        if o.counters:
            self.emit("f++;")

        init_stmts = self._element_init_stmts(comp)
        if o.variant == PRIORITIES:
            if init_stmts or not self._init_at_decl(comp):
                body = init_stmts + ["set_priority(_pid, 1);"]
                if self._init_at_decl(comp):
                    body = init_stmts  # nothing to do beyond declarations
                if body:
                    self.emit("atomic{ " + _block(body, " ") + " }")
        else:
            cls = _GB_CLASS[o.variant]["open"]
            tail = ["set_priority(_pid, 1);"] if o.variant == IMPROVED else []
            stmts = init_stmts + tail
            if stmts:
                self.emit(
                    "atomic{ gbChan ? %s,eval(_pid),255,pc,0; %s }"
                    % (cls, _block(stmts, " "))
                )
            else:
                self.emit(f"atomic{{ gbChan ? {cls},eval(_pid),255,pc,0 }}")

        if o.variant == PRIORITIES:
            self._element_priorities(comp)
        else:
            self._element_single_loop(comp)
        sweeps = [
            f"consNetsAtPlace({p.name}.d);"
            for p in comp.places
            if p.is_net
        ]
        if sweeps:
            self.emit(f"d_step{{ {_block(sweeps, ' ')} }};")
        if o.variant in (PRIORITIES, IMPROVED):
            self.emit("set_priority(_pid, 1)")
        else:
            self.emit("skip")
        self.emit("}")
        self.emit()

    def _element_init_stmts(self, comp) -> list[str]:
        stmts = []
        for p in comp.places:
            init = comp.initial_terms(p.name)
            if not init or self.is_uncolored(p):
                continue
            for term in init:
                if isinstance(term, Const):
                    stmts.append(f"{p.name}.d ! {self.code(term.value)};")
                else:
                    stmts.extend(self.net_create(p, term.component))
        return stmts

    def _request_options(self, comp):
        """Op3 requests plus one Op4 setup per horizontal label used here."""
        lay = self.layout
        out = []
        guard_prefix = "" if self.o.variant == PRIORITIES else "empty(gbChan) && "
        for t in comp.transitions:
            if _kind(self.spec, t) not in (UPPER, HORIZONTAL):
                continue
            lab = self.lbytes[t.label]
            ident = lab if lay.label_as_id else self.tid(t)
            if (comp.index, t.label) in self.elidable and lay.has_tid:
                pat = lay.msg("eval(_pid)", lab, ident, 0, 0)
            else:
                pat = lay.msg("eval(_pid)", lab, "_" if lay.has_tid else 0, 0, 0)
            send = lay.msg("_pid", lab, ident if lay.has_tid else 0, 0, 0)
            out.append(
                f"d_step{{ {guard_prefix}{self.enable_test(t)} && !pc ?? [{pat}] ->"
                f" pc ! {send} }}"
            )
        seen = set()
        for t in comp.transitions:
            if _kind(self.spec, t) != HORIZONTAL or t.label in seen:
                continue
            seen.add(t.label)
            ldecl = self.spec.label(t.label)
            lab = self.lbytes[t.label]
            self.uses_c_nummsg = True
            guard = (
                f"pc ?? [{lay.msg('eval(_pid)', lab, '_' if lay.has_tid else 0, 0, 0)}] && "
                "c_expr { numMsg(qptr(P%s->pc-1), %d) >= %d }"
                % (self.pname(comp), lab, ldecl.arity)
            )
            body = []
            if self.o.variant in (PRIORITIES, IMPROVED):
                body.append("set_priority(_pid, 6);")
            it = "it" if lay.has_tid else 0
            if self.o.variant == PRIORITIES:
                body.append(f"pc ?? {lay.msg('eval(_pid)', lab, it, 0, 0)};")
                body.append(f"pc ! {lay.msg('_pid', lab, it, 1, 0)};")
                for _ in range(ldecl.arity - 1):
                    body.append(f"pc ?? {lay.msg('nt', lab, it, 0, 0)};")
                    body.append(f"pc ! {lay.msg('nt', lab, it, 1, 0)};")
                    body.append("set_priority(nt, 4);")
            elif self.o.variant == IMPROVED:
                body.append(f"pc ?? {lay.msg('eval(_pid)', lab, it, 0, 0)};")
                body.append(f"gbChan !! {_GB_CLASS[IMPROVED]['horiz_init']},_pid,{lab},pc,0;")
                for _ in range(ldecl.arity - 1):
                    body.append(f"pc ?? {lay.msg('nt', lab, it, 0, 0)};")
                    body.append(f"gbChan !! {_GB_CLASS[IMPROVED]['horiz']},nt,{lab},pc,0;")
                    body.append("set_priority(nt, 4);")
            else:
                for _ in range(ldecl.arity):
                    body.append(f"pc ?? {lay.msg('nt', lab, it, 0, 0)};")
                    body.append(f"gbChan !! {_GB_CLASS[NO_PRIORITIES]['horiz']},nt,{lab},pc,0;")
            prefix = "" if self.o.variant == PRIORITIES else "empty(gbChan) && "
            out.append(f"d_step{{ {prefix}{guard} ->\n      " + _block(body, "\n      ") + " }")
        return out

    def _firing_body(self, comp, t, split: bool) -> list[str]:
        """consume; produce; rmConf; marker -- the shared core of a firing."""
        body = self.consume_actions(t)
        if split:
            body += self.rm_confs(t, "pc")
            lay = self.layout
            body.append(f"pc ! {lay.msg('_pid', 0, self.tid(t), 1, 0)};")
            return body
        body += self.produce_actions(t)
        if comp.index:  # the system net never posts requests, so never cleans them
            body += self.rm_confs(t, "pc")
        body.append(self.marker(comp, t))
        return body

    def _element_priorities(self, comp):
        lay = self.layout
        end = "endidle: " if self.o.valid_end_states else ""
        self.emit("do")
        self.emit(f":: {{ {end}do")
        options = []
        for t in comp.transitions:
            kind = _kind(self.spec, t)
            if kind in (UPPER, HORIZONTAL):
                continue
            if _creates(t):  # Op2: consume inside, produce after the response
                body = ["set_priority(_pid, 6);"] + self._firing_body(comp, t, split=True)
            else:  # Op1
                body = (
                    ["set_priority(_pid, 6);"]
                    + self._firing_body(comp, t, split=False)
                    + ["set_priority(_pid, 1);"]
                )
            options.append(
                f"d_step{{ {self.enable_test(t)} ->\n      " + _block(body, "\n      ") + " }"
            )
        options.extend(self._request_options(comp))
        if not options:
            options.append("d_step{ false -> skip }")
        for opt in options:
            self.emit(f"   :: {opt}")
        self.emit("   od }")
        # escape: a response message ends the inner loop
        recv = lay.msg("eval(_pid)", "lt", "it" if lay.has_tid else "_", 1, "rm")
        if lay.use_gbchan:
            self.emit("   unless atomic{ (gbChan ?? [eval(_pid),_,_,_] || pc ?? [%s]) ->"
                      % lay.msg("eval(_pid)", "_", "_" if lay.has_tid else "_", 1, "_"))
            self.emit("     if")
            self.emit("     :: gbChan ?? [eval(_pid),_,_,_] -> gbChan ?? eval(_pid),pc,lt,it; rm = 0")
            self.emit(f"     :: else -> pc ?? {recv}")
            self.emit("     fi;")
        else:
            self.emit(f"   unless atomic{{ pc ?? {recv} ->")
        self._dispatch(comp, indent="     ")
        if lay.drop_rm:
            self.emit("     set_priority(_pid, 1) }")
        else:
            self.emit("     if :: rm -> break :: else -> set_priority(_pid, 1) fi }")
        self.emit("od;")

    def _element_single_loop(self, comp):
        lay = self.layout
        end = "endidle: " if self.o.valid_end_states else ""
        self.emit(f"{end}do")
        for t in comp.transitions:
            kind = _kind(self.spec, t)
            if kind in (UPPER, HORIZONTAL):
                continue
            body = self._firing_body(comp, t, split=False)
            if self.o.variant == IMPROVED:
                body = ["set_priority(_pid, 6);"] + body + ["set_priority(_pid, 1);"]
            self.emit(f":: atomic{{ empty(gbChan) && {self.enable_test(t)} ->")
            self.emit("   " + _block(body, "\n   ") + " }")
        for opt in self._request_options(comp):
            self.emit(f":: {opt}")
        self.emit(":: atomic{ gbChan ? _,eval(_pid),lt,pc,rm ->")
        self._dispatch(comp, indent="   ")
        self.emit("   if :: rm -> break :: else fi" + ("; set_priority(_pid, 1) }" if self.o.variant == IMPROVED else " }"))
        self.emit("od;")

    def _dispatch(self, comp, indent):
        """The response dispatch: one branch per sync firing plus bookkeeping."""
        lay = self.layout
        branches = []
        for t in comp.transitions:
            kind = _kind(self.spec, t)
            if self.o.variant == PRIORITIES and _creates(t) and kind in ("", LOWER):
                produce = self.produce_actions(t) + [self.marker(comp, t)]
                branches.append((f"it == {self.tid(t)}", produce, False))
            if kind not in (UPPER, HORIZONTAL):
                continue
            lab = self.lbytes[t.label]
            body = self._firing_body(comp, t, split=False)
            elide = (comp.index, t.label) in self.elidable
            if elide and lay.has_tid and len(
                [u for u in comp.transitions if u.label == t.label]
            ) > 1:
                cond = f"it == {self.tid(t)}"
            elif elide:
                cond = f"lt == {lab}"
            else:
                cond = f"lt == {lab} && {self.enable_test(t)}"
            # with the rm field dropped every synchronized consumption must
            # end the process explicitly
            breaks = kind == UPPER and lay.drop_rm and lay.has_consumes
            branches.append((cond, body, breaks))
        lines = [f"{indent}if"]
        for cond, body, brk in branches:
            lines.append(f"{indent}:: {cond} ->")
            for stmt in body:
                lines.append(f"{indent}   {stmt}")
            if brk:
                lines.append(f"{indent}   break")
        if lay.drop_rm:
            lines.append(f"{indent}:: it == 0 -> break" if lay.has_tid
                         else f"{indent}:: lt == 255 -> break")
        else:
            lines.append(f"{indent}:: lt == 255 -> skip")
        lines.append(f"{indent}fi;")
        for l in lines:
            self.emit(l)

    # -- init process ------------------------------------------------------------------

    def system_net(self):
        comp = self.spec.components[0]
        o = self.o
        self.emit("init{")
        decls = []
        for v, ty in comp.variables:
            if self.spec.component(ty) is None:
                decls.append(f"byte {v};")
        if decls:
            self.emit(" ".join(decls))
        stmts = self._element_init_stmts(comp)
        if o.counters and o.counter_init_place:
            stmts.append(f"a = {o.counter_init_place};")
        if stmts:
            if o.variant == PRIORITIES:
                self.emit("atomic{ set_priority(_pid, 2); " + " ".join(stmts)
                          + " set_priority(_pid, 1) }")
            else:
                self.emit("atomic{ " + _block(stmts, " ") + " }")
        labels = ""
        if o.valid_end_states:
            labels += "endsn: "
        if o.acceptance_label:
            labels += "accept_step: "
        self.emit(f"{labels}do")
        guard_prefix = "" if o.variant == PRIORITIES else "empty(gbChan) && "
        for t in comp.transitions:
            body = self._firing_body(comp, t, split=False)
            if o.variant in (PRIORITIES, IMPROVED):
                body = ["set_priority(_pid, 6);"] + body + ["set_priority(_pid, 1);"]
            region = "atomic" if (_creates(t) or o.variant != PRIORITIES) else "d_step"
            self.emit(f":: {region}{{ {guard_prefix}{self.enable_test(t)} ->")
            self.emit("   " + _block(body, "\n   ") + " }")
        if o.dead_dump:
            self.emit(f":: timeout -> atomic{{ {self._dump_stmt()} assert(false) }}")
        elif not comp.transitions:
            self.emit(":: d_step{ false -> skip }")
        self.emit("od")
        self.emit("}")
        self.emit()

    def _dump_stmt(self) -> str:
        # plain printf so that guided trail replay (which skips embedded C)
        # still shows the valuation; channel lengths count tokens plus any
        # requests still pending at the dead state
        comp = self.spec.components[0]
        parts = []
        args = []
        for p in comp.places:
            if self.is_uncolored(p):
                parts.append(f"{p.name}=%d")
                args.append(p.name)
            else:
                parts.append(f"{p.name}=%d")
                args.append(f"len({p.name}.d)")
        fmt = "@DEAD " + " ".join(parts) + "\\n"
        return f'printf("{fmt}", {", ".join(args)});' if args else f'printf("{fmt}");'

    # -- assembly ---------------------------------------------------------------------

    def render(self) -> str:
        # body first: it decides whether the embedded C helpers are needed
        body = _Collector()
        keep, self.emit = self.emit, body.emit
        for comp in self.spec.components[1:]:
            self.element_net(comp)
        self.system_net()
        if self.o.ltl:
            self.emit(f"ltl req {{ {self.o.ltl} }}")
        self.emit = keep

        self.header()
        self.globals_and_counters()
        self.aux_code()
        self.lines.extend(body.lines)
        return "\n".join(self.lines).rstrip() + "\n"


class _Collector:
    def __init__(self):
        self.lines = []

    def emit(self, line=""):
        self.lines.append(line)


def _block(parts, sep) -> str:
    """Join statements for a {...} body; the last one must not end in ';'."""
    txt = sep.join(parts)
    return txt[:-1] if txt.endswith(";") else txt


def translate(spec: NpnSpec, options: CodegenOptions | None = None) -> PromelaModel:
    """Compile a validated net system into a PROMELA model."""
    options = options or CodegenOptions()
    if options.variant not in VARIANTS:
        raise CodegenError(f"unknown variant {options.variant!r}")
    em = _Emitter(spec, options)
    source = em.render()
    return PromelaModel(
        source=source,
        variant=options.variant,
        transition_ids=em.tids,
        label_bytes=em.lbytes,
        step_map=em.step_map,
        max_tok=em.max_tok,
        max_msg=em.max_msg,
    )
