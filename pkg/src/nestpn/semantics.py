"""Executable step semantics for nested Petri nets.

Markings are immutable values; net tokens carry their own markings plus a
runtime id (``rtid``) that identifies an occurrence for tracing and replay but
never takes part in structural equality.  Shared places live once, in the
system marking: element-net firings read and write them there, and both the
consumption and the production side of a firing apply to them.

The three step kinds:

* autonomous -- one unlabeled transition fires in the system net or any token;
* vertical   -- a lower-labeled transition fires together with one
  complement-labeled firing in every net token bound by it; bound tokens are
  consumed, or transported when the net variable reappears in an output arc;
* horizontal -- ``ar(l)`` distinct tokens at one place fire their l-labeled
  transitions simultaneously and stay where they are.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, product

from .model import (
    Const,
    HORIZONTAL,
    LOWER,
    NetConst,
    NpnSpec,
    TransitionDecl,
    UPPER,
    Var,
)


class SemanticsError(Exception):
    pass


class StaleStepError(SemanticsError):
    """The step refers to tokens that the marking no longer contains."""


# --- tokens and markings -----------------------------------------------------


class NetToken:
    """A marked element net occurring as a token."""

    __slots__ = ("component", "marking", "rtid", "_skey")

    def __init__(self, component: int, marking: "Marking", rtid: int):
        self.component = component
        self.marking = marking
        self.rtid = rtid
        self._skey = ("N", component, marking.key)

    @property
    def skey(self):
        return self._skey

    def __eq__(self, other):
        return isinstance(other, NetToken) and self._skey == other._skey

    def __hash__(self):
        return hash(self._skey)

    def __repr__(self):
        return f"NetToken(c{self.component}#{self.rtid})"


def token_key(tok):
    """Structural identity of a token; rtids never contribute."""
    return ("B", tok) if isinstance(tok, str) else tok.skey


def _token_sort_key(tok):
    if isinstance(tok, str):
        return (0, tok, 0)
    return (1, tok.skey, tok.rtid)


class Marking:
    """Token multisets for the places of one component, in declaration order.

    The system marking (component 0) additionally carries the rtid counter
    used when firings create fresh net tokens, so that replaying the same
    steps always reproduces the same rtids.
    """

    __slots__ = ("component", "places", "next_rtid", "_key", "_hash")

    def __init__(self, component: int, places: tuple, next_rtid: int = 1):
        self.component = component
        self.places = places  # tuple[tuple[token, ...], ...]
        self.next_rtid = next_rtid
        self._key = (component,) + tuple(
            tuple(token_key(t) for t in toks) for toks in places
        )
        self._hash = hash(self._key)

    @property
    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, Marking) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Marking(c{self.component}, {self.places!r})"


def _freeze(tokens) -> tuple:
    return tuple(sorted(tokens, key=_token_sort_key))


def state_key(marking: Marking) -> bytes:
    """Canonical byte string of a marking; equal iff structurally equal."""
    return repr(marking.key).encode()


# --- spec index --------------------------------------------------------------


class _Index:
    def __init__(self, spec: NpnSpec):
        self.spec = spec
        self.place_pos = []  # per component: name -> index
        self.trans = []  # per component: name -> TransitionDecl
        self.vtypes = []  # per component: var -> type name
        for comp in spec.components:
            self.place_pos.append({p.name: i for i, p in enumerate(comp.places)})
            self.trans.append({t.name: t for t in comp.transitions})
            self.vtypes.append(dict(comp.variables))
        self.labels = {l.name: l for l in spec.labels}
        self.comp_index = {c.name: c.index for c in spec.components}
        self.horizontal = [l for l in spec.labels if l.kind == HORIZONTAL]
        self.upper_by_label = []  # per component: label -> [TransitionDecl]
        for comp in spec.components:
            by = {}
            for t in comp.transitions:
                lab = self.labels.get(t.label)
                if lab and lab.kind in (UPPER, HORIZONTAL):
                    by.setdefault(t.label, []).append(t)
            self.upper_by_label.append(by)

    def kind_of(self, t: TransitionDecl) -> str:
        if not t.label:
            return ""
        return self.labels[t.label].kind

    def is_shared(self, owner: int, pname: str) -> bool:
        if owner != 0 and pname in self.place_pos[owner]:
            return False
        p = self.spec.system.place(pname)
        return p is not None and p.shared


@lru_cache(maxsize=32)
def _index(spec: NpnSpec) -> _Index:
    return _Index(spec)


# --- initial markings ---------------------------------------------------------


def _build_initial(spec, idx, comp_index, alloc):
    comp = spec.components[comp_index]
    places = []
    for p in comp.places:
        toks = []
        for term in comp.initial_terms(p.name):
            if isinstance(term, Const):
                toks.append(term.value)
            elif isinstance(term, NetConst):
                child = idx.comp_index[term.component]
                sub = _build_initial(spec, idx, child, alloc)
                toks.append(NetToken(child, sub, alloc()))
        places.append(_freeze(toks))
    return Marking(comp_index, tuple(places))


def initial_marking(spec: NpnSpec) -> Marking:
    idx = _index(spec)
    counter = [0]

    def alloc():
        counter[0] += 1
        return counter[0]

    m = _build_initial(spec, idx, 0, alloc)
    return Marking(0, m.places, next_rtid=counter[0] + 1)


def fresh_net_token(spec: NpnSpec, component: int, rtid_alloc) -> NetToken:
    """A net token carrying exactly the component's initial marking."""
    idx = _index(spec)
    rtid = rtid_alloc()
    sub = _build_initial(spec, idx, component, rtid_alloc)
    return NetToken(component, sub, rtid)


# --- bindings ----------------------------------------------------------------


class Binding:
    """Assignment of tokens to the variables of one transition's arcs,
    including desugared anonymous variables and the values chosen for
    anonymous output terms."""

    __slots__ = ("assignments", "_key")

    def __init__(self, assignments: dict):
        self.assignments = dict(assignments)
        self._key = tuple(
            (v, token_key(tok)) for v, tok in sorted(self.assignments.items())
        )

    @property
    def key(self):
        return self._key

    def get(self, var: str):
        return self.assignments.get(var)

    def net_tokens(self):
        return [t for t in self.assignments.values() if isinstance(t, NetToken)]

    def __eq__(self, other):
        return isinstance(other, Binding) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Binding({self.assignments!r})"


def resolve_path(marking: Marking, path) -> Marking | None:
    """Follow (place, rtid) pairs from the system marking down to a token's
    marking; ``None`` when the path no longer resolves."""
    if path == ():
        return marking
    tok = _resolve_token(marking, path)
    return tok.marking if tok is not None else None


def _resolve_token(marking: Marking, path):
    current = marking
    tok = None
    for _, rtid in path:
        tok = None
        for toks in current.places:
            for t in toks:
                if isinstance(t, NetToken) and t.rtid == rtid:
                    tok = t
                    break
            if tok is not None:
                break
        if tok is None:
            return None
        current = tok.marking
    return tok


def _available(idx, sysmark, local, owner, pname):
    """Tokens offered by a place reference: own place, or the shared system
    place when the name is not local to the owner."""
    pos = idx.place_pos[owner].get(pname)
    if pos is None or (owner == 0 and idx.is_shared(0, pname)):
        return sysmark.places[idx.place_pos[0][pname]]
    return local.places[pos]


def _arc_assignments(idx, owner, expr, tokens):
    """All distinct value assignments for one input arc over ``tokens``.

    Constants consume matching occurrences first; variables then draw from
    what is left, one occurrence per variable, deduplicated by token value.
    """
    groups: dict = {}
    order: list = []
    for t in tokens:
        k = token_key(t)
        if k not in groups:
            groups[k] = []
            order.append(k)
        groups[k].append(t)
    remaining = {k: len(v) for k, v in groups.items()}
    for term in expr.terms:
        if isinstance(term, Const):
            k = ("B", term.value)
            if remaining.get(k, 0) < 1:
                return []
            remaining[k] -= 1
    variables = expr.variables()
    vtypes = idx.vtypes[owner]
    results = []
    assignment = {}

    def candidates(var):
        want = None if var.anon else vtypes.get(var.name)
        want_comp = idx.comp_index.get(want) if want else None
        for k in order:
            if remaining[k] < 1:
                continue
            sample = groups[k][0]
            if want is None:
                yield k
            elif isinstance(sample, str):
                if want_comp is None:
                    yield k  # type agreement is the validator's business
            elif want_comp is not None and sample.component == want_comp:
                yield k

    def rec(i):
        if i == len(variables):
            results.append(dict(assignment))
            return
        var = variables[i]
        for k in candidates(var):
            remaining[k] -= 1
            assignment[var.name] = k
            rec(i + 1)
            del assignment[var.name]
            remaining[k] += 1

    rec(0)
    # distinct occurrences for equal values: hand out group members in order
    fixed = []
    for done in results:
        counts: dict = {}
        final = {}
        for v in sorted(done):
            k = done[v]
            n = counts.get(k, 0)
            final[v] = groups[k][n]
            counts[k] = n + 1
        fixed.append(final)
    return fixed


def enabled_bindings(spec: NpnSpec, sysmark: Marking, path, transition) -> list[Binding]:
    """Every binding enabling ``transition`` at the token addressed by ``path``,
    in canonical order.  Raises when the path does not resolve."""
    idx = _index(spec)
    local = resolve_path(sysmark, path)
    if local is None:
        raise StaleStepError(f"path {path!r} does not resolve")
    if isinstance(transition, str):
        transition = idx.trans[local.component][transition]
    t = transition
    owner = t.owner

    for pname in t.inhibitors:
        if _available(idx, sysmark, local, owner, pname):
            return []

    per_arc = []
    for pname, expr in t.inputs:
        toks = _available(idx, sysmark, local, owner, pname)
        options = _arc_assignments(idx, owner, expr, toks)
        if not options:
            return []
        per_arc.append(options)

    merged = [{}]
    for options in per_arc:
        merged = [dict(m, **o) for m in merged for o in options]

    # anonymous output terms pick a concrete color, one binding per choice
    out_choices = []
    for pname, expr in t.outputs:
        place = spec.resolve_place(owner, pname)
        for term in expr.terms:
            if isinstance(term, Var) and term.anon and not any(
                v.name == term.name for _, e in t.inputs for v in e.variables()
            ):
                if place is not None and not place.is_net:
                    ct = spec.color_type(place.ptype.name)
                    out_choices.append((term.name, ct.values if ct else ()))
    for vname, values in out_choices:
        merged = [dict(m, **{vname: val}) for m in merged for val in values]

    bindings = [Binding(m) for m in merged]
    bindings.sort(key=lambda b: b.key)
    # equal keys can only come from equal values; keep the first occurrence
    seen = set()
    unique = []
    for b in bindings:
        if b.key not in seen:
            seen.add(b.key)
            unique.append(b)
    return unique


# --- steps ---------------------------------------------------------------------

AUTONOMOUS = "autonomous"
VERTICAL = "vertical"
HORIZONTAL_STEP = "horizontal"


class Firing:
    """One transition firing at one location: (path, transition, binding)."""

    __slots__ = ("path", "component", "transition", "binding", "skey")

    def __init__(self, path, component, transition, binding, path_skey):
        self.path = path
        self.component = component
        self.transition = transition
        self.binding = binding
        self.skey = (path_skey, component, transition, binding.key)

    def __repr__(self):
        return f"Firing({self.path!r}, {self.transition})"


class Step:
    __slots__ = ("kind", "firings", "label", "skey")

    def __init__(self, kind, firings, label=""):
        self.kind = kind
        self.firings = tuple(firings)
        self.label = label
        rest = tuple(sorted(f.skey for f in self.firings[1:]))
        head = self.firings[0].skey if kind != HORIZONTAL_STEP else tuple(
            sorted(f.skey for f in self.firings)
        )
        if kind == HORIZONTAL_STEP:
            self.skey = (kind, label, head)
        else:
            self.skey = (kind, label, head, rest)

    @property
    def parent(self):
        return self.firings[0]

    def transition_names(self):
        return [f.transition for f in self.firings]

    def __eq__(self, other):
        return isinstance(other, Step) and self.skey == other.skey

    def __hash__(self):
        return hash(self.skey)

    def __repr__(self):
        names = ",".join(self.transition_names())
        return f"Step({self.kind}:{names})"


def _contexts(spec, sysmark):
    """All (path, path_skey, marking) pairs: the system net plus every token."""
    idx = _index(spec)
    out = [((), (), sysmark)]

    def walk(path, skey, marking, comp_index):
        comp = spec.components[comp_index]
        for pos, p in enumerate(comp.places):
            for tok in marking.places[pos]:
                if isinstance(tok, NetToken):
                    sub_path = path + ((p.name, tok.rtid),)
                    sub_skey = skey + ((p.name, tok.skey),)
                    out.append((sub_path, sub_skey, tok.marking))
                    walk(sub_path, sub_skey, tok.marking, tok.component)

    walk((), (), sysmark, 0)
    return out


def _child_firings(spec, idx, sysmark, parent_path, parent_skey, local, binding, t):
    """For a lower-labeled parent: the complement firing choices per bound token."""
    complement = idx.labels[t.label].complement
    arcs_by_var = {}
    for pname, expr in t.inputs:
        for v in expr.variables():
            arcs_by_var[v.name] = pname
    bound = [
        (v, tok)
        for v, tok in sorted(binding.assignments.items())
        if isinstance(tok, NetToken)
    ]
    per_child = []
    for v, tok in bound:
        pname = arcs_by_var.get(v)
        if idx.is_shared(t.owner, pname):
            c_path = ((pname, tok.rtid),)
            c_skey = ((pname, tok.skey),)
        else:
            c_path = parent_path + ((pname, tok.rtid),)
            c_skey = parent_skey + ((pname, tok.skey),)
        options = []
        for u in idx.upper_by_label[tok.component].get(complement, []):
            for b in enabled_bindings(spec, sysmark, c_path, u):
                options.append(Firing(c_path, tok.component, u.name, b, c_skey))
        if not options:
            return None
        per_child.append(options)
    return per_child


def enabled_steps(spec: NpnSpec, sysmark: Marking) -> list[Step]:
    """Every enabled step, structurally deduplicated and canonically ordered."""
    idx = _index(spec)
    steps: dict = {}

    def add(step):
        steps.setdefault(step.skey, step)

    for path, skey, local in _contexts(spec, sysmark):
        comp = spec.components[local.component]
        for t in comp.transitions:
            kind = idx.kind_of(t)
            if kind in (UPPER, HORIZONTAL):
                continue
            for b in enabled_bindings(spec, sysmark, path, t):
                if kind == LOWER:
                    per_child = _child_firings(
                        spec, idx, sysmark, path, skey, local, b, t
                    )
                    if per_child is None:
                        continue
                    if not per_child:
                        # no net token bound: degenerates to a lone firing
                        add(Step(AUTONOMOUS, [Firing(path, local.component, t.name, b, skey)]))
                        continue
                    parent = Firing(path, local.component, t.name, b, skey)
                    for combo in product(*per_child):
                        add(Step(VERTICAL, [parent] + list(combo), label=t.label))
                else:
                    add(Step(AUTONOMOUS, [Firing(path, local.component, t.name, b, skey)]))

        # horizontal synchronization among the tokens of each net place here
        for pos, p in enumerate(comp.places):
            tokens = [tok for tok in local.places[pos] if isinstance(tok, NetToken)]
            if not tokens:
                continue
            for lab in idx.horizontal:
                participants = []
                for tok in tokens:
                    c_path = path + ((p.name, tok.rtid),)
                    c_skey = skey + ((p.name, tok.skey),)
                    options = []
                    for u in idx.upper_by_label[tok.component].get(lab.name, []):
                        for b in enabled_bindings(spec, sysmark, c_path, u):
                            options.append(
                                Firing(c_path, tok.component, u.name, b, c_skey)
                            )
                    if options:
                        participants.append(options)
                if len(participants) < lab.arity:
                    continue
                for chosen in combinations(range(len(participants)), lab.arity):
                    for combo in product(*(participants[i] for i in chosen)):
                        add(Step(HORIZONTAL_STEP, list(combo), label=lab.name))

    return sorted(steps.values(), key=lambda s: s.skey)


# --- applying steps -------------------------------------------------------------


class _Node:
    """Mutable mirror of a marking used while a step's firings are applied."""

    __slots__ = ("component", "places", "rtid", "removed")

    def __init__(self, component, places, rtid):
        self.component = component
        self.places = places  # list[list[token-or-_Node]]
        self.rtid = rtid
        self.removed = False


def _thaw(marking: Marking, rtid, index) -> _Node:
    places = []
    for toks in marking.places:
        row = []
        for t in toks:
            if isinstance(t, NetToken):
                row.append(_thaw(t.marking, t.rtid, index))
            else:
                row.append(t)
        places.append(row)
    node = _Node(marking.component, places, rtid)
    if rtid is not None:
        index[rtid] = node
    return node


def _refreeze(node: _Node) -> Marking:
    places = []
    for row in node.places:
        toks = []
        for t in row:
            if isinstance(t, _Node):
                toks.append(NetToken(t.component, _refreeze(t), t.rtid))
            else:
                toks.append(t)
        places.append(_freeze(toks))
    return Marking(node.component, tuple(places))


def _unregister(node: _Node, index):
    node.removed = True
    index.pop(node.rtid, None)
    for row in node.places:
        for t in row:
            if isinstance(t, _Node):
                _unregister(t, index)


def _take(row, want_value=None, want_rtid=None):
    for i, t in enumerate(row):
        if want_rtid is not None:
            if isinstance(t, _Node) and t.rtid == want_rtid:
                return row.pop(i)
        elif isinstance(t, str) and t == want_value:
            return row.pop(i)
    return None


def _apply_firing(spec, idx, root, index, firing, alloc):
    t = idx.trans[firing.component][firing.transition]
    node = index.get(firing.path[-1][1]) if firing.path else root
    b = firing.binding

    def place_row(pname, shared):
        if shared or node is root:
            return root.places[idx.place_pos[0][pname]]
        return node.places[idx.place_pos[node.component][pname]]

    transported = set()
    for pname, expr in t.outputs:
        for v in expr.variables():
            tok = b.get(v.name)
            if isinstance(tok, NetToken):
                transported.add(tok.rtid)

    # consume
    for pname, expr in t.inputs:
        shared = idx.is_shared(t.owner, pname)
        if node is None and not shared:
            continue  # token already consumed elsewhere: only shared effects count
        row = place_row(pname, shared)
        for term in expr.terms:
            if isinstance(term, Const):
                got = _take(row, want_value=term.value)
                if got is None:
                    raise StaleStepError(f"missing {term.value} at {pname}")
            else:
                tok = b.get(term.name)
                if isinstance(tok, NetToken):
                    got = _take(row, want_rtid=tok.rtid)
                    if got is None:
                        raise StaleStepError(f"missing token #{tok.rtid} at {pname}")
                    if tok.rtid not in transported:
                        _unregister(got, index)
                else:
                    got = _take(row, want_value=tok)
                    if got is None:
                        raise StaleStepError(f"missing {tok!r} at {pname}")

    # produce
    for pname, expr in t.outputs:
        shared = idx.is_shared(t.owner, pname)
        if node is None and not shared:
            continue
        row = place_row(pname, shared)
        for term in expr.terms:
            if isinstance(term, Const):
                row.append(term.value)
            elif isinstance(term, NetConst):
                child = idx.comp_index[term.component]
                rtid = alloc()
                sub = _build_initial(spec, idx, child, alloc)
                row.append(_thaw(sub, rtid, index))
            else:
                tok = b.get(term.name)
                if isinstance(tok, NetToken):
                    moved = index.get(tok.rtid)
                    if moved is None:
                        raise StaleStepError(f"transported token #{tok.rtid} vanished")
                    row.append(moved)
                else:
                    row.append(tok)


def apply_step(spec: NpnSpec, sysmark: Marking, step: Step, order=None) -> Marking:
    """The marking after ``step``.  ``order`` permutes the constituent firings
    (children and horizontal participants commute; the vertical parent always
    completes the consume/transport of its children last)."""
    _check_enabled(spec, sysmark, step)
    idx = _index(spec)
    index: dict = {}
    root = _thaw(sysmark, None, index)
    counter = [sysmark.next_rtid - 1]

    def alloc():
        counter[0] += 1
        return counter[0]

    firings = list(step.firings)
    if step.kind == VERTICAL:
        parent, rest = firings[0], firings[1:]
        if order is not None:
            rest = [rest[i] for i in order]
        firings = rest + [parent]
    elif order is not None:
        firings = [firings[i] for i in order]

    for f in firings:
        _apply_firing(spec, idx, root, index, f, alloc)

    out = _refreeze(root)
    return Marking(0, out.places, next_rtid=counter[0] + 1)


def _check_enabled(spec, sysmark, step):
    idx = _index(spec)
    for f in step.firings:
        local = resolve_path(sysmark, f.path)
        if local is None:
            raise StaleStepError(f"stale path {f.path!r}")
        t = idx.trans[f.component].get(f.transition)
        if t is None:
            raise StaleStepError(f"unknown transition {f.transition}")
        for pname in t.inhibitors:
            if _available(idx, sysmark, local, t.owner, pname):
                raise StaleStepError(f"inhibitor {pname} not empty")
        for pname, expr in t.inputs:
            toks = _available(idx, sysmark, local, t.owner, pname)
            need: dict = {}
            for term in expr.terms:
                if isinstance(term, Const):
                    k = ("B", term.value)
                else:
                    tok = f.binding.get(term.name)
                    if tok is None:
                        raise StaleStepError(f"no binding for {term.name}")
                    k = token_key(tok)
                need[k] = need.get(k, 0) + 1
            have: dict = {}
            for tok in toks:
                k = token_key(tok)
                have[k] = have.get(k, 0) + 1
            for k, n in need.items():
                if have.get(k, 0) < n:
                    raise StaleStepError(f"insufficient tokens at {pname}")


# --- inspection helpers ---------------------------------------------------------


def net_token_census(marking: Marking) -> int:
    total = 0
    for toks in marking.places:
        for t in toks:
            if isinstance(t, NetToken):
                total += 1 + net_token_census(t.marking)
    return total


def max_tokens_per_place(marking: Marking) -> int:
    best = max((len(toks) for toks in marking.places), default=0)
    for toks in marking.places:
        for t in toks:
            if isinstance(t, NetToken):
                best = max(best, max_tokens_per_place(t.marking))
    return best


def place_count(spec: NpnSpec, marking: Marking, pname: str) -> int:
    idx = _index(spec)
    return len(marking.places[idx.place_pos[marking.component][pname]])


def check_marking(spec: NpnSpec, marking: Marking) -> list[str]:
    """Type violations in a marking; empty means type-correct."""
    idx = _index(spec)
    problems = []

    def walk(m, where):
        comp = spec.components[m.component]
        for pos, p in enumerate(comp.places):
            for tok in m.places[pos]:
                if isinstance(tok, str):
                    if p.is_net:
                        problems.append(f"{where}/{p.name}: basic token at net place")
                    else:
                        ct = spec.color_type(p.ptype.name)
                        if ct is None or tok not in ct.values:
                            problems.append(f"{where}/{p.name}: token {tok} off-type")
                else:
                    if not p.is_net:
                        problems.append(f"{where}/{p.name}: net token at basic place")
                    elif spec.components[tok.component].name not in p.ptype.components:
                        problems.append(f"{where}/{p.name}: wrong net type")
                    if tok.component == 0:
                        problems.append(f"{where}/{p.name}: system net as token")
                    walk(tok.marking, f"{where}/{p.name}#{tok.rtid}")

    walk(marking, spec.components[marking.component].name)
    return problems


def render_marking(spec: NpnSpec, marking: Marking) -> str:
    """ASCII form of the paper-style marking notation:
    ``<p1:4,p2:1,p3:{},p4:0,p5:0>`` with net tokens as ``(F,<...>)``."""
    comp = spec.components[marking.component]
    parts = []
    for pos, p in enumerate(comp.places):
        toks = marking.places[pos]
        if not p.is_net and p.ptype.name == "dots":
            parts.append(f"{p.name}:{len(toks)}")
            continue
        if not toks:
            parts.append(f"{p.name}:{{}}")
            continue
        rendered = []
        for t in toks:
            if isinstance(t, str):
                rendered.append(t)
            else:
                sub = render_marking(spec, t.marking)
                rendered.append(f"({spec.components[t.component].name},{sub})")
        parts.append(f"{p.name}:{{{','.join(rendered)}}}")
    return "<" + ",".join(parts) + ">"
