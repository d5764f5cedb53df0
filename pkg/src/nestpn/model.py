"""Static structure of a nested Petri net system and its well-formedness checks.

A net system is a list of net components: component 0 is the system net, the
rest are element nets.  Element nets whose places are all basic-typed form the
"basic segment"; only those may appear in initial markings or in net-typed
shared places, and they may not touch shared places at all.
"""

from __future__ import annotations

from dataclasses import dataclass

DOTS = "dots"
DOT = "dot"

HORIZONTAL = "horizontal"
LOWER = "lower"
UPPER = "upper"


@dataclass(frozen=True)
class ColorType:
    """A finite, ordered basic type.  The ``dots`` type has the single value ``dot``."""

    name: str
    values: tuple[str, ...]


@dataclass(frozen=True)
class LabelDecl:
    name: str
    kind: str  # HORIZONTAL | LOWER | UPPER
    arity: int = 0  # horizontal only, >= 2
    complement: str = ""  # vertical kinds only


@dataclass(frozen=True)
class BasicType:
    name: str  # a ColorType name, possibly DOTS


@dataclass(frozen=True)
class NetType:
    components: tuple[str, ...]  # element-net names this place may host


@dataclass(frozen=True)
class PlaceDecl:
    name: str
    owner: int
    ptype: BasicType | NetType
    shared: bool = False

    @property
    def is_net(self) -> bool:
        return isinstance(self.ptype, NetType)


@dataclass(frozen=True)
class Const:
    value: str


@dataclass(frozen=True)
class NetConst:
    component: str


@dataclass(frozen=True)
class Var:
    name: str
    anon: bool = False


Term = Const | NetConst | Var


@dataclass(frozen=True)
class ArcExpr:
    """A multiset of arc terms.  Uncolored weights are desugared to repeated dot
    constants, anonymous ``_`` terms to fresh variables with ``anon=True``."""

    terms: tuple[Term, ...]

    def variables(self):
        return [t for t in self.terms if isinstance(t, Var)]


@dataclass(frozen=True)
class TransitionDecl:
    name: str
    owner: int
    label: str = ""  # empty = unlabeled
    inputs: tuple[tuple[str, ArcExpr], ...] = ()
    outputs: tuple[tuple[str, ArcExpr], ...] = ()
    inhibitors: tuple[str, ...] = ()

    def input_expr(self, place: str) -> ArcExpr | None:
        for p, e in self.inputs:
            if p == place:
                return e
        return None


@dataclass(frozen=True)
class NetComponent:
    index: int
    name: str
    places: tuple[PlaceDecl, ...]
    transitions: tuple[TransitionDecl, ...]
    variables: tuple[tuple[str, str], ...] = ()  # var name -> type name
    initial: tuple[tuple[str, tuple[Term, ...]], ...] = ()  # place -> init multiset

    def place(self, name: str) -> PlaceDecl | None:
        for p in self.places:
            if p.name == name:
                return p
        return None

    def var_type(self, name: str) -> str | None:
        for v, t in self.variables:
            if v == name:
                return t
        return None

    def initial_terms(self, place: str) -> tuple[Term, ...]:
        for p, terms in self.initial:
            if p == place:
                return terms
        return ()


@dataclass(frozen=True)
class NpnSpec:
    """A whole net system: types, labels, shared places and net components."""

    name: str
    color_types: tuple[ColorType, ...]
    labels: tuple[LabelDecl, ...]
    components: tuple[NetComponent, ...]

    @property
    def system(self) -> NetComponent:
        return self.components[0]

    def color_type(self, name: str) -> ColorType | None:
        for ct in self.color_types:
            if ct.name == name:
                return ct
        return None

    def label(self, name: str) -> LabelDecl | None:
        for l in self.labels:
            if l.name == name:
                return l
        return None

    def component(self, name: str) -> NetComponent | None:
        for c in self.components:
            if c.name == name:
                return c
        return None

    def shared_places(self) -> tuple[PlaceDecl, ...]:
        return tuple(p for p in self.system.places if p.shared)

    def basic_segment(self) -> frozenset[int]:
        """Indices of element nets whose places are all basic-typed."""
        return frozenset(
            c.index
            for c in self.components[1:]
            if all(not p.is_net for p in c.places)
        )

    def resolve_place(self, owner: int, name: str) -> PlaceDecl | None:
        """Resolve a place reference from a transition of component ``owner``:
        own places first, then the shared places of the system net."""
        comp = self.components[owner]
        p = comp.place(name)
        if p is not None:
            return p
        sp = self.system.place(name)
        if sp is not None and sp.shared:
            return sp
        return None

    def constant_type(self, value: str) -> ColorType | None:
        for ct in self.color_types:
            if value in ct.values:
                return ct
        return None


def dots_type() -> ColorType:
    return ColorType(DOTS, (DOT,))


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    where: str

    def __str__(self) -> str:
        return f"{self.where}: [{self.code}] {self.message}"


def _term_is_net(spec: NpnSpec, comp: NetComponent, term: Term, place: PlaceDecl) -> bool:
    if isinstance(term, NetConst):
        return True
    if isinstance(term, Const):
        return False
    vt = comp.var_type(term.name)
    if vt is not None:
        return spec.component(vt) is not None
    # untyped anonymous: net iff the incident place is net-typed
    return place.is_net


def validate(spec: NpnSpec) -> list[Diagnostic]:
    """Check every well-formedness condition; an empty list means valid.

    Pure and deterministic: diagnostics come out in declaration order
    (component, then place/transition, then arc), one per violation.
    """
    out: list[Diagnostic] = []
    err = lambda code, msg, where: out.append(Diagnostic(code, msg, where))

    seen_types: set[str] = set()
    for ct in spec.color_types:
        w = f"type {ct.name}"
        if ct.name in seen_types:
            err("dup-name", "duplicate type name", w)
        seen_types.add(ct.name)
        if not ct.values:
            err("type-values", "color type has no values", w)
        if len(set(ct.values)) != len(ct.values):
            err("type-values", "color type values are not pairwise distinct", w)
        if ct.name == DOTS and ct.values != (DOT,):
            err("type-values", "the dots type must have exactly the single dot value", w)

    seen_labels: set[str] = set()
    for l in spec.labels:
        w = f"label {l.name}"
        if l.name in seen_labels:
            err("dup-name", "duplicate label name", w)
        seen_labels.add(l.name)
        if l.kind == HORIZONTAL:
            if l.arity < 2:
                err("label-arity", f"horizontal label arity must be >= 2, got {l.arity}", w)
        elif l.kind in (LOWER, UPPER):
            comp = spec.label(l.complement)
            want = UPPER if l.kind == LOWER else LOWER
            if comp is None or comp.kind != want or comp.complement != l.name:
                err("label-pair", "vertical label lacks a proper complement", w)
        else:
            err("label-kind", f"unknown label kind {l.kind!r}", w)

    seen_comps: set[str] = set()
    for comp in spec.components:
        if comp.name in seen_comps:
            err("dup-name", "duplicate component name", f"component {comp.name}")
        seen_comps.add(comp.name)

    if not spec.components:
        err("no-system", "a net system needs at least the system net", "net")
        return out

    segment = spec.basic_segment()
    shared_names = {p.name for p in spec.shared_places()}

    for comp in spec.components:
        cw = f"component {comp.name}"
        seen_places: set[str] = set()
        for p in comp.places:
            w = f"{cw}/place {p.name}"
            if p.name in seen_places:
                err("dup-name", "duplicate place name", w)
            seen_places.add(p.name)
            if p.shared and comp.index != 0:
                err("place-shared", "shared places belong to the system net", w)
            if comp.index != 0 and p.name in shared_names:
                err("shared-collision", "element-net place collides with a shared place name", w)
            if isinstance(p.ptype, BasicType):
                if spec.color_type(p.ptype.name) is None:
                    err("unknown-type", f"unknown color type {p.ptype.name}", w)
            else:
                for en in p.ptype.components:
                    target = spec.component(en)
                    if target is None or target.index == 0:
                        err("unknown-type", f"unknown element net {en}", w)
                    elif p.shared and target.index not in segment:
                        err(
                            "shared-net-type",
                            f"shared place may host only basic-segment nets, {en} is not",
                            w,
                        )

        # initial marking discipline
        for pname, terms in comp.initial:
            w = f"{cw}/init {pname}"
            p = comp.place(pname)
            if p is None:
                err("unknown-place", f"initial marking of unknown place {pname}", w)
                continue
            for t in terms:
                if isinstance(t, Var):
                    err("init-type", "variables cannot appear in initial markings", w)
                elif isinstance(t, NetConst):
                    target = spec.component(t.component)
                    if not p.is_net:
                        err("init-type", f"net constant {t.component} at basic place", w)
                    elif target is None or t.component not in p.ptype.components:
                        err("init-type", f"net constant {t.component} not allowed at {pname}", w)
                    elif target.index not in segment:
                        err(
                            "init-net-segment",
                            f"initial net constant {t.component} is outside the basic segment",
                            w,
                        )
                else:
                    ok = (
                        isinstance(p.ptype, BasicType)
                        and spec.color_type(p.ptype.name) is not None
                        and t.value in spec.color_type(p.ptype.name).values
                    )
                    if not ok:
                        err("init-type", f"constant {t.value} does not match type of {pname}", w)

        seen_trans: set[str] = set()
        for t in comp.transitions:
            tw = f"{cw}/trans {t.name}"
            if t.name in seen_trans:
                err("dup-name", "duplicate transition name", tw)
            seen_trans.add(t.name)

            label = spec.label(t.label) if t.label else None
            if t.label and label is None:
                err("unknown-label", f"unknown label {t.label}", tw)
            if comp.index == 0 and label is not None and label.kind != LOWER:
                err(
                    "cond-6",
                    "system-net transitions may carry only lower-sync labels",
                    tw,
                )

            var_types: dict[str, str] = dict(comp.variables)

            def term_type_ok(place: PlaceDecl, term: Term, where: str, is_input: bool):
                if isinstance(term, Const):
                    ct = spec.constant_type(term.value)
                    if ct is None:
                        err("unknown-const", f"unknown constant {term.value}", where)
                    elif not (isinstance(place.ptype, BasicType) and place.ptype.name == ct.name):
                        err("var-type", f"constant {term.value} does not fit place {place.name}", where)
                elif isinstance(term, NetConst):
                    if not (place.is_net and term.component in place.ptype.components):
                        err("var-type", f"net constant {term.component} does not fit place {place.name}", where)
                else:
                    vt = var_types.get(term.name)
                    if vt is None:
                        if not term.anon:
                            err("unknown-var", f"undeclared variable {term.name}", where)
                        return
                    if place.is_net:
                        if vt not in place.ptype.components:
                            err("var-type", f"variable {term.name}:{vt} does not fit place {place.name}", where)
                    else:
                        if vt != place.ptype.name:
                            err("var-type", f"variable {term.name}:{vt} does not fit place {place.name}", where)

            def resolve(pname: str, where: str) -> PlaceDecl | None:
                p = spec.resolve_place(comp.index, pname)
                if p is None:
                    err("unknown-place", f"unknown place {pname}", where)
                    return None
                if p.shared:
                    if comp.index in segment:
                        err("cond-7", "basic-segment nets may not touch shared places", where)
                return p

            input_vars: list[str] = []
            net_input_vars = 0
            for pname, expr in t.inputs:
                aw = f"{tw}/in {pname}"
                p = resolve(pname, aw)
                if not expr.terms:
                    err("arc-empty", "empty arc expression", aw)
                if p is None:
                    continue
                if p.shared and label is not None and label.kind in (HORIZONTAL, UPPER):
                    err("cond-7", "synchronizing transition reads a shared place", aw)
                names = [v.name for v in expr.variables()]
                if len(set(names)) != len(names):
                    err("cond-8b", "variable occurs twice in one input arc expression", aw)
                for prev in input_vars:
                    if prev in names:
                        err("cond-8c", f"input arcs of {t.name} share variable {prev}", aw)
                input_vars.extend(names)
                for term in expr.terms:
                    if isinstance(term, NetConst):
                        err("cond-8a", "net constant in an input arc expression", aw)
                        continue
                    term_type_ok(p, term, aw, True)
                    if isinstance(term, Var) and _term_is_net(spec, comp, term, p):
                        net_input_vars += 1

            out_net_vars: set[str] = set()
            for pname, expr in t.outputs:
                aw = f"{tw}/out {pname}"
                p = resolve(pname, aw)
                if not expr.terms:
                    err("arc-empty", "empty arc expression", aw)
                if p is None:
                    continue
                net_names = [
                    v.name
                    for v in expr.variables()
                    if _term_is_net(spec, comp, v, p)
                ]
                if len(set(net_names)) != len(net_names):
                    err("cond-8b", "net variable occurs twice in one output arc expression", aw)
                for v in expr.variables():
                    if v.anon:
                        if p.is_net:
                            err("cond-8e", "net-typed anonymous term in an output arc", aw)
                        continue
                    if v.name not in input_vars:
                        err("cond-8d", f"output variable {v.name} not bound by any input arc", aw)
                arc_net_vars = set(net_names)
                for vname in sorted(arc_net_vars & out_net_vars):
                    err("cond-8d", f"net variable {vname} appears in two output arcs", aw)
                out_net_vars |= arc_net_vars
                for term in expr.terms:
                    if not (isinstance(term, Var) and term.anon and term.name not in var_types):
                        term_type_ok(p, term, aw, False)

            for pname in t.inhibitors:
                aw = f"{tw}/inhibit {pname}"
                p = resolve(pname, aw)
                if p is None:
                    continue
                if p.shared and label is not None and label.kind in (HORIZONTAL, UPPER):
                    err("cond-7", "synchronizing transition inhibits a shared place", aw)

            if label is not None and label.kind == LOWER and net_input_vars == 0:
                err(
                    "lower-net-input",
                    "lower-sync transition must bind at least one net token",
                    tw,
                )

    return out


def conflict_set(spec: NpnSpec, t: TransitionDecl) -> list[TransitionDecl]:
    """Labeled transitions whose pending sync requests the firing of ``t`` must
    clear (a static over-approximation of "may be disabled by ``t``").

    A request-posting transition ``u`` (horizontal or upper label) conflicts
    with ``t`` when their guard place sets (inputs plus inhibitors) meet, or
    when ``t`` produces into a place ``u`` inhibits.  Returned in declaration
    order.
    """
    comp = spec.components[t.owner]
    t_guard = {p for p, _ in t.inputs} | set(t.inhibitors)
    t_out = {p for p, _ in t.outputs}
    found = []
    for u in comp.transitions:
        if u.name == t.name:
            continue
        lab = spec.label(u.label) if u.label else None
        if lab is None or lab.kind not in (HORIZONTAL, UPPER):
            continue
        u_guard = {p for p, _ in u.inputs} | set(u.inhibitors)
        if (t_guard & u_guard) or (t_out & set(u.inhibitors)):
            found.append(u)
    return found


def transition_ids(spec: NpnSpec) -> dict[tuple[int, str], int]:
    """Byte identities for transitions, 1..n in declaration order."""
    ids = {}
    n = 0
    for comp in spec.components:
        for t in comp.transitions:
            n += 1
            ids[(comp.index, t.name)] = n
    return ids


def label_bytes(spec: NpnSpec) -> dict[str, int]:
    """Byte values for the labels that travel in messages (upper + horizontal)."""
    out = {}
    n = 0
    for l in spec.labels:
        if l.kind in (UPPER, HORIZONTAL):
            n += 1
            out[l.name] = n
    return out
