"""Bounded explicit-state exploration of the step semantics.

``explore`` does a canonical BFS over structurally distinct markings.  Hitting
a limit never fails: the offending branch is recorded as a truncation witness
and the rest of the graph is still built.  All ``check_*`` verdicts carry
traces that replay through :func:`nestpn.semantics.apply_step`.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field

from .model import NetConst, NpnSpec
from .semantics import (
    Marking,
    Step,
    apply_step,
    enabled_steps,
    initial_marking,
    max_tokens_per_place,
    net_token_census,
    state_key,
)


@dataclass(frozen=True)
class ExploreLimits:
    """Default caps mirror the external verifier's process/channel limits, so
    native and SPIN verdicts rarely diverge."""

    max_states: int = 1_000_000
    max_depth: int = 10_000
    max_net_tokens: int = 254
    max_tokens_per_place: int = 255

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class Truncation:
    trace: tuple[Step, ...]
    limit: str  # which ExploreLimits field was hit


class StateGraph:
    """Reachability graph over canonical states.

    Node ids are BFS discovery indices, so two runs over the same spec produce
    identical graphs regardless of rtid allocation.
    """

    def __init__(self, spec: NpnSpec):
        self.spec = spec
        self.ids: dict = {}  # marking key -> node id
        self.markings: list[Marking] = []
        self.parent: list[tuple[int, Step] | None] = []
        self.depth: list[int] = []
        self.out_edges: list[list[tuple[Step, int]]] = []
        self.truncated_at: list[str] = []  # "" when the node expanded fully
        self.truncations: list[Truncation] = []

    @property
    def complete(self) -> bool:
        return not self.truncations

    def node_count(self) -> int:
        return len(self.markings)

    def edge_count(self) -> int:
        return sum(len(e) for e in self.out_edges)

    def add(self, marking: Marking, parent) -> tuple[int, bool]:
        key = marking.key
        nid = self.ids.get(key)
        if nid is not None:
            return nid, False
        nid = len(self.markings)
        self.ids[key] = nid
        self.markings.append(marking)
        self.parent.append(parent)
        self.depth.append(0 if parent is None else self.depth[parent[0]] + 1)
        self.out_edges.append([])
        self.truncated_at.append("")
        return nid, True

    def is_dead(self, nid: int) -> bool:
        return not self.out_edges[nid] and not self.truncated_at[nid]

    def trace_to(self, nid: int) -> list[Step]:
        steps = []
        while self.parent[nid] is not None:
            pid, step = self.parent[nid]
            steps.append(step)
            nid = pid
        steps.reverse()
        return steps

    def dead_markings(self) -> list[Marking]:
        dead = [m for i, m in enumerate(self.markings) if self.is_dead(i)]
        dead.sort(key=state_key)
        return dead

    def edges(self):
        for src, outs in enumerate(self.out_edges):
            for step, dst in outs:
                yield src, step, dst


def explore(spec: NpnSpec, limits: ExploreLimits | None = None) -> StateGraph:
    limits = limits or ExploreLimits()
    graph = StateGraph(spec)
    m0 = initial_marking(spec)
    root, _ = graph.add(m0, None)
    frontier = deque([root])
    while frontier:
        nid = frontier.popleft()
        marking = graph.markings[nid]
        steps = enabled_steps(spec, marking)
        if not steps:
            continue
        if graph.depth[nid] >= limits.max_depth:
            graph.truncated_at[nid] = "max_depth"
            graph.truncations.append(Truncation(tuple(graph.trace_to(nid)), "max_depth"))
            continue
        for step in steps:
            succ = apply_step(spec, marking, step)
            limit = ""
            if net_token_census(succ) > limits.max_net_tokens:
                limit = "max_net_tokens"
            elif max_tokens_per_place(succ) > limits.max_tokens_per_place:
                limit = "max_tokens_per_place"
            elif succ.key not in graph.ids and graph.node_count() >= limits.max_states:
                limit = "max_states"
            if limit:
                if not graph.truncated_at[nid]:
                    graph.truncated_at[nid] = limit
                    graph.truncations.append(Truncation(tuple(graph.trace_to(nid)), limit))
                continue
            sid, new = graph.add(succ, (nid, step))
            graph.out_edges[nid].append((step, sid))
            if new:
                frontier.append(sid)
    return graph


# --- cycles ------------------------------------------------------------------


def find_lasso(graph: StateGraph):
    """A reachable cycle as (stem steps, cycle steps), or ``None``.

    Iterative DFS with an on-stack set: the first back edge closes the lasso.
    """
    n = graph.node_count()
    if n == 0:
        return None
    color = [0] * n  # 0 unvisited, 1 on stack, 2 done
    stack = [(0, 0)]
    path: list[tuple[int, Step]] = []  # (node entered, step that entered it)
    color[0] = 1
    while stack:
        nid, ei = stack[-1]
        outs = graph.out_edges[nid]
        if ei >= len(outs):
            stack.pop()
            color[nid] = 2
            if path:
                path.pop()
            continue
        stack[-1] = (nid, ei + 1)
        step, dst = outs[ei]
        if color[dst] == 1:
            # dst is a DFS ancestor: the chain below it plus this edge is a cycle
            cut = None
            for i, (node, _) in enumerate(path):
                if node == dst:
                    cut = i
                    break
            tail = path if cut is None else path[cut + 1 :]
            cycle = [s for _, s in tail] + [step]
            stem = graph.trace_to(dst)
            return stem, cycle
        if color[dst] == 0:
            color[dst] = 1
            path.append((dst, step))
            stack.append((dst, 0))
    return None


# --- verdicts ------------------------------------------------------------------

TERMINATING = "Terminating"
INFINITE_RUN = "InfiniteRun"
BOUND_EXCEEDED = "BoundExceeded"
HOLDS = "Holds"
COUNTER_EXAMPLE = "CounterExample"
BOUNDED = "Bounded"
UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class Verdict:
    kind: str
    trace: tuple[Step, ...] = ()
    cycle: tuple[Step, ...] = ()
    place: str = ""
    limit: str = ""
    reason: str = ""

    def __str__(self) -> str:
        bits = [self.kind]
        if self.limit:
            bits.append(f"limit={self.limit}")
        if self.place:
            bits.append(f"place={self.place}")
        if self.reason:
            bits.append(self.reason)
        return " ".join(bits)


def check_termination(spec: NpnSpec, limits: ExploreLimits | None = None,
                      graph: StateGraph | None = None) -> Verdict:
    graph = graph or explore(spec, limits)
    lasso = find_lasso(graph)
    if lasso is not None:
        stem, cycle = lasso
        return Verdict(INFINITE_RUN, trace=tuple(stem), cycle=tuple(cycle))
    if not graph.complete:
        tr = graph.truncations[0]
        return Verdict(BOUND_EXCEEDED, trace=tr.trace, limit=tr.limit)
    return Verdict(TERMINATING)


def _system_place_count(spec, marking, pname):
    comp = spec.components[0]
    for pos, p in enumerate(comp.places):
        if p.name == pname:
            return len(marking.places[pos])
    raise KeyError(f"unknown system place {pname}")


def check_bounded(spec: NpnSpec, limits, place: str, bound: int,
                  graph: StateGraph | None = None) -> Verdict:
    if spec.system.place(place) is None:
        raise KeyError(f"unknown system place {place}")
    graph = graph or explore(spec, limits)
    for nid, m in enumerate(graph.markings):
        if _system_place_count(spec, m, place) > bound:
            return Verdict(COUNTER_EXAMPLE, trace=tuple(graph.trace_to(nid)), place=place)
    if not graph.complete:
        tr = graph.truncations[0]
        return Verdict(BOUND_EXCEEDED, trace=tr.trace, limit=tr.limit)
    return Verdict(BOUNDED, place=place)


def created_counts(graph: StateGraph) -> list[int]:
    """Net tokens created along each node's canonical trace (the counter the
    generated verifier keeps in a global)."""
    spec = graph.spec
    out = [0] * graph.node_count()
    trans = {
        (c.index, t.name): t for c in spec.components for t in c.transitions
    }
    init_created = net_token_census(graph.markings[0]) if graph.markings else 0
    for nid in range(graph.node_count()):
        if graph.parent[nid] is None:
            out[nid] = init_created
            continue
        pid, step = graph.parent[nid]
        made = 0
        for f in step.firings:
            t = trans[(f.component, f.transition)]
            for _, expr in t.outputs:
                made += sum(1 for term in expr.terms if isinstance(term, NetConst))
        out[nid] = out[pid] + made
    return out


AG = "AG"
EF = "EF"
AT_DEAD = "AtDead"


def check_predicate(spec: NpnSpec, limits, mode: str, pred,
                    graph: StateGraph | None = None) -> Verdict:
    if isinstance(pred, str):
        pred = StatePredicate(pred)
    graph = graph or explore(spec, limits)
    m0 = graph.markings[0]
    created = created_counts(graph)

    def holds(nid):
        return pred.eval(spec, graph.markings[nid], init=m0, created=created[nid])

    if mode == AG:
        for nid in range(graph.node_count()):
            if not holds(nid):
                return Verdict(COUNTER_EXAMPLE, trace=tuple(graph.trace_to(nid)))
        if not graph.complete:
            tr = graph.truncations[0]
            return Verdict(BOUND_EXCEEDED, trace=tr.trace, limit=tr.limit)
        return Verdict(HOLDS)
    if mode == EF:
        for nid in range(graph.node_count()):
            if holds(nid):
                return Verdict(HOLDS, trace=tuple(graph.trace_to(nid)))
        if not graph.complete:
            tr = graph.truncations[0]
            return Verdict(BOUND_EXCEEDED, trace=tr.trace, limit=tr.limit)
        return Verdict(COUNTER_EXAMPLE, reason="no reachable state satisfies the predicate")
    if mode == AT_DEAD:
        if not graph.complete:
            tr = graph.truncations[0]
            return Verdict(BOUND_EXCEEDED, trace=tr.trace, limit=tr.limit)
        if find_lasso(graph) is not None:
            return Verdict(
                BOUND_EXCEEDED,
                reason="inapplicable: the graph has cycles, maximal runs need not end dead",
            )
        for nid in range(graph.node_count()):
            if graph.is_dead(nid) and not holds(nid):
                return Verdict(COUNTER_EXAMPLE, trace=tuple(graph.trace_to(nid)))
        return Verdict(HOLDS)
    raise ValueError(f"unknown mode {mode!r}")


# --- state predicates -----------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\|\||&&|==|!=|<=|>=|[!<>+\-*(),]))"
)


class PredicateError(Exception):
    pass


class StatePredicate:
    """Boolean expression over system-net place observations.

    Atoms: a place name (token count), ``size(p)``, ``count(p, c)`` (tokens of
    one color), ``nets(p)`` (net tokens only), ``init(p)`` (count in the
    initial marking) and ``created`` (net tokens created along the trace, also
    spelled ``f`` when no place uses that name).
    """

    def __init__(self, text: str):
        self.text = text
        self._ast = _PredParser(text).parse()

    def eval(self, spec: NpnSpec, marking: Marking, init: Marking, created: int) -> bool:
        env = _PredEnv(spec, marking, init, created)
        return bool(_ev(self._ast, env))

    def __repr__(self):
        return f"StatePredicate({self.text!r})"


class _PredEnv:
    def __init__(self, spec, marking, init, created):
        self.spec = spec
        self.marking = marking
        self.init = init
        self.created = created
        self.places = {p.name: i for i, p in enumerate(spec.components[0].places)}

    def place_tokens(self, name, marking=None):
        if name not in self.places:
            raise PredicateError(f"unknown system place {name}")
        m = marking if marking is not None else self.marking
        return m.places[self.places[name]]


class _PredParser:
    def __init__(self, text):
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                if text[pos:].strip():
                    raise PredicateError(f"bad predicate syntax near {text[pos:]!r}")
                break
            self.toks.append(m.group("int") or m.group("ident") or m.group("op"))
            pos = m.end()
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self):
        t = self.peek()
        self.pos += 1
        return t

    def expect(self, t):
        got = self.next()
        if got != t:
            raise PredicateError(f"expected {t!r}, found {got!r}")

    def parse(self):
        node = self.or_()
        if self.peek() is not None:
            raise PredicateError(f"trailing input {self.peek()!r}")
        return node

    def or_(self):
        node = self.and_()
        while self.peek() == "||":
            self.next()
            node = ("or", node, self.and_())
        return node

    def and_(self):
        node = self.not_()
        while self.peek() == "&&":
            self.next()
            node = ("and", node, self.not_())
        return node

    def not_(self):
        if self.peek() == "!":
            self.next()
            return ("not", self.not_())
        return self.cmp()

    def cmp(self):
        node = self.sum_()
        if self.peek() in ("==", "!=", "<=", ">=", "<", ">"):
            op = self.next()
            node = (op, node, self.sum_())
        return node

    def sum_(self):
        node = self.prod()
        while self.peek() in ("+", "-"):
            op = self.next()
            node = (op, node, self.prod())
        return node

    def prod(self):
        node = self.atom()
        while self.peek() == "*":
            self.next()
            node = ("*", node, self.atom())
        return node

    def atom(self):
        t = self.next()
        if t is None:
            raise PredicateError("unexpected end of predicate")
        if t == "(":
            node = self.or_()
            self.expect(")")
            return node
        if t.isdigit():
            return ("int", int(t))
        if t in ("size", "count", "nets", "init") and self.peek() == "(":
            self.next()
            place = self.next()
            if t == "count":
                self.expect(",")
                color = self.next()
                self.expect(")")
                return ("count", place, color)
            self.expect(")")
            return (t, place)
        if t in ("true", "false"):
            return ("int", 1 if t == "true" else 0)
        return ("name", t)


def _ev(node, env):
    op = node[0]
    if op == "int":
        return node[1]
    if op == "name":
        name = node[1]
        if name in env.places:
            return len(env.place_tokens(name))
        if name in ("created", "f"):
            return env.created
        raise PredicateError(f"unknown identifier {name}")
    if op == "size":
        return len(env.place_tokens(node[1]))
    if op == "nets":
        return sum(1 for t in env.place_tokens(node[1]) if not isinstance(t, str))
    if op == "init":
        return len(env.place_tokens(node[1], env.init))
    if op == "count":
        return sum(1 for t in env.place_tokens(node[1]) if t == node[2])
    a = _ev(node[1], env)
    if op == "not":
        return 0 if a else 1
    b = _ev(node[2], env)
    if op == "or":
        return 1 if (a or b) else 0
    if op == "and":
        return 1 if (a and b) else 0
    if op == "==":
        return 1 if a == b else 0
    if op == "!=":
        return 1 if a != b else 0
    if op == "<=":
        return 1 if a <= b else 0
    if op == ">=":
        return 1 if a >= b else 0
    if op == "<":
        return 1 if a < b else 0
    if op == ">":
        return 1 if a > b else 0
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    raise PredicateError(f"bad node {node!r}")
