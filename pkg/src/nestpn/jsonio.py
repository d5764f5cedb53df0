"""JSON export of markings, traces and state graphs.

Key order is deterministic: places in declaration order, tokens in canonical
order, nodes in BFS discovery order.
"""

from __future__ import annotations

import json

from .model import NpnSpec
from .semantics import Marking, NetToken, Step
from .explore import StateGraph


def token_json(spec: NpnSpec, tok, rtids: bool = False):
    if isinstance(tok, str):
        return tok
    out = {"component": spec.components[tok.component].name}
    if rtids:
        out["rtid"] = tok.rtid
    out["marking"] = marking_json(spec, tok.marking, rtids=rtids)
    return out


def marking_json(spec: NpnSpec, marking: Marking, rtids: bool = False):
    comp = spec.components[marking.component]
    out = {}
    for pos, p in enumerate(comp.places):
        toks = marking.places[pos]
        if not p.is_net and p.ptype.name == "dots":
            out[p.name] = len(toks)
        elif not p.is_net:
            out[p.name] = sorted(toks)
        else:
            out[p.name] = [token_json(spec, t, rtids=rtids) for t in toks]
    return out


def step_json(spec: NpnSpec, step: Step, rtids: bool = True):
    firings = []
    for f in step.firings:
        binding = {}
        for var, tok in sorted(f.binding.assignments.items()):
            if isinstance(tok, NetToken):
                binding[var] = {
                    "component": spec.components[tok.component].name,
                    "rtid": tok.rtid,
                }
            else:
                binding[var] = tok
        firings.append(
            {
                "path": [[place, rtid] for place, rtid in f.path],
                "component": spec.components[f.component].name,
                "transition": f.transition,
                "binding": binding,
            }
        )
    out = {"kind": step.kind, "firings": firings}
    if step.label:
        out["label"] = step.label
    return out


def trace_json(spec: NpnSpec, initial: Marking, steps_and_results):
    """``steps_and_results``: iterable of (step, marking-after) pairs."""
    return {
        "initial": marking_json(spec, initial),
        "steps": [
            {**step_json(spec, step), "result": marking_json(spec, result)}
            for step, result in steps_and_results
        ],
    }


def export_trace(spec: NpnSpec, initial: Marking, steps_and_results) -> str:
    return json.dumps(trace_json(spec, initial, steps_and_results), indent=2) + "\n"


def graph_json(spec: NpnSpec, graph: StateGraph):
    nodes = [
        {
            "id": nid,
            "marking": marking_json(spec, m),
            "dead": graph.is_dead(nid),
        }
        for nid, m in enumerate(graph.markings)
    ]
    edges = [
        {"from": src, "to": dst, "step": step_json(spec, step)}
        for src, step, dst in graph.edges()
    ]
    out = {"nodes": nodes, "edges": edges}
    if not graph.complete:
        out["truncations"] = [
            {
                "limit": tr.limit,
                "trace": [step_json(spec, s) for s in tr.trace],
            }
            for tr in graph.truncations
        ]
    return out


def export_graph(spec: NpnSpec, graph: StateGraph) -> str:
    return json.dumps(graph_json(spec, graph), indent=2) + "\n"
