"""Single-session JSON API over HTTP for interactive token games.

The server owns one session: the current marking always equals the replay of
the step log from the initial marking, and every offered step id is valid for
exactly one generation, so stale fires are rejected with 409 instead of
corrupting the run.
"""

from __future__ import annotations

import json
import mimetypes
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .jsonio import marking_json, step_json, trace_json
from .model import NetType, NpnSpec
from .semantics import apply_step, enabled_steps, initial_marking


def spec_json(spec: NpnSpec):
    return {
        "name": spec.name,
        "colorTypes": [
            {"name": ct.name, "values": list(ct.values)} for ct in spec.color_types
        ],
        "labels": [
            {"name": l.name, "kind": l.kind, "arity": l.arity, "complement": l.complement}
            for l in spec.labels
        ],
        "components": [
            {
                "index": c.index,
                "name": c.name,
                "places": [
                    {
                        "name": p.name,
                        "shared": p.shared,
                        "type": (
                            {"net": list(p.ptype.components)}
                            if isinstance(p.ptype, NetType)
                            else {"basic": p.ptype.name}
                        ),
                    }
                    for p in c.places
                ],
                "transitions": [
                    {
                        "name": t.name,
                        "label": t.label,
                        "inputs": [pn for pn, _ in t.inputs],
                        "outputs": [pn for pn, _ in t.outputs],
                        "inhibitors": list(t.inhibitors),
                    }
                    for t in c.transitions
                ],
            }
            for c in spec.components
        ],
    }


class Session:
    def __init__(self, spec: NpnSpec):
        self.spec = spec
        self.lock = threading.Lock()
        self._reset()

    def _reset(self):
        self.markings = [initial_marking(self.spec)]
        self.log = []  # steps in applied order
        self.redo_stack = []
        self.generation = 0
        self._steps = None

    @property
    def current(self):
        return self.markings[-1]

    def steps(self):
        if self._steps is None:
            found = enabled_steps(self.spec, self.current)
            self._steps = [(f"s{self.generation}-{i}", s) for i, s in enumerate(found)]
        return self._steps

    def state_payload(self):
        return {
            "generation": self.generation,
            "marking": marking_json(self.spec, self.current, rtids=True),
            "depth": len(self.log),
            "canUndo": bool(self.log),
            "canRedo": bool(self.redo_stack),
        }

    def steps_payload(self):
        return {
            "generation": self.generation,
            "steps": [
                {"id": sid, **step_json(self.spec, s)} for sid, s in self.steps()
            ],
        }

    def fire(self, step_id: str):
        for sid, step in self.steps():
            if sid == step_id:
                self.markings.append(apply_step(self.spec, self.current, step))
                self.log.append(step)
                self.redo_stack.clear()
                self.generation += 1
                self._steps = None
                return True
        return False

    def undo(self):
        if not self.log:
            return False
        self.redo_stack.append(self.log.pop())
        self.markings.pop()
        self.generation += 1
        self._steps = None
        return True

    def redo(self):
        if not self.redo_stack:
            return False
        step = self.redo_stack.pop()
        self.markings.append(apply_step(self.spec, self.current, step))
        self.log.append(step)
        self.generation += 1
        self._steps = None
        return True

    def reset(self):
        self._reset()
        return True

    def trace_payload(self):
        pairs = list(zip(self.log, self.markings[1:]))
        return trace_json(self.spec, self.markings[0], pairs)


def make_handler(session: Session, static_dir: str | None):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass

        def _send(self, code, payload):
            body = json.dumps(payload, indent=2).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _static(self, path):
            if static_dir is None:
                return self._send(404, {"error": "no web UI assets configured"})
            rel = path.lstrip("/") or "index.html"
            full = os.path.normpath(os.path.join(static_dir, rel))
            if not full.startswith(os.path.abspath(static_dir)) or not os.path.isfile(full):
                return self._send(404, {"error": "not found"})
            ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
            with open(full, "rb") as fh:
                body = fh.read()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            path = self.path.split("?")[0]
            if path == "/net":
                return self._send(200, spec_json(session.spec))
            if path == "/state":
                with session.lock:
                    return self._send(200, session.state_payload())
            if path == "/steps":
                with session.lock:
                    return self._send(200, session.steps_payload())
            if path == "/trace":
                with session.lock:
                    return self._send(200, session.trace_payload())
            return self._static(path)

        def do_POST(self):
            path = self.path.split("?")[0]
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b"{}"
            try:
                body = json.loads(raw or b"{}")
            except json.JSONDecodeError:
                return self._send(400, {"error": "malformed JSON body"})
            with session.lock:
                if path == "/fire":
                    step_id = body.get("stepId")
                    if not isinstance(step_id, str):
                        return self._send(400, {"error": "fire needs a stepId"})
                    if session.fire(step_id):
                        return self._send(200, session.state_payload())
                    return self._send(409, {"error": f"stale or unknown step {step_id}"})
                if path == "/undo":
                    if session.undo():
                        return self._send(200, session.state_payload())
                    return self._send(409, {"error": "already at the initial marking"})
                if path == "/redo":
                    if session.redo():
                        return self._send(200, session.state_payload())
                    return self._send(409, {"error": "nothing to redo"})
                if path == "/reset":
                    session.reset()
                    return self._send(200, session.state_payload())
            return self._send(404, {"error": "unknown endpoint"})

    return Handler


def make_server(spec: NpnSpec, port: int, static_dir: str | None = None):
    session = Session(spec)
    handler = make_handler(session, static_dir and os.path.abspath(static_dir))
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve(spec: NpnSpec, port: int, static_dir: str | None = None):
    httpd = make_server(spec, port, static_dir)
    print(f"nestpn serving {spec.name} on http://127.0.0.1:{port}")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
