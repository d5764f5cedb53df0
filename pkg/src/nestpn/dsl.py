"""Textual format for net systems: a small whitespace-insensitive DSL.

``parse`` builds an :class:`~nestpn.model.NpnSpec` from source text and
``serialize`` renders it back in canonical form, so that
``serialize(parse(serialize(s))) == serialize(s)`` byte for byte.
Semantic validity is checked separately by :func:`nestpn.model.validate`.
"""

from __future__ import annotations

from .model import (
    DOT,
    DOTS,
    HORIZONTAL,
    LOWER,
    UPPER,
    ArcExpr,
    BasicType,
    ColorType,
    Const,
    LabelDecl,
    NetComponent,
    NetConst,
    NetType,
    NpnSpec,
    PlaceDecl,
    TransitionDecl,
    Var,
    dots_type,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


_PUNCT = set("{}:;,<>[]~")
_KEYWORDS = {
    "npn", "type", "label", "horizontal", "vertical", "component", "system",
    "place", "shared", "init", "trans", "in", "out", "inhibit", "net", "new",
}


def _tokenize(text: str):
    toks = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            i += 1
            col += 1
        elif ch == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise ParseError("unterminated string", line, col)
                j += 1
            if j >= n:
                raise ParseError("unterminated string", line, col)
            toks.append(("STRING", text[i + 1 : j], line, col))
            col += j + 1 - i
            i = j + 1
        elif ch.isdigit() and ch.isascii():
            j = i
            while j < n and text[j].isdigit() and text[j].isascii():
                j += 1
            toks.append(("INT", text[i:j], line, col))
            col += j - i
            i = j
        elif (ch.isalpha() and ch.isascii()) or ch == "_":
            # identifiers stay ASCII so generated verifier sources do too
            j = i
            while j < n and ((text[j].isalnum() and text[j].isascii()) or text[j] == "_"):
                j += 1
            toks.append(("IDENT", text[i:j], line, col))
            col += j - i
            i = j
        elif ch in _PUNCT:
            toks.append((ch, ch, line, col))
            i += 1
            col += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(("EOF", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        # references checked after all components are known: (kind, name, line, col)
        self.pending: list[tuple[str, str, int, int]] = []

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, msg: str):
        _, _, line, col = self.peek()
        raise ParseError(msg, line, col)

    def expect(self, kind: str, value: str | None = None):
        k, v, line, col = self.peek()
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {v or k!r}", line, col)
        return self.next()

    def at_ident(self, word: str) -> bool:
        k, v, _, _ = self.peek()
        return k == "IDENT" and v == word

    def eat_ident(self, word: str) -> bool:
        if self.at_ident(word):
            self.next()
            return True
        return False

    def ident(self, what: str) -> str:
        k, v, line, col = self.peek()
        if k != "IDENT":
            raise ParseError(f"expected {what}, found {v or k!r}", line, col)
        self.next()
        return v

    def int_(self) -> int:
        k, v, line, col = self.peek()
        if k != "INT":
            raise ParseError(f"expected a number, found {v or k!r}", line, col)
        self.next()
        return int(v)

    # --- grammar -----------------------------------------------------------

    def file(self) -> NpnSpec:
        self.expect("IDENT", "npn")
        name = self.expect("STRING")[1]
        self.expect("{")
        color_types = [dots_type()]
        labels: list[LabelDecl] = []
        while self.at_ident("type") or self.at_ident("label"):
            if self.eat_ident("type"):
                color_types.append(self.type_decl({ct.name for ct in color_types}))
            else:
                self.next()
                labels.extend(self.label_decl({l.name for l in labels}))
        components: list[NetComponent] = []
        while self.at_ident("component"):
            self.next()
            components.append(self.component(len(components), color_types, labels, components))
        self.expect("}")
        self.expect("EOF")
        if not components:
            self.fail("a net system needs at least one component")
        spec = NpnSpec(name, tuple(color_types), tuple(labels), tuple(components))
        self.check_pending(spec)
        return spec

    def type_decl(self, taken: set[str]) -> ColorType:
        k, name, line, col = self.peek()
        tname = self.ident("type name")
        if tname in taken:
            raise ParseError(f"duplicate type {tname}", line, col)
        self.expect("{")
        values = [self.ident("color constant")]
        while self.peek()[0] == ",":
            self.next()
            values.append(self.ident("color constant"))
        self.expect("}")
        if len(set(values)) != len(values):
            raise ParseError(f"duplicate constant in type {tname}", line, col)
        return ColorType(tname, tuple(values))

    def label_decl(self, taken: set[str]) -> list[LabelDecl]:
        k, v, line, col = self.peek()
        if self.eat_ident("horizontal"):
            name = self.ident("label name")
            self.expect(":")
            ar = self.int_()
            if name in taken:
                raise ParseError(f"duplicate label {name}", line, col)
            if ar < 2:
                raise ParseError(f"horizontal label {name} needs arity >= 2", line, col)
            return [LabelDecl(name, HORIZONTAL, arity=ar)]
        if self.eat_ident("vertical"):
            name = self.ident("label name")
            if name in taken or "~" + name in taken:
                raise ParseError(f"duplicate label {name}", line, col)
            return [
                LabelDecl(name, LOWER, complement="~" + name),
                LabelDecl("~" + name, UPPER, complement=name),
            ]
        self.fail("expected 'horizontal' or 'vertical'")

    def component(self, index, color_types, labels, known) -> NetComponent:
        k, v, line, col = self.peek()
        name = self.ident("component name")
        if any(c.name == name for c in known):
            raise ParseError(f"duplicate component {name}", line, col)
        is_system = self.eat_ident("system")
        if is_system and index != 0:
            raise ParseError("the system component must be declared first", line, col)
        if not is_system and index == 0:
            raise ParseError("the first component must be marked 'system'", line, col)
        self.expect("{")
        places: list[PlaceDecl] = []
        initial: list[tuple[str, tuple]] = []
        while self.at_ident("place"):
            self.next()
            p, init = self.place_decl(index, color_types, places)
            places.append(p)
            if init is not None:
                initial.append((p.name, init))
        transitions: list[TransitionDecl] = []
        variables: dict[str, str] = {}
        shared = known[0].places if known else places
        while self.at_ident("trans"):
            self.next()
            transitions.append(
                self.trans_decl(index, labels, places, shared, color_types, variables, transitions)
            )
        self.expect("}")
        return NetComponent(
            index,
            name,
            tuple(places),
            tuple(transitions),
            tuple(sorted(variables.items())),
            tuple(initial),
        )

    def place_decl(self, owner, color_types, taken):
        k, v, line, col = self.peek()
        name = self.ident("place name")
        if any(p.name == name for p in taken):
            raise ParseError(f"duplicate place {name}", line, col)
        self.expect(":")
        if self.eat_ident("net"):
            self.expect("<")
            comps = [self.ident("element net name")]
            while self.peek()[0] == ",":
                self.next()
                comps.append(self.ident("element net name"))
            self.expect(">")
            for c, (l2, c2) in zip(comps, [(line, col)] * len(comps)):
                self.pending.append(("component", c, l2, c2))
            ptype = NetType(tuple(comps))
        else:
            tname = self.ident("type name")
            if not any(ct.name == tname for ct in color_types):
                raise ParseError(f"unknown type {tname}", line, col)
            ptype = BasicType(tname)
        shared = self.eat_ident("shared")
        init = None
        if self.eat_ident("init"):
            init = self.init_marking()
        self.expect(";")
        return PlaceDecl(name, owner, ptype, shared), init

    def init_marking(self):
        if self.peek()[0] == "INT":
            return (Const(DOT),) * self.int_()
        self.expect("[")
        terms = [self.init_term()]
        while self.peek()[0] == ",":
            self.next()
            terms.append(self.init_term())
        self.expect("]")
        return tuple(terms)

    def init_term(self):
        k, v, line, col = self.peek()
        if self.eat_ident("new"):
            name = self.ident("element net name")
            self.pending.append(("component", name, line, col))
            return NetConst(name)
        if k == "IDENT" and v != "_":
            name = self.ident("constant")
            if self.peek()[0] == ":":
                raise ParseError("variables are not allowed in initial markings", line, col)
            self.pending.append(("constant", name, line, col))
            return Const(name)
        self.fail("expected a constant or 'new <net>' in initial marking")

    def trans_decl(self, owner, labels, places, shared, color_types, variables, taken):
        k, v, line, col = self.peek()
        name = self.ident("transition name")
        if any(t.name == name for t in taken):
            raise ParseError(f"duplicate transition {name}", line, col)
        label = ""
        if self.eat_ident("label"):
            lline, lcol = self.peek()[2], self.peek()[3]
            if self.peek()[0] == "~":
                self.next()
                label = "~" + self.ident("label name")
            else:
                label = self.ident("label name")
            if not any(l.name == label for l in labels):
                raise ParseError(f"unknown label {label}", lline, lcol)
        self.expect("{")
        inputs: list[tuple[str, ArcExpr]] = []
        outputs: list[tuple[str, ArcExpr]] = []
        inhibitors: list[str] = []
        anon = [0]
        while self.peek()[0] == "IDENT" and self.peek()[1] in ("in", "out", "inhibit"):
            kind = self.next()[1]
            pline, pcol = self.peek()[2], self.peek()[3]
            pname = self.ident("place name")
            known = {p.name for p in places} | {p.name for p in shared if p.shared}
            if pname not in known:
                raise ParseError(f"unknown place {pname}", pline, pcol)
            if kind == "inhibit":
                if pname in inhibitors:
                    raise ParseError(f"duplicate inhibitor arc on {pname}", pline, pcol)
                inhibitors.append(pname)
                self.expect(";")
                continue
            arcs = inputs if kind == "in" else outputs
            if any(p == pname for p, _ in arcs):
                raise ParseError(f"duplicate {kind} arc on {pname}", pline, pcol)
            self.expect(":")
            expr = self.arc_expr(color_types, variables, anon)
            self.expect(";")
            arcs.append((pname, expr))
        self.expect("}")
        return TransitionDecl(
            name, owner, label, tuple(inputs), tuple(outputs), tuple(inhibitors)
        )

    def arc_expr(self, color_types, variables, anon) -> ArcExpr:
        if self.peek()[0] == "INT":
            n = self.int_()
            if n < 1:
                self.fail("arc weight must be at least 1")
            return ArcExpr((Const(DOT),) * n)
        self.expect("[")
        terms = [self.arc_term(color_types, variables, anon)]
        while self.peek()[0] == ",":
            self.next()
            terms.append(self.arc_term(color_types, variables, anon))
        self.expect("]")
        return ArcExpr(tuple(terms))

    def arc_term(self, color_types, variables, anon):
        k, v, line, col = self.peek()
        if k == "IDENT" and v == "_":
            self.next()
            anon[0] += 1
            return Var(f"_{anon[0]}", anon=True)
        if self.eat_ident("new"):
            name = self.ident("element net name")
            self.pending.append(("component", name, line, col))
            return NetConst(name)
        name = self.ident("arc term")
        if self.peek()[0] == ":":
            self.next()
            tline, tcol = self.peek()[2], self.peek()[3]
            tname = self.ident("type name")
            old = variables.get(name)
            if old is not None and old != tname:
                raise ParseError(f"variable {name} redeclared as {tname}", tline, tcol)
            if not any(ct.name == tname for ct in color_types):
                self.pending.append(("component", tname, tline, tcol))
            variables[name] = tname
            return Var(name)
        constants = {c for ct in color_types for c in ct.values}
        if name in constants:
            return Const(name)
        if name in variables:
            return Var(name)
        raise ParseError(f"unknown identifier {name}", line, col)

    def check_pending(self, spec: NpnSpec):
        constants = {c for ct in spec.color_types for c in ct.values}
        for kind, name, line, col in self.pending:
            if kind == "component":
                c = spec.component(name)
                if c is None or c.index == 0:
                    raise ParseError(f"unknown element net {name}", line, col)
            elif kind == "constant" and name not in constants:
                raise ParseError(f"unknown constant {name}", line, col)


def parse(text: str) -> NpnSpec:
    """Parse DSL source into a spec, raising :class:`ParseError` on bad input."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    return _Parser(text).file()


def parse_file(path) -> NpnSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


# --- serialization ---------------------------------------------------------


def _fmt_terms(terms, var_seen: set[str], vtypes: dict[str, str] | None = None) -> str:
    if terms and all(isinstance(t, Const) and t.value == DOT for t in terms):
        return str(len(terms))
    parts = []
    for t in terms:
        if isinstance(t, Const):
            parts.append(t.value)
        elif isinstance(t, NetConst):
            parts.append(f"new {t.component}")
        elif t.anon:
            parts.append("_")
        elif t.name in var_seen or not vtypes or t.name not in vtypes:
            parts.append(t.name)
        else:
            var_seen.add(t.name)
            parts.append(f"{t.name}:{vtypes[t.name]}")
    return "[" + ", ".join(parts) + "]"


def serialize(spec: NpnSpec) -> str:
    """Render a spec in the canonical layout used by the shipped net files."""
    out = [f'npn "{spec.name}" {{']
    for ct in spec.color_types:
        if ct.name == DOTS:
            continue
        out.append(f"  type {ct.name} {{ {', '.join(ct.values)} }}")
    for l in spec.labels:
        if l.kind == HORIZONTAL:
            out.append(f"  label horizontal {l.name}: {l.arity}")
        elif l.kind == LOWER:
            out.append(f"  label vertical {l.name}")
    for comp in spec.components:
        head = f"  component {comp.name}"
        if comp.index == 0:
            head += " system"
        out.append(head + " {")
        for p in comp.places:
            if isinstance(p.ptype, NetType):
                ptxt = "net<" + ", ".join(p.ptype.components) + ">"
            else:
                ptxt = p.ptype.name
            line = f"    place {p.name}: {ptxt}"
            if p.shared:
                line += " shared"
            init = comp.initial_terms(p.name)
            if init:
                line += f" init {_fmt_terms(init, set())}"
            out.append(line + ";")
        vtypes = dict(comp.variables)
        for t in comp.transitions:
            var_seen: set[str] = set()
            head = f"    trans {t.name}"
            if t.label:
                head += f" label {t.label}"
            out.append(head + " {")

            for pname, expr in t.inputs:
                out.append(f"      in {pname}: {_fmt_terms(expr.terms, var_seen, vtypes)};")
            for pname, expr in t.outputs:
                out.append(f"      out {pname}: {_fmt_terms(expr.terms, var_seen, vtypes)};")
            for pname in t.inhibitors:
                out.append(f"      inhibit {pname};")
            out.append("    }")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
