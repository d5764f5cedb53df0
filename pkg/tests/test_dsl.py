"""DSL parsing, serialization and round-trip stability."""

import random

import pytest

from conftest import load, net_path
from netgen import random_spec
from nestpn import dsl
from nestpn.dsl import ParseError
from nestpn.model import NetType, validate


def test_factorial_structure(factorial):
    assert factorial.name == "factorial"
    assert [c.name for c in factorial.components] == ["SN", "F"]
    assert [p.name for p in factorial.shared_places()] == ["p1", "p5"]
    assert [l.name for l in factorial.labels] == ["lambda", "~lambda"]
    sn = factorial.components[0]
    assert [t.name for t in sn.transitions] == ["t1", "t2"]
    assert sn.place("p3").is_net and sn.place("p3").ptype == NetType(("F",))
    t2 = sn.transitions[1]
    assert t2.label == "lambda"
    assert dict(sn.variables) == {"x": "F"}
    assert len(sn.initial_terms("p1")) == 4


def test_minimal_program():
    spec = dsl.parse('npn "x" { component SN system { } }')
    assert len(spec.components) == 1
    assert spec.components[0].places == ()
    assert validate(spec) == []


def test_serialize_fixpoint_all_shipped():
    for name in ("factorial", "factorial_unbounded", "pingpong",
                 "agents3", "agents2", "agents3_unsound"):
        spec = load(name)
        s1 = dsl.serialize(spec)
        s2 = dsl.serialize(dsl.parse(s1))
        assert s1 == s2, name


def test_parse_serialize_identity(factorial):
    assert dsl.parse(dsl.serialize(factorial)) == factorial


def test_serialized_agents_declares_arity(agents3):
    assert "horizontal c: 3" in dsl.serialize(agents3)


def test_roundtrip_random_specs():
    rng = random.Random(23)
    for _ in range(60):
        spec = random_spec(rng)
        text = dsl.serialize(spec)
        back = dsl.parse(text)
        assert dsl.serialize(back) == text
        assert validate(back) == []
        # structural identity up to anonymous-variable renaming
        again = dsl.parse(dsl.serialize(back))
        assert again == back


BAD_SOURCES = [
    ("arity one", 'npn "x" { label horizontal c: 1 component SN system { } }'),
    ("unknown type", 'npn "x" { component SN system { place p: Nope; } }'),
    ("unknown place", 'npn "x" { component SN system { trans t { in p: 1; } } }'),
    ("unknown label", 'npn "x" { component SN system { trans t label e { } } }'),
    ("unknown ident", 'npn "x" { component SN system { place p: dots; trans t { in p: [zz]; } } }'),
    ("unknown net", 'npn "x" { component SN system { place p: net<F>; } }'),
    ("dup place", 'npn "x" { component SN system { place p: dots; place p: dots; } }'),
    ("dup component", 'npn "x" { component SN system { } component SN { } }'),
    ("var in init", 'npn "x" { component SN system { place p: dots init [y:dots]; } }'),
    ("no system", 'npn "x" { component A { } }'),
    ("stray token", 'npn "x" { component SN system { } } trailing'),
    ("unterminated", 'npn "x" { component SN system {'),
]


@pytest.mark.parametrize("label,src", BAD_SOURCES, ids=[l for l, _ in BAD_SOURCES])
def test_parse_errors_have_positions(label, src):
    with pytest.raises(ParseError) as err:
        dsl.parse(src)
    assert err.value.line >= 1 and err.value.col >= 1


def test_arbitrary_bytes_never_crash():
    rng = random.Random(99)
    with open(net_path("factorial"), "rb") as fh:
        seed_text = bytearray(fh.read())
    for trial in range(200):
        blob = bytearray(seed_text)
        for _ in range(rng.randint(1, 8)):
            kind = rng.randrange(3)
            pos = rng.randrange(len(blob))
            if kind == 0:
                blob[pos] = rng.randrange(256)
            elif kind == 1:
                del blob[pos]
            else:
                blob.insert(pos, rng.randrange(256))
        try:
            spec = dsl.parse(bytes(blob))
            validate(spec)
        except ParseError:
            pass


def test_mutated_grammar_classes():
    src = open(net_path("factorial")).read()
    cases = [
        (src.replace("label vertical lambda", "label horizontal lambda: 1"), "arity"),
        (src.replace("x:F", "x:G"), "unknown element net"),
        (src.replace("in p2: 1", "in p9: 1"), "unknown place"),
        (src.replace("new F", "new SN"), "unknown element net"),
    ]
    for mutated, why in cases:
        with pytest.raises(ParseError):
            dsl.parse(mutated)
