"""Structural well-formedness of generated PROMELA, checkable without spin.

The high-risk defect class across variants and field-dropping optimizations is
a send/receive whose argument count disagrees with its channel's declaration,
so this scans every channel operation in every generated model and checks the
arity against the declared layouts.
"""

import re

import pytest

from conftest import load
from nestpn.promela import ALL_OPTIMIZATIONS, CodegenOptions, VARIANTS, translate

NETS = ["factorial", "factorial_unbounded", "pingpong",
        "agents3", "agents2", "agents3_unsound"]

_POLL = re.compile(r"([A-Za-z_][A-Za-z0-9_.]*)\s*(\?\?|\?)\s*\[([^\]]*)\]")
_PLAIN = re.compile(
    r"([A-Za-z_][A-Za-z0-9_.]*)\s*(\?\?|!!|\?|!)\s*([^;{}\[\]]+?)\s*(?:;|$|\})"
)


def _split_args(text):
    args, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            args.append(cur.strip())
            cur = ""
        else:
            if ch in "([":
                depth += 1
            elif ch in ")]":
                depth -= 1
            cur += ch
    if cur.strip():
        args.append(cur.strip())
    return args


def check_arities(source: str):
    """Yields (line number, message) for every arity violation."""
    net_fields = None
    gb_fields = None
    m = re.search(r"typedef NetPlace \{ chan d = \[MaxMsg\] of \{([^}]*)\}", source)
    if m:
        net_fields = len(_split_args(m.group(1)))
    m = re.search(r"chan gbChan = \[MaxMsg\] of \{([^}]*)\}", source)
    if m:
        gb_fields = len(_split_args(m.group(1)))

    basic = set(re.findall(r"BasicPlace ([A-Za-z_][A-Za-z0-9_]*)", source))
    nets = set(re.findall(r"NetPlace ([A-Za-z_][A-Za-z0-9_]*)", source))

    def expected(chan):
        if chan == "gbChan":
            return gb_fields
        if chan in ("pc", "ch", "och"):  # parent/place channels and inline params
            return net_fields
        if chan.endswith(".d"):
            name = chan[:-2]
            if name in nets or name == "cha":
                return net_fields
            if name in basic:
                return 1
        return None

    in_c = False
    for lineno, line in enumerate(source.splitlines(), 1):
        if line.startswith("c_code{"):
            in_c = True
        if in_c:
            if line.startswith("};"):
                in_c = False
            continue
        stripped = line.split("/*")[0]
        found = []
        for m in _POLL.finditer(stripped):
            found.append((m.group(1), m.group(2) + "[]", m.group(3)))
        rest = _POLL.sub(" ", stripped)
        for fragment in re.split(r"::|->", rest):
            for m in _PLAIN.finditer(fragment.strip() + ";"):
                found.append((m.group(1), m.group(2), m.group(3)))
        for chan, op, args in found:
            want = expected(chan)
            if want is None:
                continue
            got = len(_split_args(args))
            if got != want:
                yield lineno, f"{chan} {op} expects {want} fields, found {got}: {line.strip()}"


OPTION_SETS = [
    frozenset(),
    ALL_OPTIMIZATIONS,
    frozenset({"labelAsId"}),
    frozenset({"dropTransportField"}),
    frozenset({"dropConsumeField"}),
    frozenset({"elideLabelTest", "initAtDecl"}),
]


@pytest.mark.parametrize("net", NETS)
@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("opts", OPTION_SETS,
                         ids=["base", "all", "labelAsId", "dropT", "dropC", "elide+init"])
def test_channel_arities(net, variant, opts):
    spec = load(net)
    src = translate(spec, CodegenOptions(variant=variant, optimizations=opts)).source
    problems = list(check_arities(src))
    assert not problems, "\n".join(f"{n}: {msg}" for n, msg in problems)


def test_checker_catches_planted_defect(factorial):
    src = translate(factorial, CodegenOptions()).source
    broken = src.replace("p3.d ! nt,255,0,0,0", "p3.d ! nt,255,0,0", 1)
    assert list(check_arities(broken))


def test_property_models_are_wellformed(factorial):
    opts = CodegenOptions(
        acceptance_label=True, bound_asserts=(("p5", 5),), counters=True,
        counter_init_place="p1", dead_dump=True,
        ltl="<>[](p4==1 && p5==f)",
    )
    src = translate(factorial, opts).source
    assert not list(check_arities(src))
    assert src.count("{") == src.count("}")
