import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from nestpn import dsl

NETS = os.path.join(os.path.dirname(__file__), "..", "nets")


def net_path(name: str) -> str:
    return os.path.join(NETS, name + ".npn")


def load(name: str):
    return dsl.parse_file(net_path(name))


@pytest.fixture
def factorial():
    return load("factorial")


@pytest.fixture
def factorial_unbounded():
    return load("factorial_unbounded")


@pytest.fixture
def pingpong():
    return load("pingpong")


@pytest.fixture
def agents3():
    return load("agents3")


@pytest.fixture
def agents2():
    return load("agents2")


@pytest.fixture
def agents3_unsound():
    return load("agents3_unsound")


def factorial_with(a: int):
    """The factorial net with p1 initially holding ``a`` tokens."""
    with open(net_path("factorial")) as fh:
        src = fh.read()
    return dsl.parse(src.replace("init 4", f"init {a}"))
