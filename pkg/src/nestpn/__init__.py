"""nestpn: a workbench for nested Petri nets.

Parse and validate net systems, execute their step semantics, explore the
bounded state space, and compile them to PROMELA for verification with SPIN.
"""

from .model import NpnSpec, conflict_set, validate
from .dsl import ParseError, parse, parse_file, serialize
from .semantics import (
    Binding,
    Marking,
    NetToken,
    StaleStepError,
    Step,
    apply_step,
    enabled_bindings,
    enabled_steps,
    initial_marking,
    render_marking,
    state_key,
)
from .explore import (
    ExploreLimits,
    StateGraph,
    StatePredicate,
    Verdict,
    check_bounded,
    check_predicate,
    check_termination,
    explore,
)
from .promela import CodegenOptions, PromelaModel, decide_channel_sizes, translate
from .spinrun import SpinReport, SpinRunConfig, crosscheck, run_verification, spin_available

__version__ = "0.1.0"

__all__ = [
    "NpnSpec", "conflict_set", "validate",
    "ParseError", "parse", "parse_file", "serialize",
    "Binding", "Marking", "NetToken", "StaleStepError", "Step",
    "apply_step", "enabled_bindings", "enabled_steps", "initial_marking",
    "render_marking", "state_key",
    "ExploreLimits", "StateGraph", "StatePredicate", "Verdict",
    "check_bounded", "check_predicate", "check_termination", "explore",
    "CodegenOptions", "PromelaModel", "decide_channel_sizes", "translate",
    "SpinReport", "SpinRunConfig", "crosscheck", "run_verification",
    "spin_available",
]
