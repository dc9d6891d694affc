"""Scenario model, text format, evaluation, sampling and audit."""

from .audit import (
    AgentAudit,
    AuditReport,
    ConditionalResult,
    InterferenceRow,
    PairGap,
    audit,
    conditional_probability,
    interference_table,
    probability,
)
from .dsl import load_scenario, parse_scenario, serialize
from .engine import UNRESOLVED, Branch, Policy, RunResult, evaluate, initial_state
from .model import (
    AgentMeasure,
    ApplyUnitary,
    ControlledPrepare,
    ExternalMeasure,
    MeasureDecl,
    Prepare,
    Register,
    Scenario,
    agent,
    register,
)
from .sampling import sample
