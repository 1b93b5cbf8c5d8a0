"""Core-closed knowledge bases over DL-Lite_F: reasoning, actions, verification and planning."""

from .kb import (
    BOTTOM,
    CcKB,
    ConceptAssertion,
    Exists,
    Functionality,
    MBox,
    Named,
    NegativeInclusion,
    PositiveInclusion,
    RoleAssertion,
    Vocabulary,
    active_domain,
    boundary_nodes,
    ind,
    validate_placement,
)
from .reasoner import core_complete, fully_satisfiable, negative_closure, open_consistent
from .queries import answers, certain_answers, eval_action_query, eval_mustmay, sat_answers
from .actions import Action, GroundedAction, apply, compose, ground
from .parsing import parse_action, parse_actions, parse_goal, parse_kb, parse_query, serialize_kb

__version__ = "0.1.0"
