"""PDDL subset with non-deterministic (oneof) and conditional (when) effects."""

from .grounding import (
    DNF_FALSE,
    DNF_TRUE,
    CondEffect,
    FondModel,
    GroundAction,
    InapplicableAction,
    State,
    action_label,
    dnf_holds,
    ground,
    normalize_action,
)
from .model import (
    SUPPORTED_REQUIREMENTS,
    ActionSchema,
    And,
    AndEff,
    Condition,
    DomainModel,
    Effect,
    Lit,
    Not,
    OneOf,
    Or,
    PddlError,
    PddlSyntaxError,
    PddlTypeError,
    Predicate,
    ProblemModel,
    UnsupportedFeature,
    When,
)
from .parser import parse_domain, parse_problem, read_sexprs
from .printer import atom_text, condition_text, print_domain, print_problem


def apply(model: FondModel, state: State, action) -> tuple:
    """Successor states of ``action`` in ``state`` (one per effect alternative, deduplicated)."""
    return model.apply(state, action)


__all__ = [
    "ActionSchema", "And", "AndEff", "CondEffect", "Condition", "DNF_FALSE", "DNF_TRUE", "DomainModel",
    "Effect", "FondModel", "GroundAction", "InapplicableAction", "Lit", "Not", "OneOf", "Or", "PddlError",
    "PddlSyntaxError", "PddlTypeError", "Predicate", "ProblemModel", "SUPPORTED_REQUIREMENTS", "State",
    "UnsupportedFeature", "When", "action_label", "apply", "atom_text", "condition_text", "dnf_holds",
    "ground", "normalize_action", "parse_domain", "parse_problem", "print_domain", "print_problem",
    "read_sexprs",
]
