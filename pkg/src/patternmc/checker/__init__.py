"""PCTL model checking over explicit DTMCs and user metamodels."""
from .engine import (
    enumerate_oracle,
    evaluate,
    filtered_prob,
    monte_carlo,
    prob_from_init,
    prob_path,
    prob_vector,
    sat,
)
from .formula import (
    Alpha,
    And,
    Atomic,
    Filter,
    FilterOp,
    Next,
    Not,
    Prob,
    TrueF,
    Until,
    conj,
    eventually,
    false,
    implies,
    is_propositional,
    or_,
)
from .parser import parse, parse_path, parse_state

__all__ = [
    "Alpha", "And", "Atomic", "Filter", "FilterOp", "Next", "Not", "Prob", "TrueF", "Until",
    "conj", "enumerate_oracle", "evaluate", "eventually", "false", "filtered_prob", "implies",
    "is_propositional", "monte_carlo", "or_", "parse", "parse_path", "parse_state",
    "prob_from_init", "prob_path", "prob_vector", "sat",
]
