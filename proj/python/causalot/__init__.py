"""Python bindings for the causalot C++ library."""

import json

from ._causalot import (
    BudgetExceeded,
    SolverError,
    Tree,
    ValidationError,
    aw_distance,
    commands,
    counterexample,
    mcot_value,
    random_tree,
    run_json,
)

__all__ = [
    "BudgetExceeded",
    "SolverError",
    "Tree",
    "ValidationError",
    "aw_distance",
    "commands",
    "counterexample",
    "mcot_value",
    "random_tree",
    "run",
    "run_json",
]


def run(command, *inputs, **options):
    """Run a CLI command in-process and return the parsed report."""
    return json.loads(run_json(command, [str(p) for p in inputs], options))
