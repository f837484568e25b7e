import math
from pathlib import Path

import pytest

import causalot

DATA = Path(__file__).resolve().parents[2] / "data"


def test_tree_round_trip():
    t = causalot.random_tree(3, horizon=2)
    again = causalot.Tree.from_json(t.to_json())
    assert again.num_leaves == t.num_leaves
    assert again.horizon == 2
    assert math.isclose(sum(t.leaf_probabilities()), 1.0, abs_tol=1e-12)


def test_recursion_matches_oracle():
    trees = [causalot.random_tree(s, horizon=2) for s in (1, 2)]
    v = causalot.mcot_value(trees, "quadratic")
    o = causalot.mcot_value(trees, "quadratic", oracle=True)
    assert abs(v - o) <= 1e-8 * (1 + abs(o))


def test_aw_distance_axioms():
    a, b = causalot.random_tree(5), causalot.random_tree(6)
    assert causalot.aw_distance(a, a) <= 1e-10
    assert abs(causalot.aw_distance(a, b, 1.0) - causalot.aw_distance(b, a, 1.0)) <= 1e-10


def test_counterexample_values():
    r = causalot.counterexample(4)
    assert abs(r["cost_phi0_construction"] - 15.5) <= 1e-9
    assert abs(r["moment6"] - 15.0) <= 1e-9


def test_run_command_report():
    rep = causalot.run("mcot", DATA / "x11.json", DATA / "x12.json", cost="quadratic", oracle=True)
    assert rep["schema"] == "1"
    assert abs(rep["value"] - rep["oracle"]["value"]) <= 1e-8 * (1 + abs(rep["value"]))


def test_errors_map_to_python_exceptions():
    with pytest.raises(causalot.ValidationError):
        causalot.Tree.from_json("{}")
    with pytest.raises(ValueError):
        causalot.run("mcot", DATA / "x11.json", cost="nonsense")
    with pytest.raises(causalot.BudgetExceeded):
        causalot.run("mcot", *[DATA / f"x1{k}.json" for k in (1, 2, 3)], cost="quadratic", budget=5)
