import numpy as np
import pytest

from fuzzrisk.engine import FuzzyModel, InferenceConfig, LinguisticVariable
from fuzzrisk.membership import Trapezoid, Triangle, Universe
from fuzzrisk.rulelang import And, Atom, Consequent, Not, Or, Rule, parse

# lines recorded by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def three_terms(lo, hi):
    """Low / medium / high partition of [lo, hi]."""
    mid = 0.5 * (lo + hi)
    return {
        "low": Trapezoid(lo, lo, lo, mid),
        "medium": Triangle(lo, mid, hi),
        "high": Trapezoid(mid, hi, hi, hi),
    }


def two_rule_model(grid=1001):
    u = Universe(0, 10)
    x = LinguisticVariable("x", u, three_terms(0, 10), "input")
    y = LinguisticVariable("y", u, three_terms(0, 10), "output")
    rules = [parse("IF x IS low THEN y IS low"), parse("IF x IS high THEN y IS high")]
    return FuzzyModel([x], [y], rules, InferenceConfig(grid))


def random_model(rng: np.random.Generator, max_inputs=3, max_rules=9, grid=1001):
    """Random small model: triangular terms covering each universe, random rule trees."""
    n_in = int(rng.integers(1, max_inputs + 1))
    inputs = []
    for i in range(n_in):
        lo = float(rng.uniform(-10, 10))
        hi = lo + float(rng.uniform(1, 20))
        inputs.append(LinguisticVariable(f"x{i}", Universe(lo, hi), _random_terms(rng, lo, hi), "input"))
    lo = float(rng.uniform(-5, 5))
    hi = lo + float(rng.uniform(1, 50))
    out = LinguisticVariable("y", Universe(lo, hi), _random_terms(rng, lo, hi), "output")
    n_rules = int(rng.integers(1, max_rules + 1))
    rules = []
    for _ in range(n_rules):
        cond = _random_condition(rng, inputs, depth=2)
        term = str(rng.choice(sorted(out.terms)))
        weight = 1.0 if rng.random() < 0.7 else float(rng.uniform(0.1, 1.0))
        rules.append(Rule(cond, Consequent("y", term), weight))
    return FuzzyModel(inputs, [out], rules, InferenceConfig(grid))


def _random_terms(rng, lo, hi):
    span = hi - lo
    terms = {}
    for k in range(int(rng.integers(2, 5))):
        centre = float(rng.uniform(lo, hi))
        left = float(rng.uniform(0.1, 0.6)) * span
        right = float(rng.uniform(0.1, 0.6)) * span
        terms[f"t{k}"] = Triangle(centre - left, centre, centre + right)
    return terms


def _random_condition(rng, inputs, depth):
    if depth == 0 or rng.random() < 0.4:
        var = inputs[int(rng.integers(len(inputs)))]
        return Atom(var.name, str(rng.choice(sorted(var.terms))))
    kind = rng.choice(["and", "or", "not"])
    if kind == "not":
        return Not(_random_condition(rng, inputs, depth - 1))
    left = _random_condition(rng, inputs, depth - 1)
    right = _random_condition(rng, inputs, depth - 1)
    return And(left, right) if kind == "and" else Or(left, right)


def random_scenario(rng, model):
    return {v.name: float(rng.uniform(v.universe.lo, v.universe.hi)) for v in model.inputs}


@pytest.fixture
def rng():
    return np.random.default_rng(20200401)
