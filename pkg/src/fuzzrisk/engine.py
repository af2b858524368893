"""Mamdani inference: fuzzify, activate, clip, aggregate, defuzzify by centroid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from . import rulelang
from .errors import (
    EmptySupportError,
    GridMismatchError,
    InvalidInputError,
    ModelError,
    NoRuleFiredError,
    ScenarioError,
)
from .logic import fuzzy_and, fuzzy_not, fuzzy_or
from .membership import MembershipFunction, Sampled, Universe, sample, support
from .rulelang import And, Atom, Condition, Not, Or, Rule

__all__ = [
    "EPS_AREA",
    "LinguisticVariable",
    "InferenceConfig",
    "FuzzyModel",
    "OutputResult",
    "InferenceResult",
    "check_scenario",
    "fuzzify",
    "activate",
    "implicate",
    "aggregate",
    "defuzzify_centroid",
    "infer",
]

EPS_AREA = 1e-12

Scenario = Mapping[str, float]


@dataclass(frozen=True)
class LinguisticVariable:
    """A named variable with its universe and named fuzzy terms."""

    name: str
    universe: Universe
    terms: Mapping[str, MembershipFunction]
    kind: str = "input"

    def __post_init__(self):
        if not rulelang.IDENT_RE.fullmatch(self.name) or self.name.upper() in rulelang.KEYWORDS:
            raise ModelError(f"invalid variable name {self.name!r}")
        if self.kind not in ("input", "output"):
            raise ModelError(f"variable {self.name!r}: kind must be 'input' or 'output', got {self.kind!r}")
        if not self.terms:
            raise ModelError(f"variable {self.name!r} declares no terms")
        for term, mf in self.terms.items():
            if not rulelang.IDENT_RE.fullmatch(term) or term.upper() in rulelang.KEYWORDS:
                raise ModelError(f"variable {self.name!r}: invalid term name {term!r}")
            try:
                support(mf, self.universe)
            except EmptySupportError:
                raise ModelError(
                    f"variable {self.name!r}: term {term!r} has no support on "
                    f"[{self.universe.lo}, {self.universe.hi}]"
                ) from None
        object.__setattr__(self, "terms", MappingProxyType(dict(self.terms)))

    def with_terms(self, terms: Mapping[str, MembershipFunction]) -> "LinguisticVariable":
        return LinguisticVariable(self.name, self.universe, terms, self.kind)


@dataclass(frozen=True)
class InferenceConfig:
    grid_points: int = 1001
    and_op: str = "min"
    or_op: str = "max"
    implication: str = "min"
    aggregation: str = "max"
    defuzzifier: str = "centroid"

    def __post_init__(self):
        n = self.grid_points
        if not isinstance(n, int) or n < 11 or n % 2 == 0:
            raise ModelError(f"grid_points must be an odd integer >= 11, got {n!r}")
        fixed = {
            "and_op": "min",
            "or_op": "max",
            "implication": "min",
            "aggregation": "max",
            "defuzzifier": "centroid",
        }
        for name, only in fixed.items():
            if getattr(self, name) != only:
                raise ModelError(f"{name} must be {only!r}, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class FuzzyModel:
    inputs: Sequence[LinguisticVariable]
    outputs: Sequence[LinguisticVariable]
    rules: Sequence[Rule]
    config: InferenceConfig = field(default_factory=InferenceConfig)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        names = [v.name for v in self.inputs + self.outputs]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ModelError(f"duplicate variable names: {', '.join(dupes)}")
        if any(v.kind != "input" for v in self.inputs) or any(v.kind != "output" for v in self.outputs):
            raise ModelError("variable kinds do not match their input/output position")
        if not self.outputs:
            raise ModelError("model needs at least one output variable")
        if not self.rules:
            raise ModelError("model needs at least one rule")
        problems = []
        for i, rule in enumerate(self.rules):
            for d in rulelang.validate(rule, self):
                problems.append((i, d))
        if problems:
            text = "; ".join(f"rule {i}: {d}" for i, d in problems)
            raise ModelError(f"invalid rules: {text}", problems)

    def variable(self, name: str) -> LinguisticVariable:
        for v in self.inputs + self.outputs:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.inputs)

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.outputs)

    def replace(self, **changes) -> "FuzzyModel":
        fields_ = dict(inputs=self.inputs, outputs=self.outputs, rules=self.rules, config=self.config)
        fields_.update(changes)
        return FuzzyModel(**fields_)

    @cached_property
    def _consequent_sets(self) -> dict[tuple[str, str], Sampled]:
        n = self.config.grid_points
        return {
            (v.name, term): sample(mf, v.universe, n)
            for v in self.outputs
            for term, mf in v.terms.items()
        }


@dataclass(frozen=True)
class OutputResult:
    crisp: float
    aggregated: Sampled
    activations: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class InferenceResult:
    outputs: Mapping[str, OutputResult]
    activations: tuple[tuple[int, float], ...]

    @property
    def crisp(self) -> dict[str, float]:
        return {name: out.crisp for name, out in self.outputs.items()}


# --------------------------------------------------------------------------
# Pipeline stages
# --------------------------------------------------------------------------


def check_scenario(model: FuzzyModel, scenario: Scenario) -> dict[str, float]:
    """Validate a scenario against the model and return it as plain floats."""
    expected = set(model.input_names)
    given = set(scenario)
    if given != expected:
        parts = []
        if expected - given:
            parts.append(f"missing {', '.join(sorted(expected - given))}")
        if given - expected:
            parts.append(f"unknown {', '.join(sorted(given - expected))}")
        raise ScenarioError(f"scenario does not match model inputs: {'; '.join(parts)}")
    clean = {}
    for var in model.inputs:
        try:
            x = float(scenario[var.name])
        except (TypeError, ValueError):
            raise ScenarioError(f"{var.name}: not a number: {scenario[var.name]!r}") from None
        if not math.isfinite(x):
            raise ScenarioError(f"{var.name}: value must be finite, got {x}")
        if not var.universe.contains(x):
            raise ScenarioError(
                f"{var.name}={x} outside universe [{var.universe.lo}, {var.universe.hi}]"
            )
        clean[var.name] = x
    return clean


def fuzzify(model: FuzzyModel, scenario: Scenario) -> dict[tuple[str, str], float]:
    values = check_scenario(model, scenario)
    return {
        (var.name, term): float(mf(values[var.name]))
        for var in model.inputs
        for term, mf in var.terms.items()
    }


def _truth(cond: Condition, degrees: Mapping[tuple[str, str], float]) -> float:
    if isinstance(cond, Atom):
        return degrees[(cond.variable, cond.term)]
    if isinstance(cond, Not):
        return fuzzy_not(_truth(cond.inner, degrees))
    if isinstance(cond, And):
        return fuzzy_and(_truth(cond.left, degrees), _truth(cond.right, degrees))
    if isinstance(cond, Or):
        return fuzzy_or(_truth(cond.left, degrees), _truth(cond.right, degrees))
    raise InvalidInputError(f"unknown condition node {type(cond).__name__}")


def activate(rule: Rule, degrees: Mapping[tuple[str, str], float]) -> float:
    """Firing strength of a rule: its antecedent truth scaled by the rule weight."""
    return _truth(rule.antecedent, degrees) * rule.weight


def implicate(strength: float, consequent_mf: MembershipFunction, universe: Universe, n: int) -> Sampled:
    """Clip the consequent set at the firing strength (min implication)."""
    if not 0.0 <= strength <= 1.0:
        raise InvalidInputError(f"firing strength must be in [0, 1], got {strength}")
    return _clip(strength, sample(consequent_mf, universe, n))


def _clip(strength: float, base: Sampled) -> Sampled:
    return Sampled(base.universe, base.points, np.minimum(strength, base.degrees))


def aggregate(sets: Sequence[Sampled]) -> Sampled:
    """Pointwise maximum of clipped rule outputs sharing one grid."""
    if not sets:
        raise InvalidInputError("aggregate needs at least one set")
    first = sets[0]
    acc = first.degrees.copy()
    for s in sets[1:]:
        if s.universe != first.universe or not first.same_grid(s):
            raise GridMismatchError("cannot aggregate sets sampled on different grids")
        np.maximum(acc, s.degrees, out=acc)
    return Sampled(first.universe, first.points, acc)


def defuzzify_centroid(agg: Sampled, output: str | None = None) -> float:
    """Centre of area by the trapezoidal rule on the set's own grid."""
    z, mu = agg.points, agg.degrees
    area = float(np.trapezoid(mu, z))
    if not area > EPS_AREA:
        raise NoRuleFiredError(output)
    moment = float(np.trapezoid(mu * z, z))
    return min(max(moment / area, agg.universe.lo), agg.universe.hi)


def infer(model: FuzzyModel, scenario: Scenario) -> InferenceResult:
    """Run the full Mamdani pipeline for every output variable.

    Raises NoRuleFiredError naming the first output whose aggregated set is empty.
    """
    degrees = fuzzify(model, scenario)
    strengths = [activate(rule, degrees) for rule in model.rules]
    activations = tuple(enumerate(strengths))
    consequents = model._consequent_sets
    n = model.config.grid_points
    outputs = {}
    for var in model.outputs:
        clipped = []
        mine = []
        for i, rule in enumerate(model.rules):
            if rule.consequent.variable != var.name:
                continue
            mine.append((i, strengths[i]))
            clipped.append(_clip(strengths[i], consequents[(var.name, rule.consequent.term)]))
        if not clipped:
            grid = var.universe.grid(n)
            clipped = [Sampled(var.universe, grid, np.zeros(n))]
        agg = aggregate(clipped)
        crisp = defuzzify_centroid(agg, var.name)
        outputs[var.name] = OutputResult(crisp, agg, tuple(mine))
    return InferenceResult(MappingProxyType(outputs), activations)
