"""Pooling several experts' opinions and handling rules they disagree on.

Three pooling modes are supported:

* ``BLEND_MEMBERSHIPS`` - experts redraw individual terms; each overridden
  term becomes the weighted average of the experts' curves.
* ``BLEND_OUTPUTS`` - every expert owns a full model; crisp results are
  combined by weighted average.
* ``EQUAL_WEIGHTS`` - as ``BLEND_OUTPUTS`` with every weight set to 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .engine import FuzzyModel, Scenario, infer
from .errors import (
    DegenerateWeightsError,
    ExpertAggregationError,
    FuzzRiskError,
    InvalidInputError,
    ModelError,
)
from .membership import MembershipFunction, blend
from .rulelang import And, Atom, Condition, Not, Or, Rule, format_condition

__all__ = [
    "PanelMode",
    "ExpertProfile",
    "ExpertPanel",
    "RuleConflict",
    "ConflictPolicy",
    "Resolution",
    "blend_memberships",
    "blend_outputs",
    "equal_weight",
    "canonicalize",
    "detect_conflicts",
    "resolve_conflicts",
]


class PanelMode(enum.Enum):
    BLEND_MEMBERSHIPS = "blend_memberships"
    BLEND_OUTPUTS = "blend_outputs"
    EQUAL_WEIGHTS = "equal_weights"


@dataclass(frozen=True)
class ExpertProfile:
    id: str
    weight: float = 1.0
    basis: str = ""

    def __post_init__(self):
        if not self.weight >= 0.0:
            raise DegenerateWeightsError(f"expert {self.id!r}: weight must be >= 0, got {self.weight}")


Overrides = Mapping[str, Mapping[str, MembershipFunction]]  # variable -> term -> mf


def _declarations(model: FuzzyModel):
    return tuple(
        (v.name, v.kind, v.universe, tuple(v.terms)) for v in model.inputs + model.outputs
    )


@dataclass(frozen=True)
class ExpertPanel:
    """Experts, their weights, and one payload per expert.

    ``overrides`` maps expert id to ``{variable: {term: mf}}`` for
    ``BLEND_MEMBERSHIPS``; ``models`` maps expert id to a full model for the
    two output-pooling modes.
    """

    experts: Sequence[ExpertProfile]
    mode: PanelMode
    overrides: Mapping[str, Overrides] = field(default_factory=dict)
    models: Mapping[str, FuzzyModel] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "experts", tuple(self.experts))
        object.__setattr__(self, "mode", PanelMode(self.mode))
        ids = [e.id for e in self.experts]
        if not ids:
            raise InvalidInputError("panel needs at least one expert")
        if len(set(ids)) != len(ids):
            raise InvalidInputError("duplicate expert ids in panel")
        if not sum(e.weight for e in self.experts) > 0:
            raise DegenerateWeightsError("expert weights are all zero")
        if self.mode is PanelMode.BLEND_MEMBERSHIPS:
            unknown = set(self.overrides) - set(ids)
            if unknown:
                raise InvalidInputError(f"overrides for undeclared experts: {sorted(unknown)}")
            return
        missing = [i for i in ids if i not in self.models]
        if missing:
            raise InvalidInputError(f"no model for experts: {missing}")
        first = _declarations(self.models[ids[0]])
        for i in ids[1:]:
            if _declarations(self.models[i]) != first:
                raise ModelError(
                    f"expert {i!r} declares different variables, terms or universes than {ids[0]!r}"
                )

    def weight_of(self, expert_id: str) -> float:
        for e in self.experts:
            if e.id == expert_id:
                return e.weight
        raise KeyError(expert_id)

    def scaled(self, k: float) -> "ExpertPanel":
        """Same panel with every weight multiplied by ``k``."""
        experts = [ExpertProfile(e.id, e.weight * k, e.basis) for e in self.experts]
        return ExpertPanel(experts, self.mode, self.overrides, self.models)

    @property
    def output_names(self) -> tuple[str, ...]:
        return self.models[self.experts[0].id].output_names

    @property
    def reference_model(self) -> FuzzyModel:
        return self.models[self.experts[0].id]

    def infer_crisp(self, scenario: Scenario) -> dict[str, float]:
        if self.mode is PanelMode.EQUAL_WEIGHTS:
            return equal_weight(self, scenario)
        return blend_outputs(self, scenario)


# --------------------------------------------------------------------------
# Pooling
# --------------------------------------------------------------------------


def blend_memberships(panel: ExpertPanel, model: FuzzyModel) -> FuzzyModel:
    """Replace every overridden term by the weighted average of the experts' curves.

    An expert who does not redraw a term that another expert redraws is
    taken to accept the model's own curve for it.  Terms on which every
    expert agrees keep their exact curve.
    """
    if panel.mode is not PanelMode.BLEND_MEMBERSHIPS:
        raise InvalidInputError(f"blend_memberships needs a BLEND_MEMBERSHIPS panel, got {panel.mode}")
    targets: dict[tuple[str, str], None] = {}
    for expert in panel.experts:
        for var, terms in panel.overrides.get(expert.id, {}).items():
            try:
                declared = model.variable(var)
            except KeyError:
                raise InvalidInputError(f"expert {expert.id!r} overrides unknown variable {var!r}") from None
            for term in terms:
                if term not in declared.terms:
                    raise InvalidInputError(
                        f"expert {expert.id!r} overrides unknown term {term!r} of {var!r}"
                    )
                targets[(var, term)] = None
    n = model.config.grid_points
    weights = [e.weight for e in panel.experts]
    new_terms: dict[str, dict[str, MembershipFunction]] = {}
    for var, term in targets:
        declared = model.variable(var)
        curves = [
            panel.overrides.get(e.id, {}).get(var, {}).get(term, declared.terms[term])
            for e in panel.experts
        ]
        if all(c == curves[0] for c in curves[1:]):
            # a weighted average of one curve is that curve; skip resampling
            merged = curves[0]
        else:
            merged = blend(curves, weights, declared.universe, n)
        new_terms.setdefault(var, dict(declared.terms))[term] = merged

    def rebuilt(variables):
        return [v.with_terms(new_terms[v.name]) if v.name in new_terms else v for v in variables]

    return model.replace(inputs=rebuilt(model.inputs), outputs=rebuilt(model.outputs))


def _pool(panel: ExpertPanel, scenario: Scenario, weights: Sequence[float]) -> dict[str, float]:
    total = sum(weights)
    if not total > 0:
        raise DegenerateWeightsError("expert weights are all zero")
    results = []
    for expert in panel.experts:
        try:
            results.append(infer(panel.models[expert.id], scenario).crisp)
        except FuzzRiskError as exc:
            raise ExpertAggregationError(expert.id, exc) from exc
    pooled = {}
    for name in panel.output_names:
        # summed in declaration order so the result does not depend on scheduling
        acc = 0.0
        for w, crisp in zip(weights, results):
            acc += w * crisp[name]
        pooled[name] = acc / total
    return pooled


def blend_outputs(panel: ExpertPanel, scenario: Scenario) -> dict[str, float]:
    """Weighted average of each expert model's crisp output."""
    if panel.mode is PanelMode.BLEND_MEMBERSHIPS:
        raise InvalidInputError("blend_outputs needs a panel of full expert models")
    return _pool(panel, scenario, [e.weight for e in panel.experts])


def equal_weight(panel: ExpertPanel, scenario: Scenario) -> dict[str, float]:
    if panel.mode is PanelMode.BLEND_MEMBERSHIPS:
        raise InvalidInputError("equal_weight needs a panel of full expert models")
    return _pool(panel, scenario, [1.0] * len(panel.experts))


# --------------------------------------------------------------------------
# Conflicting rules
# --------------------------------------------------------------------------


def _flatten(cond: Condition, kind) -> Iterable[Condition]:
    if isinstance(cond, kind):
        yield from _flatten(cond.left, kind)
        yield from _flatten(cond.right, kind)
    else:
        yield cond


def canonicalize(cond: Condition) -> Condition:
    """Normal form for comparing antecedents.

    Chains of AND (or OR) are flattened, their operands sorted by canonical
    text, and rebuilt left-associated.  NOT is left where it is.
    """
    if isinstance(cond, Atom):
        return Atom(cond.variable, cond.term)
    if isinstance(cond, Not):
        return Not(canonicalize(cond.inner))
    kind = type(cond)
    operands = sorted((canonicalize(c) for c in _flatten(cond, kind)), key=format_condition)
    result = operands[0]
    for nxt in operands[1:]:
        result = kind(result, nxt)
    return result


@dataclass(frozen=True)
class RuleConflict:
    """Rules with the same canonical antecedent and output but different conclusions.

    ``assignments`` lists ``(expert id, consequent term)`` per participating
    rule; ``rules`` holds the matching ``(expert id, rule)`` pairs.
    """

    antecedent: Condition
    output: str
    assignments: tuple[tuple[str | None, str], ...]
    rules: tuple[tuple[str | None, Rule], ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "antecedent": format_condition(self.antecedent),
            "output": self.output,
            "assignments": [{"expert": e, "term": t} for e, t in self.assignments],
        }

    def __str__(self):
        parts = ", ".join(f"{e or '-'} says {self.output} IS {t}" for e, t in self.assignments)
        return f"conflict on IF {format_condition(self.antecedent)}: {parts}"


RuleSets = Mapping[str | None, Sequence[Rule]]


def detect_conflicts(rule_sets: RuleSets) -> list[RuleConflict]:
    """Group rules by canonical antecedent and output; report groups that disagree.

    ``rule_sets`` maps expert id (or ``None`` for untagged rules) to that
    expert's rules.  Conflicts come out in order of first appearance.
    """
    groups: dict[tuple[str, str], list[tuple[str | None, Rule]]] = {}
    canon: dict[tuple[str, str], Condition] = {}
    for expert, rules in rule_sets.items():
        for rule in rules:
            ante = canonicalize(rule.antecedent)
            key = (format_condition(ante), rule.consequent.variable)
            canon.setdefault(key, ante)
            groups.setdefault(key, []).append((expert, rule))
    conflicts = []
    for key, members in groups.items():
        terms = {r.consequent.term for _, r in members}
        if len(terms) < 2:
            continue
        conflicts.append(RuleConflict(
            antecedent=canon[key],
            output=key[1],
            assignments=tuple((e, r.consequent.term) for e, r in members),
            rules=tuple(members),
        ))
    return conflicts


class ConflictPolicy(enum.Enum):
    REPORT = "report"
    DROP_BOTH = "drop_both"


@dataclass(frozen=True)
class Resolution:
    rule_sets: dict[str | None, list[Rule]]
    removed: tuple[tuple[str | None, Rule], ...]
    diagnostics: tuple[str, ...]


def resolve_conflicts(
    rule_sets: RuleSets,
    conflicts: Sequence[RuleConflict],
    policy: ConflictPolicy = ConflictPolicy.REPORT,
) -> Resolution:
    """Report conflicts, or drop every rule that takes part in one."""
    policy = ConflictPolicy(policy)
    diagnostics = tuple(str(c) for c in conflicts)
    if policy is ConflictPolicy.REPORT or not conflicts:
        return Resolution({e: list(r) for e, r in rule_sets.items()}, (), diagnostics)
    doomed = [(e, r) for c in conflicts for e, r in c.rules]
    kept: dict[str | None, list[Rule]] = {}
    removed = []
    for expert, rules in rule_sets.items():
        kept[expert] = []
        for rule in rules:
            if (expert, rule) in doomed:
                removed.append((expert, rule))
            else:
                kept[expert].append(rule)
    return Resolution(kept, tuple(removed), diagnostics)
