"""Pool two experts three ways, and catch contradictory rules."""

from fuzzrisk.engine import FuzzyModel, InferenceConfig, LinguisticVariable, infer
from fuzzrisk.experts import (
    ConflictPolicy,
    ExpertPanel,
    ExpertProfile,
    PanelMode,
    blend_memberships,
    blend_outputs,
    detect_conflicts,
    equal_weight,
    resolve_conflicts,
)
from fuzzrisk.membership import Triangle, Universe
from fuzzrisk.rulelang import parse

u = Universe(0, 10)
terms = {"low": Triangle(-5, 0, 5), "medium": Triangle(0, 5, 10), "high": Triangle(5, 10, 15)}
x = LinguisticVariable("x", u, terms, "input")
y = LinguisticVariable("y", u, terms, "output")
rules = [parse("IF x IS low THEN y IS low"), parse("IF x IS medium THEN y IS medium"), parse("IF x IS high THEN y IS high")]
cautious = FuzzyModel([x], [y], rules, InferenceConfig())
alarmed = cautious.replace(rules=[parse("IF x IS low THEN y IS medium"), parse("IF x IS NOT low THEN y IS high")])

experts = [ExpertProfile("cautious", 1.0), ExpertProfile("alarmed", 3.0)]
models = {"cautious": cautious, "alarmed": alarmed}
scenario = {"x": 4.0}
print("cautious alone", round(infer(cautious, scenario).crisp["y"], 4))
print("alarmed alone ", round(infer(alarmed, scenario).crisp["y"], 4))
print("blend outputs ", round(blend_outputs(ExpertPanel(experts, PanelMode.BLEND_OUTPUTS, models=models), scenario)["y"], 4))
print("equal weights ", round(equal_weight(ExpertPanel(experts, PanelMode.EQUAL_WEIGHTS, models=models), scenario)["y"], 4))

# the alarmed expert draws "low" narrower; curves are averaged by weight
overrides = {"alarmed": {"x": {"low": Triangle(-2, 0, 2)}}}
blended = blend_memberships(ExpertPanel(experts, PanelMode.BLEND_MEMBERSHIPS, overrides=overrides), cautious)
print("blend MFs     ", round(infer(blended, scenario).crisp["y"], 4))

sets = {"I": [parse("IF x IS low THEN y IS low")], "II": [parse("IF x IS low THEN y IS high")]}
conflicts = detect_conflicts(sets)
print("conflicts", len(conflicts))
print("after drop_both", resolve_conflicts(sets, conflicts, ConflictPolicy.DROP_BOTH).rule_sets)
