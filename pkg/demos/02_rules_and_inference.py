"""Parse a small rule base and trace one Mamdani inference."""

from pathlib import Path

from fuzzrisk.engine import infer
from fuzzrisk.modelfile import load_model
from fuzzrisk.rulelang import format_rule, parse

rule = parse("IF delay IS long OR dependency IS high AND NOT delay IS short THEN loss IS large WITH 0.8")
print(rule.antecedent)
print(format_rule(rule))

model = load_model(Path(__file__).parent / "data" / "supplier.json").model
for delay, dep in ((2, 0.1), (15, 0.8), (28, 0.95)):
    res = infer(model, {"delay": delay, "dependency": dep})
    fired = [(format_rule(model.rules[i]), round(s, 3)) for i, s in res.activations if s > 0]
    print(f"delay={delay:>2} dependency={dep:.2f} -> loss {res.crisp['loss']:.2f}")
    for text, s in fired:
        print(f"    {s:.3f}  {text}")
