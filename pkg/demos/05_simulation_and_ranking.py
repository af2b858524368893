"""Simulate a loss distribution, then rank and roll up a small portfolio."""

from pathlib import Path

from fuzzrisk.modelfile import load_model, load_portfolio, load_simulation, simulation_from_dict
from fuzzrisk.montecarlo import simulate, summarize
from fuzzrisk.portfolio import assess, mitigation_priority, rank, rollup

data = Path(__file__).parent / "data"
model = load_model(data / "supplier.json").model
doc, _ = load_simulation(data / "sim.json")
spec, output = simulation_from_dict(doc)
dist = simulate(model, spec, output or "loss", workers=4)
s = summarize(dist)
print(f"n={dist.n_samples} failed={s.n_failed} mean={s.mean:.3f} p95={s.p95:.3f} p99.5={s.p99_5:.3f}")

portfolio = load_portfolio(data / "portfolio.json")
exposures = [assess(r, portfolio.percentile) for r in portfolio.risks]
for e in rank(exposures):
    tail = "-" if e.tail_loss is None else f"{e.tail_loss:.2f}"
    print(f"{e.risk_id:>3}  extreme {e.extreme_loss:7.2f}  tail {tail}")
roll = rollup(portfolio.hierarchy, exposures)
print("units", {k: round(v, 2) for k, v in roll.units.items()}, "enterprise", round(roll.enterprise, 2))
ratios, notes = mitigation_priority(exposures)
print("mitigation", [(rid, round(r, 2)) for rid, r in ratios], notes)
