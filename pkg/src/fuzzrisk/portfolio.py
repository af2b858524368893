"""Per-risk exposure, ranking, business-unit roll-up and mitigation priority."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from .engine import FuzzyModel, Scenario, check_scenario, infer
from .errors import (
    DegenerateWeightsError,
    FuzzRiskError,
    InvalidInputError,
    RiskAssessmentError,
)
from .experts import ExpertPanel, PanelMode
from .montecarlo import SimulationSpec, percentile, simulate

__all__ = [
    "RiskDefinition",
    "RiskExposure",
    "RankKey",
    "Combiner",
    "WeightedSum",
    "Hierarchy",
    "Rollup",
    "assess",
    "default_key",
    "rank",
    "rollup",
    "mitigation_priority",
]


@dataclass(frozen=True)
class RiskDefinition:
    id: str
    name: str
    model: Union[FuzzyModel, ExpertPanel]
    loss_output: str
    extreme_scenario: Mapping[str, float]
    simulation: SimulationSpec | None = None
    hedging_cost: float | None = None

    def __post_init__(self):
        if isinstance(self.model, ExpertPanel) and self.model.mode is PanelMode.BLEND_MEMBERSHIPS:
            raise InvalidInputError(
                f"risk {self.id!r}: blend the panel's memberships into a model before assessing"
            )
        reference = self.model if isinstance(self.model, FuzzyModel) else self.model.reference_model
        if self.loss_output not in reference.output_names:
            raise InvalidInputError(f"risk {self.id!r}: {self.loss_output!r} is not a model output")
        check_scenario(reference, self.extreme_scenario)
        if self.hedging_cost is not None and not (math.isfinite(self.hedging_cost) and self.hedging_cost >= 0):
            raise InvalidInputError(f"risk {self.id!r}: hedging cost must be >= 0, got {self.hedging_cost}")


@dataclass(frozen=True)
class RiskExposure:
    risk_id: str
    extreme_loss: float
    tail_loss: float | None = None
    hedging_cost: float | None = None
    name: str = ""


class RankKey(enum.Enum):
    EXTREME = "extreme"
    TAIL = "tail"


def _crisp(model, scenario: Scenario, output: str) -> float:
    if isinstance(model, FuzzyModel):
        return infer(model, scenario).crisp[output]
    return model.infer_crisp(scenario)[output]


def assess(risk: RiskDefinition, p: float = 99.5, workers: int = 1) -> RiskExposure:
    """Extreme-case loss, plus the ``p``-th percentile loss when a simulation is given."""
    try:
        extreme = _crisp(risk.model, risk.extreme_scenario, risk.loss_output)
        tail = None
        if risk.simulation is not None:
            dist = simulate(risk.model, risk.simulation, risk.loss_output, workers=workers)
            tail = percentile(dist, p)
    except FuzzRiskError as exc:
        raise RiskAssessmentError(risk.id, exc) from exc
    return RiskExposure(risk.id, extreme, tail, risk.hedging_cost, risk.name)


def default_key(exposures: Sequence[RiskExposure]) -> RankKey:
    """Tail loss when every risk was simulated, otherwise the extreme-case loss."""
    if exposures and all(e.tail_loss is not None for e in exposures):
        return RankKey.TAIL
    return RankKey.EXTREME


def _loss(exposure: RiskExposure, key: RankKey) -> float:
    value = exposure.extreme_loss if key is RankKey.EXTREME else exposure.tail_loss
    if value is None:
        raise InvalidInputError(f"risk {exposure.risk_id!r} has no {key.value} loss")
    return value


def rank(exposures: Sequence[RiskExposure], key: RankKey | str = RankKey.EXTREME) -> list[RiskExposure]:
    """Largest loss first; equal losses in ascending id order."""
    key = RankKey(key)
    values = {id(e): _loss(e, key) for e in exposures}
    return sorted(exposures, key=lambda e: (-values[id(e)], e.risk_id))


@dataclass(frozen=True)
class WeightedSum:
    """Weighted average; names without an explicit weight count 1."""

    weights: Mapping[str, float] = field(default_factory=dict)

    def weight(self, name: str) -> float:
        return float(self.weights.get(name, 1.0))


class Combiner(enum.Enum):
    SUM = "sum"
    MAX = "max"


@dataclass(frozen=True)
class Hierarchy:
    enterprise: str
    units: Mapping[str, Sequence[str]]
    combiner: Union[Combiner, WeightedSum] = Combiner.SUM

    def __post_init__(self):
        if not isinstance(self.combiner, WeightedSum):
            object.__setattr__(self, "combiner", Combiner(self.combiner))
        seen: dict[str, str] = {}
        for unit, members in self.units.items():
            if not members:
                raise InvalidInputError(f"unit {unit!r} has no risks")
            for rid in members:
                if rid in seen:
                    raise InvalidInputError(f"risk {rid!r} appears in both {seen[rid]!r} and {unit!r}")
                seen[rid] = unit
        if isinstance(self.combiner, WeightedSum):
            if any(not (w >= 0 and math.isfinite(w)) for w in self.combiner.weights.values()):
                raise DegenerateWeightsError("roll-up weights must be finite and >= 0")

    @property
    def risk_ids(self) -> list[str]:
        return [rid for members in self.units.values() for rid in members]


@dataclass(frozen=True)
class Rollup:
    units: dict[str, float]
    enterprise: float


def _combine(combiner, names: Sequence[str], values: Sequence[float], scope: str) -> float:
    if combiner is Combiner.SUM:
        acc = 0.0
        for v in values:
            acc += v
        return acc
    if combiner is Combiner.MAX:
        return max(values)
    weights = [combiner.weight(n) for n in names]
    total = sum(weights)
    if not total > 0:
        raise DegenerateWeightsError(f"all roll-up weights are zero in {scope}")
    acc = 0.0
    for w, v in zip(weights, values):
        acc += w * v
    return acc / total


def rollup(
    hierarchy: Hierarchy,
    exposures: Sequence[RiskExposure],
    key: RankKey | str = RankKey.EXTREME,
) -> Rollup:
    """Combine member losses per unit, then unit exposures for the enterprise."""
    key = RankKey(key)
    by_id = {e.risk_id: e for e in exposures}
    missing = [rid for rid in hierarchy.risk_ids if rid not in by_id]
    if missing:
        raise InvalidInputError(f"no exposure for risks {missing}")
    units = {}
    for unit, members in hierarchy.units.items():
        values = [_loss(by_id[rid], key) for rid in members]
        units[unit] = _combine(hierarchy.combiner, list(members), values, f"unit {unit!r}")
    enterprise = _combine(hierarchy.combiner, list(units), list(units.values()), hierarchy.enterprise)
    return Rollup(units, enterprise)


def mitigation_priority(
    exposures: Sequence[RiskExposure],
    key: RankKey | str = RankKey.EXTREME,
) -> tuple[list[tuple[str, float]], list[str]]:
    """Loss-to-hedging-cost ratios, best value for money first.

    Risks with no or zero hedging cost are left out and explained in the
    returned diagnostics.
    """
    key = RankKey(key)
    ratios = []
    diagnostics = []
    for e in exposures:
        if e.hedging_cost is None:
            diagnostics.append(f"{e.risk_id}: no hedging cost; excluded from priority")
        elif not e.hedging_cost > 0:
            diagnostics.append(f"{e.risk_id}: hedging cost is zero; excluded from priority")
        else:
            ratios.append((e.risk_id, _loss(e, key) / e.hedging_cost))
    ratios.sort(key=lambda item: (-item[1], item[0]))
    return ratios, diagnostics
