"""Loading model, scenario, simulation and portfolio files.

Model files are JSON::

    {
      "variables": [{"name": "x", "kind": "input", "universe": [0, 10],
                     "terms": {"low": {"shape": "triangle", "params": [0, 0, 5]}}}],
      "rules": ["IF x IS low THEN y IS low", {"rule": "...", "expert": "A"}],
      "experts": {"mode": "blend_outputs", "experts": [{"id": "A", "weight": 2}],
                  "models": {"A": {"rules": [...]}}, "conflict_policy": "report"},
      "config": {"grid_points": 1001}
    }

Every problem found while loading becomes a ``FileDiagnostic``; loading
fails with ``ModelFileError`` carrying all of them.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

from . import rulelang
from .engine import FuzzyModel, InferenceConfig, LinguisticVariable
from .errors import FuzzRiskError
from .experts import (
    ConflictPolicy,
    ExpertPanel,
    ExpertProfile,
    PanelMode,
    RuleConflict,
    blend_memberships,
    detect_conflicts,
    resolve_conflicts,
)
from .membership import Universe, mf_from_dict
from .montecarlo import SimulationSpec, distribution_from_dict
from .portfolio import Combiner, Hierarchy, RiskDefinition, WeightedSum

__all__ = [
    "GRID_ENV",
    "FileDiagnostic",
    "ModelFileError",
    "LoadedModel",
    "Portfolio",
    "read_text",
    "load_model",
    "load_model_text",
    "load_scenarios",
    "load_simulation",
    "simulation_from_dict",
    "load_portfolio",
]

GRID_ENV = "FUZZRISK_GRID"


@dataclass(frozen=True)
class FileDiagnostic:
    path: str
    message: str
    line: int | None = None
    col: int | None = None

    def __str__(self):
        where = self.path
        if self.line is not None:
            where += f":{self.line}"
            if self.col is not None:
                where += f":{self.col}"
        return f"{where}: {self.message}"


class ModelFileError(FuzzRiskError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


def read_text(path: str | os.PathLike) -> str:
    """Read a UTF-8 file; OSError (and decode errors, as OSError) propagate to the caller."""
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise OSError(f"{path}: not valid UTF-8: {exc}") from None


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


@dataclass
class _Ctx:
    path: str
    text: str
    diags: list = field(default_factory=list)
    cursor: int = 0

    def error(self, message: str, offset: int | None = None):
        if offset is None:
            self.diags.append(FileDiagnostic(self.path, message))
        else:
            line, col = _line_col(self.text, offset)
            self.diags.append(FileDiagnostic(self.path, message, line, col))

    def locate(self, source: str) -> int | None:
        """Offset of the first character of a rule string inside the JSON text."""
        needle = json.dumps(source, ensure_ascii=False)
        at = self.text.find(needle, self.cursor)
        if at < 0:
            at = self.text.find(needle)
        if at < 0:
            return None
        self.cursor = at + len(needle)
        return at + 1


@dataclass(frozen=True)
class LoadedModel:
    """Result of loading a model file.

    ``model`` is what inference runs on: a FuzzyModel, or an ExpertPanel when
    experts pool their outputs.  ``rule_texts`` keeps one display string per
    rule of ``reference``.
    """

    model: Union[FuzzyModel, ExpertPanel]
    reference: FuzzyModel
    conflicts: tuple[RuleConflict, ...] = ()
    removed: tuple = ()

    @property
    def rule_texts(self) -> list[str]:
        return [rulelang.format_rule(r) for r in self.reference.rules]


def _variables(ctx: _Ctx, raw, where: str) -> list[LinguisticVariable]:
    if not isinstance(raw, list) or not raw:
        ctx.error(f"{where}: expected a non-empty list of variables")
        return []
    out = []
    for i, v in enumerate(raw):
        label = f"{where}[{i}]"
        try:
            if not isinstance(v, dict):
                raise FuzzRiskError("expected an object")
            label = f"{where}[{i}] ({v.get('name', '?')})"
            universe = v.get("universe")
            if not isinstance(universe, list) or len(universe) != 2:
                raise FuzzRiskError("universe must be [lo, hi]")
            terms_raw = v.get("terms")
            if not isinstance(terms_raw, dict):
                raise FuzzRiskError("terms must be an object of {name: {shape, params}}")
            terms = {}
            for name, mf in terms_raw.items():
                try:
                    terms[name] = mf_from_dict(mf)
                except FuzzRiskError as exc:
                    raise FuzzRiskError(f"term {name!r}: {exc}") from None
            out.append(LinguisticVariable(
                str(v.get("name", "")), Universe(*universe), terms, str(v.get("kind", "input"))))
        except (FuzzRiskError, TypeError) as exc:
            ctx.error(f"{label}: {exc}")
    return out


def _rules(ctx: _Ctx, raw, where: str, default_expert: str | None = None):
    """Parse rule entries; returns the rules and their ``(index, text offset)`` positions."""
    if not isinstance(raw, list):
        ctx.error(f"{where}: expected a list of rules")
        return [], []
    rules = []
    offsets = []
    for i, entry in enumerate(raw):
        expert = default_expert
        weight = None
        if isinstance(entry, dict):
            source = entry.get("rule")
            expert = entry.get("expert", expert)
            weight = entry.get("weight")
        else:
            source = entry
        if not isinstance(source, str):
            ctx.error(f"{where}[{i}]: rule must be a string or {{rule, expert}} object")
            continue
        start = ctx.locate(source)
        try:
            rule = rulelang.parse(source)
            if weight is not None:
                rule = rulelang.Rule(rule.antecedent, rule.consequent, float(weight), span=rule.span)
        except rulelang.RuleError as exc:
            offset = None if start is None else start + exc.position
            ctx.error(f"{where}[{i}]: {exc.message}", offset)
            continue
        except (TypeError, ValueError) as exc:
            ctx.error(f"{where}[{i}]: bad weight: {exc}", start)
            continue
        rules.append(rulelang.Rule(rule.antecedent, rule.consequent, rule.weight, expert, rule.span))
        offsets.append((i, start))
    return rules, offsets


@dataclass
class _Declared:
    inputs: list
    outputs: list


def _check_rules(ctx: _Ctx, rules, offsets, inputs, outputs, where: str) -> bool:
    decl = _Declared(inputs, outputs)
    ok = True
    for rule, (i, start) in zip(rules, offsets):
        for d in rulelang.validate(rule, decl):
            ok = False
            offset = None if start is None else start + d.span[0]
            ctx.error(f"{where}[{i}]: {d.code}: {d.message}", offset)
    return ok


def _config(ctx: _Ctx, raw) -> InferenceConfig | None:
    raw = raw or {}
    if not isinstance(raw, dict):
        ctx.error("config: expected an object")
        return None
    grid = raw.get("grid_points", 1001)
    env = os.environ.get(GRID_ENV)
    if env:
        try:
            grid = int(env)
        except ValueError:
            ctx.error(f"{GRID_ENV}={env!r} is not an integer")
            return None
    try:
        return InferenceConfig(grid_points=grid)
    except FuzzRiskError as exc:
        ctx.error(f"config: {exc}")
        return None


def _build_model(ctx, inputs, outputs, rules, config, where) -> FuzzyModel | None:
    try:
        return FuzzyModel(inputs, outputs, rules, config)
    except FuzzRiskError as exc:
        ctx.error(f"{where}: {exc}")
        return None


def load_model_text(text: str, path: str = "<model>") -> LoadedModel:
    ctx = _Ctx(path, text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError([FileDiagnostic(path, f"invalid JSON: {exc.msg}", exc.lineno, exc.colno)])
    if not isinstance(doc, dict):
        raise ModelFileError([FileDiagnostic(path, "model file must be a JSON object")])
    return _load_doc(ctx, doc)


def _load_doc(ctx: _Ctx, doc: dict) -> LoadedModel:
    config = _config(ctx, doc.get("config"))
    variables = _variables(ctx, doc.get("variables"), "variables")
    inputs = [v for v in variables if v.kind == "input"]
    outputs = [v for v in variables if v.kind == "output"]
    experts_raw = doc.get("experts")
    rules, offsets = _rules(ctx, doc.get("rules", []), "rules")
    _check_rules(ctx, rules, offsets, inputs, outputs, "rules")
    if ctx.diags or config is None:
        raise ModelFileError(ctx.diags)

    if experts_raw is None:
        rule_sets = _tagged(rules)
        rules, conflicts, removed = _conflicts(ctx, rule_sets, rules, ConflictPolicy.REPORT)
        model = _build_model(ctx, inputs, outputs, rules, config, "model")
        if ctx.diags or model is None:
            raise ModelFileError(ctx.diags)
        return LoadedModel(model, model, tuple(conflicts), tuple(removed))

    if not isinstance(experts_raw, dict):
        raise ModelFileError([FileDiagnostic(ctx.path, "experts: expected an object")])
    try:
        mode = PanelMode(str(experts_raw.get("mode", "")).lower())
        policy = ConflictPolicy(str(experts_raw.get("conflict_policy", "report")).lower())
        profiles = [
            ExpertProfile(str(e["id"]), float(e.get("weight", 1.0)), str(e.get("basis", "")))
            for e in experts_raw.get("experts", [])
        ]
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelFileError([FileDiagnostic(ctx.path, f"experts: {exc}")]) from None

    if mode is PanelMode.BLEND_MEMBERSHIPS:
        return _load_blend_memberships(ctx, experts_raw, profiles, policy, inputs, outputs, rules, config)

    models_raw = experts_raw.get("models")
    if not isinstance(models_raw, dict):
        raise ModelFileError([FileDiagnostic(ctx.path, "experts.models: expected an object per expert")])
    per_expert_rules = {}
    per_expert_vars = {}
    for eid, sub in models_raw.items():
        where = f"experts.models.{eid}"
        if not isinstance(sub, dict):
            ctx.error(f"{where}: expected an object")
            continue
        if "variables" in sub:
            sub_vars = _variables(ctx, sub["variables"], f"{where}.variables")
            sub_in = [v for v in sub_vars if v.kind == "input"]
            sub_out = [v for v in sub_vars if v.kind == "output"]
        else:
            sub_in, sub_out = inputs, outputs
        sub_rules, sub_offsets = _rules(ctx, sub.get("rules", []), f"{where}.rules", default_expert=eid)
        _check_rules(ctx, sub_rules, sub_offsets, sub_in, sub_out, f"{where}.rules")
        per_expert_rules[eid] = sub_rules
        per_expert_vars[eid] = (sub_in, sub_out)
    if ctx.diags:
        raise ModelFileError(ctx.diags)
    resolution_sets = {eid: list(r) for eid, r in per_expert_rules.items()}
    conflicts = detect_conflicts(resolution_sets)
    removed = ()
    if conflicts:
        if policy is ConflictPolicy.REPORT:
            for c in conflicts:
                ctx.error(f"experts: {c}")
            raise ModelFileError(ctx.diags)
        res = resolve_conflicts(resolution_sets, conflicts, policy)
        resolution_sets, removed = res.rule_sets, res.removed
    models = {}
    for eid, (sub_in, sub_out) in per_expert_vars.items():
        m = _build_model(ctx, sub_in, sub_out, resolution_sets[eid], config, f"experts.models.{eid}")
        if m is not None:
            models[eid] = m
    if ctx.diags:
        raise ModelFileError(ctx.diags)
    try:
        panel = ExpertPanel(profiles, mode, models=models)
    except FuzzRiskError as exc:
        raise ModelFileError([FileDiagnostic(ctx.path, f"experts: {exc}")]) from None
    return LoadedModel(panel, panel.reference_model, tuple(conflicts), tuple(removed))


def _tagged(rules) -> dict:
    sets: dict = {}
    for r in rules:
        if r.expert is not None:
            sets.setdefault(r.expert, []).append(r)
    return sets


def _conflicts(ctx, rule_sets, rules, policy):
    conflicts = detect_conflicts(rule_sets)
    if not conflicts:
        return rules, conflicts, ()
    if policy is ConflictPolicy.REPORT:
        for c in conflicts:
            ctx.error(f"experts: {c}")
        raise ModelFileError(ctx.diags)
    res = resolve_conflicts(rule_sets, conflicts, policy)
    doomed = list(res.removed)
    kept = [r for r in rules if (r.expert, r) not in doomed]
    return kept, conflicts, res.removed


def _load_blend_memberships(ctx, raw, profiles, policy, inputs, outputs, rules, config) -> LoadedModel:
    rules, conflicts, removed = _conflicts(ctx, _tagged(rules), rules, policy)
    base = _build_model(ctx, inputs, outputs, rules, config, "model")
    if base is None:
        raise ModelFileError(ctx.diags)
    overrides_raw = raw.get("overrides", {})
    overrides = {}
    if not isinstance(overrides_raw, dict):
        raise ModelFileError([FileDiagnostic(ctx.path, "experts.overrides: expected an object")])
    for eid, per_var in overrides_raw.items():
        overrides[eid] = {}
        for var, terms in (per_var or {}).items():
            overrides[eid][var] = {}
            for term, mf in (terms or {}).items():
                try:
                    overrides[eid][var][term] = mf_from_dict(mf)
                except FuzzRiskError as exc:
                    ctx.error(f"experts.overrides.{eid}.{var}.{term}: {exc}")
    if ctx.diags:
        raise ModelFileError(ctx.diags)
    try:
        panel = ExpertPanel(profiles, PanelMode.BLEND_MEMBERSHIPS, overrides=overrides)
        model = blend_memberships(panel, base)
    except FuzzRiskError as exc:
        raise ModelFileError([FileDiagnostic(ctx.path, f"experts: {exc}")]) from None
    return LoadedModel(model, model, tuple(conflicts), tuple(removed))


def load_model(path: str | os.PathLike) -> LoadedModel:
    """Load and fully validate a model file.  OSError propagates for I/O failures."""
    return load_model_text(read_text(path), str(path))


# --------------------------------------------------------------------------
# Scenarios, simulations, portfolios
# --------------------------------------------------------------------------


def load_scenarios(text: str, path: str = "<scenarios>") -> list[tuple[int, dict[str, Any]]]:
    """Parse a scenario CSV: header of input names, one scenario per row.

    Returns ``(row number, {name: value})`` pairs; values that do not parse
    as numbers are kept as strings so the caller can report that row.
    """
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if any(cell.strip() for cell in r)]
    if not rows:
        raise ModelFileError([FileDiagnostic(path, "scenario file has no header")])
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header) or not all(header):
        raise ModelFileError([FileDiagnostic(path, "scenario header has blank or duplicate names", 1)])
    out = []
    for n, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            out.append((n, {"__error__": f"expected {len(header)} cells, got {len(row)}"}))
            continue
        values: dict[str, Any] = {}
        for name, cell in zip(header, row):
            try:
                values[name] = float(cell)
            except ValueError:
                values[name] = cell
        out.append((n, values))
    return out


def simulation_from_dict(doc: dict, where: str = "simulation") -> tuple[SimulationSpec, str | None]:
    """Build a SimulationSpec from ``{"inputs": {...}, "n_samples": N, "seed": S, "output": name}``."""
    if not isinstance(doc, dict) or not isinstance(doc.get("inputs"), dict):
        raise FuzzRiskError(f"{where}: expected an object with an 'inputs' map")
    inputs = {name: distribution_from_dict(d) for name, d in doc["inputs"].items()}
    n = doc.get("n_samples", 10_000)
    seed = doc.get("seed", 0)
    return SimulationSpec(inputs, n, seed), doc.get("output")


def load_simulation(path) -> tuple[dict, str]:
    text = read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError([FileDiagnostic(str(path), f"invalid JSON: {exc.msg}", exc.lineno, exc.colno)])
    return doc, str(path)


@dataclass(frozen=True)
class Portfolio:
    risks: tuple[RiskDefinition, ...]
    hierarchy: Hierarchy
    percentile: float = 99.5
    weights: dict = field(default_factory=dict)


def _combiner(raw, weights) -> Union[Combiner, WeightedSum]:
    if isinstance(raw, dict) and "weighted" in raw:
        return WeightedSum({k: float(v) for k, v in (raw["weighted"] or {}).items()})
    name = str(raw or "sum").lower()
    if name == "weighted":
        return WeightedSum({k: float(v) for k, v in (weights or {}).items()})
    return Combiner(name)


def load_portfolio(path) -> Portfolio:
    """Load a portfolio file; model references resolve against the file's directory."""
    text = read_text(path)
    p = str(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError([FileDiagnostic(p, f"invalid JSON: {exc.msg}", exc.lineno, exc.colno)])
    if not isinstance(doc, dict) or not isinstance(doc.get("risks"), list) or not doc["risks"]:
        raise ModelFileError([FileDiagnostic(p, "portfolio needs a non-empty 'risks' list")])
    base = Path(path).parent
    risks = []
    diags = []
    for i, r in enumerate(doc["risks"]):
        where = f"risks[{i}]"
        try:
            rid = str(r["id"])
            where = f"risks[{i}] ({rid})"
            model_ref = r["model"]
            if isinstance(model_ref, str):
                loaded = load_model(base / model_ref)
            else:
                loaded = load_model_text(json.dumps(model_ref), f"{p}#{where}")
            sim = None
            if r.get("simulation") is not None:
                sim, _ = simulation_from_dict(r["simulation"], f"{where}.simulation")
            output = r.get("loss_output") or loaded.reference.output_names[0]
            cost = r.get("hedging_cost")
            risks.append(RiskDefinition(
                id=rid,
                name=str(r.get("name", rid)),
                model=loaded.model,
                loss_output=output,
                extreme_scenario={k: float(v) for k, v in r["extreme_scenario"].items()},
                simulation=sim,
                hedging_cost=None if cost is None else float(cost),
            ))
        except ModelFileError as exc:
            diags.extend(exc.diagnostics)
        except (FuzzRiskError, KeyError, TypeError, ValueError, AttributeError) as exc:
            diags.append(FileDiagnostic(p, f"{where}: {exc}"))
    if diags:
        raise ModelFileError(diags)
    ids = [r.id for r in risks]
    if len(set(ids)) != len(ids):
        raise ModelFileError([FileDiagnostic(p, "duplicate risk ids")])
    h = doc.get("hierarchy") or {}
    try:
        units = h.get("units") or {"all": ids}
        combiner = _combiner(doc.get("combiner", h.get("combiner")), h.get("weights"))
        hierarchy = Hierarchy(str(h.get("enterprise", "enterprise")), units, combiner)
        unknown = sorted(set(hierarchy.risk_ids) ^ set(ids))
        if unknown:
            raise FuzzRiskError(f"hierarchy and risks disagree on ids {unknown}")
        pct = float(doc.get("percentile", 99.5))
    except (FuzzRiskError, TypeError, ValueError, AttributeError) as exc:
        raise ModelFileError([FileDiagnostic(p, f"hierarchy: {exc}")]) from None
    weights = {k: float(v) for k, v in (h.get("weights") or {}).items()}
    return Portfolio(tuple(risks), hierarchy, pct, weights)
