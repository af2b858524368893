"""``fuzzrisk`` command line: validate, infer, simulate, rank, fuzzmath.

Exit codes: 0 success, 2 domain or validation failure, 3 I/O failure.
Floats are written with 17 significant digits so output round-trips exactly
and repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from . import fuznum
from .engine import FuzzyModel, infer
from .errors import EmptyDistributionError, FuzzRiskError, NoRuleFiredError, RiskAssessmentError
from .experts import ExpertAggregationError
from .membership import Trapezoid, Triangle, mf_from_dict
from .modelfile import (
    ModelFileError,
    load_model,
    load_portfolio,
    load_scenarios,
    load_simulation,
    read_text,
    simulation_from_dict,
)
from .montecarlo import SimulationSpec, percentile, simulate, summarize
from .portfolio import (
    Combiner,
    Hierarchy,
    RankKey,
    WeightedSum,
    assess,
    default_key,
    mitigation_priority,
    rank,
    rollup,
)

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_IO = 3


# --------------------------------------------------------------------------
# Deterministic output
# --------------------------------------------------------------------------


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps(obj: Any, indent: int | None = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits; key order is preserved."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot emit non-finite number {obj}")
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = [f"{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return _wrap("{", "}", items, indent, _level)
    if isinstance(obj, (list, tuple)):
        return _wrap("[", "]", [dumps(v, indent, _level + 1) for v in obj], indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _wrap(open_, close, items, indent, level):
    if not items:
        return open_ + close
    if indent is None:
        return open_ + ", ".join(items) + close
    pad = " " * (indent * (level + 1))
    return open_ + "\n" + ",\n".join(pad + i for i in items) + "\n" + " " * (indent * level) + close


def _csv_text(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(["" if v is None else fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _err(msg: str):
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        loaded = load_model(args.model)
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    except ModelFileError as exc:
        for d in exc.diagnostics:
            print(d)
        return EXIT_DOMAIN
    for c in loaded.conflicts:
        print(f"note: {c} (dropped)")
    print("OK")
    return EXIT_OK


def _status(exc: Exception) -> str:
    if isinstance(exc, NoRuleFiredError) or (
        isinstance(exc, ExpertAggregationError) and isinstance(exc.cause, NoRuleFiredError)
    ):
        return "no_rule_fired"
    return "invalid"


def _run_row(loaded, scenario):
    """Crisp outputs and (for plain models) the activation trace of one scenario."""
    model = loaded.model
    if isinstance(model, FuzzyModel):
        result = infer(model, scenario)
        return result.crisp, list(result.activations)
    return model.infer_crisp(scenario), None


def cmd_infer(args) -> int:
    try:
        loaded = load_model(args.model)
        scenario_text = read_text(args.scenario)
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    except ModelFileError as exc:
        for d in exc.diagnostics:
            _err(str(d))
        return EXIT_DOMAIN
    try:
        rows = load_scenarios(scenario_text, str(args.scenario))
    except ModelFileError as exc:
        for d in exc.diagnostics:
            _err(str(d))
        return EXIT_DOMAIN

    outputs = list(loaded.reference.output_names)
    rule_texts = loaded.rule_texts
    records = []
    for row, scenario in rows:
        rec: dict[str, Any] = {"row": row}
        try:
            if "__error__" in scenario:
                raise FuzzRiskError(scenario["__error__"])
            crisp, trace = _run_row(loaded, scenario)
            rec["status"] = "ok"
            rec["outputs"] = {name: crisp[name] for name in outputs}
            if args.explain and trace is not None:
                rec["activations"] = [
                    {"rule": i, "text": rule_texts[i], "strength": s} for i, s in trace
                ]
        except FuzzRiskError as exc:
            rec["status"] = _status(exc)
            rec["error"] = str(exc)
        records.append(rec)

    if args.format == "csv":
        header = ["row", "status"] + outputs
        explain = args.explain and isinstance(loaded.model, FuzzyModel)
        if explain:
            header += [f"rule{i}" for i in range(len(rule_texts))]
        table = [header]
        for rec in records:
            line = [rec["row"], rec["status"]]
            line += [rec.get("outputs", {}).get(name) for name in outputs]
            if explain:
                strengths = {a["rule"]: a["strength"] for a in rec.get("activations", [])}
                line += [strengths.get(i) for i in range(len(rule_texts))]
            table.append(line)
        sys.stdout.write(_csv_text(table))
    else:
        for rec in records:
            sys.stdout.write(dumps(rec, indent=None) + "\n")
    ok = any(rec["status"] == "ok" for rec in records)
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_simulate(args) -> int:
    try:
        loaded = load_model(args.model)
        doc, sim_path = load_simulation(args.sim)
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    except ModelFileError as exc:
        for d in exc.diagnostics:
            _err(str(d))
        return EXIT_DOMAIN
    try:
        spec, file_output = simulation_from_dict(doc, sim_path)
        spec = SimulationSpec(
            spec.inputs,
            args.samples if args.samples is not None else spec.n_samples,
            args.seed if args.seed is not None else spec.seed,
        )
        output = args.output or file_output or loaded.reference.output_names[0]
        dist = simulate(loaded.model, spec, output, workers=args.workers)
        summary = summarize(dist)
        tail = percentile(dist, args.percentile)
    except EmptyDistributionError as exc:
        _err(f"error: {exc} (n_failed={exc.n_failed})")
        return EXIT_DOMAIN
    except FuzzRiskError as exc:
        _err(f"error: {exc}")
        return EXIT_DOMAIN
    report = {
        "output": output,
        "seed": spec.seed,
        "n_samples": spec.n_samples,
        "summary": summary.to_dict(),
        "percentiles": {repr(float(args.percentile)): tail},
    }
    if args.dump:
        try:
            Path(args.dump).write_text(
                "".join(fmt_float(x) + "\n" for x in dist.samples.tolist()), encoding="utf-8"
            )
        except OSError as exc:
            _err(f"error: {exc}")
            return EXIT_IO
    sys.stdout.write(dumps(report) + "\n")
    return EXIT_OK


def cmd_rank(args) -> int:
    try:
        portfolio = load_portfolio(args.portfolio)
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    except ModelFileError as exc:
        for d in exc.diagnostics:
            _err(str(d))
        return EXIT_DOMAIN
    p = args.percentile if args.percentile is not None else portfolio.percentile
    exposures = []
    failed = []
    for risk in portfolio.risks:
        try:
            exposures.append(assess(risk, p, workers=args.workers))
        except RiskAssessmentError as exc:
            failed.append({"id": risk.id, "status": _status(exc.cause), "error": str(exc)})
    if not exposures:
        for f in failed:
            _err(f["error"])
        return EXIT_DOMAIN

    try:
        key = RankKey(args.key) if args.key else default_key(exposures)
        ranked = rank(exposures, key)
        ratios, diagnostics = mitigation_priority(exposures, key)
        hierarchy = portfolio.hierarchy
        combiner = hierarchy.combiner
        if args.combiner == "weighted":
            combiner = WeightedSum(portfolio.weights)
        elif args.combiner:
            combiner = Combiner(args.combiner)
        assessed = {e.risk_id for e in exposures}
        units = {
            u: [rid for rid in members if rid in assessed]
            for u, members in hierarchy.units.items()
        }
        units = {u: m for u, m in units.items() if m}
        roll = rollup(Hierarchy(hierarchy.enterprise, units, combiner), exposures, key)
    except FuzzRiskError as exc:
        _err(f"error: {exc}")
        return EXIT_DOMAIN

    ratio_of = dict(ratios)
    table = []
    for n, e in enumerate(ranked, start=1):
        table.append({
            "rank": n,
            "id": e.risk_id,
            "name": e.name,
            "extreme_loss": e.extreme_loss,
            "tail_loss": e.tail_loss,
            "hedging_cost": e.hedging_cost,
            "priority_ratio": ratio_of.get(e.risk_id),
        })
    if args.format == "csv":
        cols = ["rank", "id", "name", "extreme_loss", "tail_loss", "hedging_cost", "priority_ratio"]
        sys.stdout.write(_csv_text([cols] + [[row[c] for c in cols] for row in table]))
    else:
        combiner_name = "weighted" if isinstance(combiner, WeightedSum) else combiner.value
        report = {
            "key": key.value,
            "percentile": float(p),
            "ranking": table,
            "mitigation": [{"id": rid, "ratio": r} for rid, r in ratios],
            "rollup": {
                "combiner": combiner_name,
                "units": roll.units,
                "enterprise": {"name": hierarchy.enterprise, "exposure": roll.enterprise},
            },
            "failed": failed,
            "diagnostics": diagnostics,
        }
        sys.stdout.write(dumps(report) + "\n")
    for f in failed:
        _err(f"warning: {f['error']}")
    return EXIT_OK


def _operand(text: str):
    """A fuzzy-number operand: inline JSON, a path to a JSON file, or a plain number."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        if text.lstrip()[:1] in ("{", "[", "-", "+", ".") or text.lstrip()[:1].isdigit():
            raise
        # anything else names a file; a missing one is an I/O failure
        obj = json.loads(read_text(text))
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return float(obj)
    mf = mf_from_dict(obj)
    if not isinstance(mf, (Triangle, Trapezoid)):
        raise FuzzRiskError("fuzzy arithmetic operands must be triangles or trapezoids")
    return mf


def cmd_fuzzmath(args) -> int:
    try:
        x, y = _operand(args.x), _operand(args.y)
        cuts = fuznum.arith(args.op, x, y, args.levels)
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    except json.JSONDecodeError as exc:
        _err(f"error: invalid operand JSON: {exc}")
        return EXIT_DOMAIN
    except FuzzRiskError as exc:
        _err(f"error: {exc}")
        return EXIT_DOMAIN
    lines = ["alpha,lo,hi"]
    for cut in sorted(cuts, key=lambda c: -c.alpha):
        lines.append(f"{cut.alpha!r},{fmt_float(cut.lo)},{fmt_float(cut.hi)}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzrisk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("infer", help="run inference on scenario rows")
    p.add_argument("--model", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--explain", action="store_true", help="include every rule's firing strength")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("simulate", help="simulate the loss distribution")
    p.add_argument("--model", required=True)
    p.add_argument("--sim", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--percentile", type=float, default=99.5)
    p.add_argument("--output", help="output variable (default: first declared)")
    p.add_argument("--dump", help="write every simulated loss, one per line")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rank", help="assess, rank and roll up a risk portfolio")
    p.add_argument("--portfolio", required=True)
    p.add_argument("--key", choices=("extreme", "tail"))
    p.add_argument("--combiner", choices=("sum", "max", "weighted"))
    p.add_argument("--percentile", type=float)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("fuzzmath", help="alpha-cut arithmetic on two fuzzy numbers")
    p.add_argument("--op", choices=fuznum.OPS, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--levels", type=int, default=101)
    p.set_defaults(func=cmd_fuzzmath)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
