"""Loss-distribution simulation and tail percentiles.

Each draw comes from its own Philox stream keyed by the seed and positioned
by ``(sample index, variable index)``, so sample ``i`` is the same no matter
how many workers run or in which order samples are evaluated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .engine import FuzzyModel, infer
from .errors import (
    EmptyDistributionError,
    ExpertAggregationError,
    FuzzRiskError,
    InvalidInputError,
    NoRuleFiredError,
)
from .membership import Universe

__all__ = [
    "Point",
    "Uniform",
    "Normal",
    "Triangular",
    "Empirical",
    "Distribution",
    "SimulationSpec",
    "LossDistribution",
    "Summary",
    "MAX_REJECTIONS",
    "distribution_from_dict",
    "sample_stream",
    "simulate",
    "percentile",
    "summarize",
]

MAX_REJECTIONS = 1_000_000
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Point:
    value: float

    def check(self, universe: Universe):
        if not universe.contains(self.value):
            raise InvalidInputError(f"point {self.value} outside universe")

    def draw(self, rng: np.random.Generator, universe: Universe) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def check(self, universe: Universe):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise InvalidInputError(f"uniform needs finite lo < hi, got [{self.lo}, {self.hi}]")
        if self.lo < universe.lo or self.hi > universe.hi:
            raise InvalidInputError(f"uniform [{self.lo}, {self.hi}] leaves the universe")

    def draw(self, rng, universe):
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class Normal:
    """Normal distribution truncated to the variable's universe by rejection."""

    mean: float
    sd: float

    def check(self, universe: Universe):
        if not (math.isfinite(self.mean) and math.isfinite(self.sd) and self.sd > 0):
            raise InvalidInputError(f"normal needs finite mean and sd > 0, got {self.mean}, {self.sd}")

    def draw(self, rng, universe):
        for _ in range(MAX_REJECTIONS):
            x = float(rng.normal(self.mean, self.sd))
            if universe.contains(x):
                return x
        raise InvalidInputError(
            f"normal({self.mean}, {self.sd}) produced no value inside "
            f"[{universe.lo}, {universe.hi}] in {MAX_REJECTIONS} attempts"
        )


@dataclass(frozen=True)
class Triangular:
    lo: float
    mode: float
    hi: float

    def check(self, universe: Universe):
        if not all(map(math.isfinite, (self.lo, self.mode, self.hi))) or not (
            self.lo <= self.mode <= self.hi and self.lo < self.hi
        ):
            raise InvalidInputError(f"triangular needs lo <= mode <= hi, lo < hi, got {self}")
        if self.lo < universe.lo or self.hi > universe.hi:
            raise InvalidInputError(f"triangular [{self.lo}, {self.hi}] leaves the universe")

    def draw(self, rng, universe):
        return float(rng.triangular(self.lo, self.mode, self.hi))


@dataclass(frozen=True)
class Empirical:
    """Resamples uniformly from observed values."""

    samples: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(sorted(float(s) for s in self.samples)))

    def check(self, universe: Universe):
        if not self.samples or not all(map(math.isfinite, self.samples)):
            raise InvalidInputError("empirical distribution needs finite samples")
        if self.samples[0] < universe.lo or self.samples[-1] > universe.hi:
            raise InvalidInputError("empirical samples leave the universe")

    def draw(self, rng, universe):
        return self.samples[int(rng.integers(len(self.samples)))]


Distribution = Union[Point, Uniform, Normal, Triangular, Empirical]


def distribution_from_dict(obj: Mapping) -> Distribution:
    """``{"dist": "uniform", "lo": 0, "hi": 1}`` and friends."""
    try:
        kind = str(obj["dist"]).lower()
        if kind == "point":
            return Point(float(obj["value"]))
        if kind == "uniform":
            return Uniform(float(obj["lo"]), float(obj["hi"]))
        if kind == "normal":
            return Normal(float(obj["mean"]), float(obj["sd"]))
        if kind == "triangular":
            return Triangular(float(obj["lo"]), float(obj["mode"]), float(obj["hi"]))
        if kind == "empirical":
            return Empirical(tuple(float(s) for s in obj["samples"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad distribution {obj!r}: {exc}") from None
    raise InvalidInputError(f"unknown distribution {obj.get('dist')!r}")


@dataclass(frozen=True)
class SimulationSpec:
    inputs: Mapping[str, Distribution]
    n_samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_samples, int) or self.n_samples < 1:
            raise InvalidInputError(f"n_samples must be >= 1, got {self.n_samples!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= _MASK64:
            raise InvalidInputError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True, eq=False)
class LossDistribution:
    samples: np.ndarray
    n_failed: int
    seed: int

    def __post_init__(self):
        arr = np.sort(np.asarray(self.samples, dtype=float))
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def n_samples(self) -> int:
        return int(self.samples.size) + self.n_failed

    def __eq__(self, other):
        if not isinstance(other, LossDistribution):
            return NotImplemented
        return (
            self.samples.tobytes() == other.samples.tobytes()
            and self.n_failed == other.n_failed
            and self.seed == other.seed
        )

    __hash__ = None


def sample_stream(seed: int, sample_index: int, variable_index: int) -> np.random.Generator:
    """Independent generator for one (sample, variable) cell."""
    bitgen = np.random.Philox(
        key=seed & _MASK64,
        counter=[0, variable_index & _MASK64, sample_index & _MASK64, 0],
    )
    return np.random.Generator(bitgen)


def _evaluator(model, output: str):
    # FuzzyModel or an ExpertPanel pooling full models
    if isinstance(model, FuzzyModel):
        if output not in model.output_names:
            raise InvalidInputError(f"{output!r} is not an output of the model")
        return model, lambda scenario: infer(model, scenario).crisp[output]
    if output not in model.output_names:
        raise InvalidInputError(f"{output!r} is not an output of the panel models")
    return model.reference_model, lambda scenario: model.infer_crisp(scenario)[output]


def _is_no_fire(exc: Exception) -> bool:
    if isinstance(exc, NoRuleFiredError):
        return True
    return isinstance(exc, ExpertAggregationError) and isinstance(exc.cause, NoRuleFiredError)


def simulate(model, spec: SimulationSpec, output: str, workers: int = 1) -> LossDistribution:
    """Draw inputs, run inference per sample, and collect the crisp losses.

    ``model`` is a FuzzyModel or an output-pooling ExpertPanel.  Samples
    where no rule fires are counted in ``n_failed``; if all of them fail an
    EmptyDistributionError is raised.
    """
    reference, run = _evaluator(model, output)
    inputs = reference.inputs
    missing = [v.name for v in inputs if v.name not in spec.inputs]
    extra = sorted(set(spec.inputs) - {v.name for v in inputs})
    if missing or extra:
        raise InvalidInputError(f"simulation inputs do not match model: missing {missing}, unknown {extra}")
    for v in inputs:
        spec.inputs[v.name].check(v.universe)

    def one(i: int) -> float | None:
        scenario = {
            v.name: spec.inputs[v.name].draw(sample_stream(spec.seed, i, j), v.universe)
            for j, v in enumerate(inputs)
        }
        try:
            return run(scenario)
        except FuzzRiskError as exc:
            if _is_no_fire(exc):
                return None
            raise

    indices = range(spec.n_samples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            losses = list(pool.map(one, indices, chunksize=64))
    else:
        losses = [one(i) for i in indices]
    kept = [x for x in losses if x is not None]
    n_failed = len(losses) - len(kept)
    if not kept:
        raise EmptyDistributionError(f"no rule fired in any of {n_failed} samples", n_failed)
    return LossDistribution(np.array(kept), n_failed, spec.seed)


def percentile(dist: LossDistribution, p: float) -> float:
    """Nearest-rank percentile: the sample at 1-based rank ``ceil(p/100 * n)``."""
    if not 0.0 < p < 100.0:
        raise InvalidInputError(f"percentile must be in (0, 100), got {p}")
    n = dist.samples.size
    if n == 0:
        raise EmptyDistributionError("percentile of an empty distribution")
    r = p * n / 100.0
    # absorb representation error so that e.g. 99.9% of 1000 is rank 999, not 1000
    if abs(r - round(r)) <= 1e-9 * max(1.0, r):
        r = round(r)
    rank = min(max(math.ceil(r), 1), n)
    return float(dist.samples[rank - 1])


@dataclass(frozen=True)
class Summary:
    mean: float
    min: float
    max: float
    p50: float
    p95: float
    p99_5: float
    n_failed: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "p50": self.p50,
            "p95": self.p95,
            "p99.5": self.p99_5,
            "n_failed": self.n_failed,
        }


def summarize(dist: LossDistribution) -> Summary:
    s = dist.samples
    if s.size == 0:
        raise EmptyDistributionError("cannot summarize an empty distribution", dist.n_failed)
    return Summary(
        mean=math.fsum(s.tolist()) / s.size,
        min=float(s[0]),
        max=float(s[-1]),
        p50=percentile(dist, 50),
        p95=percentile(dist, 95),
        p99_5=percentile(dist, 99.5),
        n_failed=dist.n_failed,
    )
