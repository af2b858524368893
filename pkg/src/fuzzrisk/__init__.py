"""Mamdani fuzzy inference for linguistic risk assessment.

The submodules mirror the workflow: ``membership`` and ``logic`` hold the
fuzzy-set primitives, ``rulelang`` parses IF-THEN rules, ``engine`` runs
inference, ``experts`` pools several experts' opinions, ``fuznum`` does
alpha-cut arithmetic, ``montecarlo`` simulates loss distributions and
``portfolio`` ranks and rolls up risk exposure.
"""

from .engine import FuzzyModel, InferenceConfig, LinguisticVariable, infer
from .errors import FuzzRiskError, NoRuleFiredError
from .membership import (
    Gaussian,
    GeneralizedBell,
    Sampled,
    Sigmoid,
    Trapezoid,
    Triangle,
    Universe,
)
from .rulelang import format_rule, parse

__version__ = "0.1.0"

__all__ = [
    "FuzzyModel",
    "InferenceConfig",
    "LinguisticVariable",
    "infer",
    "FuzzRiskError",
    "NoRuleFiredError",
    "Gaussian",
    "GeneralizedBell",
    "Sampled",
    "Sigmoid",
    "Trapezoid",
    "Triangle",
    "Universe",
    "format_rule",
    "parse",
]
