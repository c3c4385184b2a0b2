"""Bayesian adaptive visual-acuity testing.

Library layers, bottom up: unit conversions and visual response functions
(`units`, `vrf`), the weighted-particle posterior over (k0, k1) (`belief`),
letter-size selection policies (`policy`), exam orchestration and baselines
(`exams`), the simulation/benchmark harness (`simulate`), and a FastAPI
exam service (`service`) with a CLI front door (`cli`).
"""

from .belief import GumbelPrior, K0RatioPrior, Observation, ParticleSet
from .exams import (
    AdaptiveExamEngine,
    ChartSpec,
    ExamConfig,
    ExamResult,
    FixedLength,
    FlatPrior,
    UntilConfident,
    run_adaptive,
    run_chart,
    run_const,
    run_exam,
    run_fract,
)
from .simulate import SimConfig, TruePatient, run_benchmark
from .vrf import FractParams, LocationScaleParams, SizeTrialSummary, VrfParams

__version__ = "0.1.0"

__all__ = [
    "AdaptiveExamEngine",
    "ChartSpec",
    "ExamConfig",
    "ExamResult",
    "FixedLength",
    "FlatPrior",
    "FractParams",
    "GumbelPrior",
    "K0RatioPrior",
    "LocationScaleParams",
    "Observation",
    "ParticleSet",
    "SimConfig",
    "SizeTrialSummary",
    "TruePatient",
    "UntilConfident",
    "VrfParams",
    "run_adaptive",
    "run_benchmark",
    "run_chart",
    "run_const",
    "run_exam",
    "run_fract",
    "__version__",
]
