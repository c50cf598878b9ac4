"""Simulation environments that return measured group performances."""

from .analytic import AnalyticEnvironment
from .genomic import (
    CaseControlSample,
    GenomicSamplingSession,
    GenomicWorld,
    GenomicWorldConfig,
    RiskModel,
    draw_case_control_sample,
    evaluate_group_value,
    generate_world,
    run_allocation_curve,
    train_risk_model,
)

__all__ = [
    "AnalyticEnvironment",
    "CaseControlSample",
    "GenomicSamplingSession",
    "GenomicWorld",
    "GenomicWorldConfig",
    "RiskModel",
    "draw_case_control_sample",
    "evaluate_group_value",
    "generate_world",
    "run_allocation_curve",
    "train_risk_model",
]
