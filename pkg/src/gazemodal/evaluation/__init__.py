"""Metrics, cross-validation experiments and report emission."""

from gazemodal.evaluation.experiments import (
    CLASSIFICATION_EXPERIMENTS,
    EXPLAINABILITY_EXPERIMENTS,
    ExperimentDataset,
    ExperimentResult,
    ExperimentSpec,
    experiment_matrix,
    run_cv_experiment,
)
from gazemodal.evaluation.metrics import attention_overlap, binary_auc, ovr_auc_report
from gazemodal.evaluation.reports import emit_overlap_summaries, emit_reports, summarize_reports

__all__ = [
    "CLASSIFICATION_EXPERIMENTS",
    "EXPLAINABILITY_EXPERIMENTS",
    "ExperimentDataset",
    "ExperimentResult",
    "ExperimentSpec",
    "attention_overlap",
    "binary_auc",
    "emit_overlap_summaries",
    "emit_reports",
    "experiment_matrix",
    "ovr_auc_report",
    "run_cv_experiment",
    "summarize_reports",
]
