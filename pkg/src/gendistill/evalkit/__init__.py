"""Weighted-sum featurization, synthetic probes and the ablation harness."""

from .ablation import (
    BUILTIN_SUITES,
    REPORT_HEADER,
    AblationReport,
    AblationRun,
    AblationSuite,
    ReportRow,
    builtin_suite,
    load_suite,
    parse_suite,
    run_ablation,
)
from .probe import (
    TASKS,
    FeaturizerWeights,
    Probe,
    ProbeResult,
    ProbeTask,
    accuracy_from_predictions,
    eval_probe,
    get_task,
    pooled_members,
    train_probe,
    weighted_features,
)

__all__ = [
    "BUILTIN_SUITES",
    "REPORT_HEADER",
    "TASKS",
    "AblationReport",
    "AblationRun",
    "AblationSuite",
    "FeaturizerWeights",
    "Probe",
    "ProbeResult",
    "ProbeTask",
    "ReportRow",
    "accuracy_from_predictions",
    "builtin_suite",
    "eval_probe",
    "get_task",
    "load_suite",
    "parse_suite",
    "pooled_members",
    "run_ablation",
    "train_probe",
    "weighted_features",
]
