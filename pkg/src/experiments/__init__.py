"""
Experiment pipelines, statistics and the command-line interface
"""

from .models import (
    AblationReport,
    BudgetReport,
    ConfigError,
    ExperimentConfig,
    Manifest,
    MetaReport,
    StatisticsError,
    StatSummary,
    ToyReport,
    WilcoxonResult,
)
from .stats import summarize, wilcoxon_signed_rank
from .testset import gen_testset, load_testset
from .pipelines import (
    config_from_checkpoints,
    run_ablation,
    run_budget,
    run_eval,
    run_meta,
    run_toy,
    write_manifest,
)

__all__ = [
    "AblationReport",
    "BudgetReport",
    "ConfigError",
    "ExperimentConfig",
    "Manifest",
    "MetaReport",
    "StatisticsError",
    "StatSummary",
    "ToyReport",
    "WilcoxonResult",
    "config_from_checkpoints",
    "gen_testset",
    "load_testset",
    "run_ablation",
    "run_budget",
    "run_eval",
    "run_meta",
    "run_toy",
    "summarize",
    "wilcoxon_signed_rank",
    "write_manifest",
]
