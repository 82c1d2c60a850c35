"""Data plumbing, metrics and FIN-ENN versus baseline experiments."""
from .config import apply_overrides, config_hash, from_dict, load_config, to_dict
from .data import (FeatureTable, IngestionReport, TableSchema, TimeSeriesTable, WindowedSamples,
                   chrono_split, load_feature_table, load_table, make_windows, stratified_split)
from .experiment import (DatasetConfig, ExperimentConfig, ExperimentReport, FinSourceConfig,
                         ModelConfig, run_classification_experiment, run_experiment,
                         run_regression_experiment)
from .metrics import ClassMetrics, class_metrics, confusion, mape, rmse
from .report import comparison_rows, render_table
from .search import SearchReport, baseline_search
from .tasks import (EntropyClassificationTask, EntropyRegressionTask,
                    entropy_classification_table, entropy_regression_table)

__all__ = [
    "ClassMetrics", "DatasetConfig", "EntropyClassificationTask", "EntropyRegressionTask",
    "ExperimentConfig", "ExperimentReport", "FeatureTable", "FinSourceConfig",
    "IngestionReport", "ModelConfig", "SearchReport", "TableSchema", "TimeSeriesTable",
    "WindowedSamples", "apply_overrides", "baseline_search", "chrono_split", "class_metrics",
    "comparison_rows", "config_hash", "confusion", "entropy_classification_table",
    "entropy_regression_table", "from_dict", "load_config", "load_feature_table", "load_table",
    "make_windows", "mape", "render_table", "rmse", "run_classification_experiment",
    "run_experiment", "run_regression_experiment", "stratified_split", "to_dict",
]
