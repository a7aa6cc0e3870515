"""Synthetic data, splitting, metrics and the multi-attempt training protocol."""
from .metrics import EvalMetrics, compute_metrics, confusion, majority_vote
from .runner import (PUBLISHED_REFERENCE, AttemptResult, BenchmarkResult, ModelSpec, PreparedData,
                     TrainConfig, compare_preprocessing, prepare_data, run_attempt, run_benchmark)
from .split import SplitSpec, split_dataset
from .synthetic import SyntheticSpec, generate_synthetic, generate_synthetic_with_truth

__all__ = [
    "EvalMetrics", "compute_metrics", "confusion", "majority_vote",
    "PUBLISHED_REFERENCE", "AttemptResult", "BenchmarkResult", "ModelSpec", "PreparedData",
    "TrainConfig", "compare_preprocessing", "prepare_data", "run_attempt", "run_benchmark",
    "SplitSpec", "split_dataset",
    "SyntheticSpec", "generate_synthetic", "generate_synthetic_with_truth",
]
